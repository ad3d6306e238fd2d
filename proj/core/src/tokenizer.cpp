// core/src/tokenizer.cpp

// Copyright 2026  The mmcap Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "mmcap/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include "mmcap/error.hpp"

namespace mmcap {

namespace {

constexpr std::string_view kFileMagic = "mmcap-bpe";
constexpr int kFileVersion = 1;
const char* const kSpecialNames[kNumSpecialTokens] = {"<pad>", "<s>",   "</s>",
                                                      "<mask>", "<cls>", "<unk>"};

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::vector<std::string_view> split_words(std::string_view text) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) words.push_back(text.substr(i, j - i));
    i = j;
  }
  return words;
}

std::string pair_key(std::string_view a, std::string_view b) {
  std::string k;
  k.reserve(a.size() + b.size() + 1);
  k.append(a);
  k.push_back('\x1f');
  k.append(b);
  return k;
}

std::vector<std::string> word_symbols(std::string_view word) {
  auto chars = utf8_chars(word);
  if (!chars.empty()) chars.back().append(kEndOfWord);
  return chars;
}

}  // namespace

std::vector<std::string> utf8_chars(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if (c >= 0xF0 && c < 0xF8) len = 4;
    else if (c >= 0xE0) len = c < 0xF0 ? 3 : 1;
    else if (c >= 0xC0) len = 2;
    if (i + len > text.size()) len = 1;
    for (std::size_t k = 1; k < len; ++k)
      if ((static_cast<unsigned char>(text[i + k]) & 0xC0) != 0x80) {
        len = 1;
        break;
      }
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

std::string normalize_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (auto w : split_words(text)) {
    if (!out.empty()) out.push_back(' ');
    for (char c : w) out.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c);
  }
  return out;
}

Vocabulary::Vocabulary() {
  for (auto name : kSpecialNames) tokens_.emplace_back(name);
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
    throw DataError("token id " + std::to_string(id) + " outside vocabulary of " +
                    std::to_string(tokens_.size()));
  return tokens_[static_cast<std::size_t>(id)];
}

std::optional<TokenId> Vocabulary::find(std::string_view subword) const {
  auto it = index_.find(std::string(subword));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void Vocabulary::add_token(std::string text) {
  if (index_.count(text)) return;
  const auto id = static_cast<TokenId>(tokens_.size());
  index_.emplace(text, id);
  tokens_.push_back(std::move(text));
}

void Vocabulary::rebuild_index() {
  index_.clear();
  rank_.clear();
  for (std::size_t i = kNumSpecialTokens; i < tokens_.size(); ++i)
    index_.emplace(tokens_[i], static_cast<TokenId>(i));
  for (std::size_t r = 0; r < merges_.size(); ++r)
    rank_.emplace(pair_key(merges_[r].first, merges_[r].second), r);
}

std::vector<std::string> Vocabulary::apply_merges(std::string_view word) const {
  auto sym = word_symbols(word);
  while (sym.size() > 1) {
    std::size_t best_rank = SIZE_MAX;
    for (std::size_t i = 0; i + 1 < sym.size(); ++i) {
      auto it = rank_.find(pair_key(sym[i], sym[i + 1]));
      if (it != rank_.end() && it->second < best_rank) best_rank = it->second;
    }
    if (best_rank == SIZE_MAX) break;
    const auto& [left, right] = merges_[best_rank];
    std::vector<std::string> next;
    next.reserve(sym.size());
    std::size_t i = 0;
    while (i < sym.size()) {
      if (i + 1 < sym.size() && sym[i] == left && sym[i + 1] == right) {
        next.push_back(sym[i] + sym[i + 1]);
        i += 2;
      } else {
        next.push_back(std::move(sym[i]));
        ++i;
      }
    }
    sym = std::move(next);
  }
  return sym;
}

std::vector<TokenId> Vocabulary::encode(std::string_view text) const {
  std::vector<TokenId> ids;
  const std::string norm = normalize_text(text);
  for (auto word : split_words(norm))
    for (const auto& s : apply_merges(word)) {
      auto it = index_.find(s);
      ids.push_back(it == index_.end() ? kUnk : it->second);
    }
  return ids;
}

std::string Vocabulary::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) {
    const std::string& t = token(id);
    if (id < kNumSpecialTokens) continue;
    if (t.size() >= kEndOfWord.size() &&
        std::string_view(t).substr(t.size() - kEndOfWord.size()) == kEndOfWord) {
      out.append(t, 0, t.size() - kEndOfWord.size());
      out.push_back(' ');
    } else {
      out.append(t);
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

void Vocabulary::save(std::ostream& out) const {
  out << kFileMagic << ' ' << kFileVersion << ' ' << merges_.size() << ' ' << tokens_.size() << ' '
      << base_size_ << '\n';
  for (const auto& [a, b] : merges_) out << a << ' ' << b << '\n';
  for (std::size_t i = 0; i < tokens_.size(); ++i) out << i << '\t' << tokens_[i] << '\n';
  if (!out) throw Error("vocabulary: write failed");
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("vocabulary: cannot open " + path + " for writing");
  save(f);
}

Vocabulary Vocabulary::load(std::istream& in) {
  std::string line;
  long lineno = 1;
  if (!std::getline(in, line)) throw DataError("vocabulary: empty file", lineno);
  std::istringstream header(line);
  std::string magic;
  int version = 0;
  std::size_t n_merges = 0, n_tokens = 0, n_base = 0;
  if (!(header >> magic >> version >> n_merges >> n_tokens >> n_base) || magic != kFileMagic)
    throw DataError("vocabulary: bad header", lineno);
  if (version != kFileVersion)
    throw DataError("vocabulary: unsupported version " + std::to_string(version), lineno);

  Vocabulary v;
  v.tokens_.clear();
  for (std::size_t i = 0; i < n_merges; ++i) {
    ++lineno;
    if (!std::getline(in, line)) throw DataError("vocabulary: truncated merge list", lineno);
    auto sp = line.find(' ');
    if (sp == std::string::npos || line.find(' ', sp + 1) != std::string::npos)
      throw DataError("vocabulary: merge line must hold two symbols", lineno);
    v.merges_.emplace_back(line.substr(0, sp), line.substr(sp + 1));
  }
  for (std::size_t i = 0; i < n_tokens; ++i) {
    ++lineno;
    if (!std::getline(in, line)) throw DataError("vocabulary: truncated token table", lineno);
    auto tab = line.find('\t');
    if (tab == std::string::npos || line.substr(0, tab) != std::to_string(i))
      throw DataError("vocabulary: expected id " + std::to_string(i), lineno);
    v.tokens_.push_back(line.substr(tab + 1));
  }
  if (n_tokens < kNumSpecialTokens) throw DataError("vocabulary: reserved ids missing");
  for (TokenId i = 0; i < kNumSpecialTokens; ++i)
    if (v.tokens_[static_cast<std::size_t>(i)] != kSpecialNames[i])
      throw DataError("vocabulary: reserved id " + std::to_string(i) + " is not " +
                      kSpecialNames[i]);
  v.base_size_ = n_base;
  v.rebuild_index();
  return v;
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("vocabulary: cannot open " + path);
  return load(f);
}

Vocabulary train_bpe(std::span<const std::string> corpus, std::size_t target_size) {
  std::map<std::string, std::int64_t> word_counts;
  for (const auto& line : corpus) {
    const std::string norm = normalize_text(line);
    for (auto w : split_words(norm)) ++word_counts[std::string(w)];
  }
  if (word_counts.empty()) throw DataError("train_bpe: corpus contains no words");

  std::vector<std::vector<std::string>> words;
  std::vector<std::int64_t> freq;
  std::set<std::string> base;
  for (const auto& [w, c] : word_counts) {
    words.push_back(word_symbols(w));
    freq.push_back(c);
    base.insert(words.back().begin(), words.back().end());
  }

  Vocabulary vocab;
  if (target_size < kNumSpecialTokens + base.size())
    throw ContractError("train_bpe: target size " + std::to_string(target_size) +
                        " cannot hold " + std::to_string(kNumSpecialTokens) + " reserved ids and " +
                        std::to_string(base.size()) + " base characters");
  for (const auto& s : base) vocab.add_token(s);
  vocab.base_size_ = base.size();

  using Pair = std::pair<std::string, std::string>;
  std::map<Pair, std::int64_t> counts;
  std::map<Pair, std::set<std::size_t>> where;
  // Ordered by (-count, pair): begin() is the next merge.
  std::set<std::tuple<std::int64_t, std::string, std::string>> queue;

  auto bump = [&](const std::string& a, const std::string& b, std::int64_t delta, std::size_t w) {
    Pair p{a, b};
    auto& c = counts[p];
    if (c > 0) queue.erase({-c, a, b});
    c += delta;
    if (c > 0) queue.insert({-c, a, b});
    if (delta > 0) where[p].insert(w);
  };

  for (std::size_t w = 0; w < words.size(); ++w)
    for (std::size_t i = 0; i + 1 < words[w].size(); ++i)
      bump(words[w][i], words[w][i + 1], freq[w], w);

  while (vocab.size() < target_size && !queue.empty()) {
    auto [neg, left, right] = *queue.begin();
    if (-neg < 2) break;
    const Pair best{left, right};
    const std::string merged = left + right;
    vocab.merges_.push_back(best);
    vocab.add_token(merged);

    const auto affected = where[best];
    for (std::size_t w : affected) {
      auto& sym = words[w];
      bool present = false;
      for (std::size_t i = 0; i + 1 < sym.size(); ++i)
        if (sym[i] == left && sym[i + 1] == right) present = true;
      if (!present) continue;
      for (std::size_t i = 0; i + 1 < sym.size(); ++i) bump(sym[i], sym[i + 1], -freq[w], w);
      std::vector<std::string> next;
      for (std::size_t i = 0; i < sym.size();) {
        if (i + 1 < sym.size() && sym[i] == left && sym[i + 1] == right) {
          next.push_back(merged);
          i += 2;
        } else {
          next.push_back(sym[i]);
          ++i;
        }
      }
      sym = std::move(next);
      for (std::size_t i = 0; i + 1 < sym.size(); ++i) bump(sym[i], sym[i + 1], freq[w], w);
    }
    where.erase(best);
  }
  vocab.rebuild_index();
  return vocab;
}

}  // namespace mmcap
