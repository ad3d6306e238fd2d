// core/include/mmcap/tokenizer.hpp

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

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mmcap {

using TokenId = std::int32_t;

/// Reserved ids, always the first entries of every vocabulary.
enum SpecialToken : TokenId {
  kPad = 0,
  kBos = 1,
  kEos = 2,
  kMask = 3,
  kCls = 4,
  kUnk = 5,
};
inline constexpr TokenId kNumSpecialTokens = 6;

/// Which text stream a sequence belongs to; selects the style embedding.
enum class Style : std::int32_t { kAsr = 0, kCap = 1 };

/// Marks the last symbol of a word, so decoding can restore word breaks.
inline constexpr std::string_view kEndOfWord = "</w>";

/// Lowercases ASCII and collapses whitespace runs to single spaces.
std::string normalize_text(std::string_view text);

/// Byte-pair-encoding subword vocabulary.
///
/// Words are whitespace-delimited and split into UTF-8 characters, the last
/// one carrying kEndOfWord. Merges are applied in training order; anything
/// the table cannot express becomes kUnk.
class Vocabulary {
 public:
  using Merge = std::pair<std::string, std::string>;

  Vocabulary();

  std::size_t size() const { return tokens_.size(); }
  const std::vector<Merge>& merges() const { return merges_; }
  const std::string& token(TokenId id) const;
  std::optional<TokenId> find(std::string_view subword) const;
  /// Number of single-character symbols (ids right after the reserved ones).
  std::size_t base_size() const { return base_size_; }

  std::vector<TokenId> encode(std::string_view text) const;
  /// Drops reserved ids; throws DataError on ids outside the table.
  std::string decode(std::span<const TokenId> ids) const;

  void save(std::ostream& out) const;
  void save(const std::string& path) const;
  static Vocabulary load(std::istream& in);
  static Vocabulary load(const std::string& path);

  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_ && merges_ == other.merges_ && base_size_ == other.base_size_;
  }

 private:
  friend Vocabulary train_bpe(std::span<const std::string> corpus, std::size_t target_size);

  void add_token(std::string text);
  void rebuild_index();
  std::vector<std::string> apply_merges(std::string_view word) const;

  std::vector<std::string> tokens_;
  std::vector<Merge> merges_;
  std::size_t base_size_ = 0;
  std::unordered_map<std::string, TokenId> index_;     // ordinary tokens only
  std::unordered_map<std::string, std::size_t> rank_;  // "left\x1fright" -> merge rank
};

/// Greedy BPE: repeatedly merges the most frequent adjacent pair (ties go to
/// the lexicographically smallest pair) until the vocabulary reaches
/// target_size or no pair occurs twice.
///
/// Throws DataError for a corpus without words and ContractError when
/// target_size cannot hold the reserved ids plus the base characters.
Vocabulary train_bpe(std::span<const std::string> corpus, std::size_t target_size);

/// Splits UTF-8 text into code-point strings. Invalid bytes stand alone.
std::vector<std::string> utf8_chars(std::string_view text);

}  // namespace mmcap
