// core/src/decode.cpp

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

#include "mmcap/decode.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <tuple>

#include "json.hpp"
#include "mmcap/error.hpp"
#include "mmcap/ops.hpp"

namespace mmcap {

double Hypothesis::score() const {
  const std::size_t n = tokens.size() + (ended_with_eos ? 1 : 0);
  return n == 0 ? log_prob : log_prob / static_cast<double>(n);
}

bool can_generate(TokenId id) { return id != kPad && id != kBos && id != kMask && id != kCls; }

namespace {

bool better_final(const Hypothesis& a, const Hypothesis& b) {
  const double sa = a.score(), sb = b.score();
  if (sa != sb) return sa > sb;
  return a.tokens < b.tokens;
}

void check_rows(const std::vector<std::vector<double>>& rows, std::size_t expected) {
  if (rows.size() != expected)
    throw DimensionError("scorer returned " + std::to_string(rows.size()) + " rows for " +
                         std::to_string(expected) + " prefixes");
}

}  // namespace

Hypothesis greedy_decode(const NextTokenScorer& scorer, std::size_t max_len) {
  Hypothesis h;
  while (!h.finished) {
    std::vector<std::vector<TokenId>> prefix{h.tokens};
    auto rows = scorer(prefix);
    check_rows(rows, 1);
    const auto& lp = rows[0];
    TokenId best = -1;
    for (std::size_t v = 0; v < lp.size(); ++v) {
      const auto id = static_cast<TokenId>(v);
      if (can_generate(id) && (best < 0 || lp[v] > lp[static_cast<std::size_t>(best)])) best = id;
    }
    if (best < 0) throw ContractError("scorer vocabulary has no generatable token");
    h.log_prob += lp[static_cast<std::size_t>(best)];
    if (best == kEos) {
      h.finished = h.ended_with_eos = true;
    } else {
      h.tokens.push_back(best);
      if (h.tokens.size() >= max_len) h.finished = true;
    }
  }
  return h;
}

Hypothesis beam_search(const NextTokenScorer& scorer, const DecodeOptions& options) {
  if (options.beam == 0) throw ContractError("beam width must be at least 1");
  const std::size_t K = options.beam;
  Hypothesis greedy = greedy_decode(scorer, options.max_len);
  if (K == 1) return greedy;

  std::vector<Hypothesis> active{Hypothesis{}}, finished;
  struct Candidate {
    double log_prob;
    std::size_t parent;
    TokenId token;
  };
  while (!active.empty() && finished.size() < K) {
    std::vector<std::vector<TokenId>> prefixes;
    for (const auto& h : active) prefixes.push_back(h.tokens);
    auto rows = scorer(prefixes);
    check_rows(rows, active.size());
    std::vector<Candidate> cand;
    for (std::size_t p = 0; p < active.size(); ++p)
      for (std::size_t v = 0; v < rows[p].size(); ++v)
        if (can_generate(static_cast<TokenId>(v)))
          cand.push_back({active[p].log_prob + rows[p][v], p, static_cast<TokenId>(v)});
    const std::size_t keep = std::min(K, cand.size());
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(keep), cand.end(),
                      [](const Candidate& a, const Candidate& b) {
                        return std::tie(b.log_prob, a.parent, a.token) < std::tie(a.log_prob, b.parent, b.token);
                      });
    std::vector<Hypothesis> next;
    for (std::size_t i = 0; i < keep; ++i) {
      Hypothesis h = active[cand[i].parent];
      h.log_prob = cand[i].log_prob;
      if (cand[i].token == kEos) {
        h.finished = h.ended_with_eos = true;
        finished.push_back(std::move(h));
        continue;
      }
      h.tokens.push_back(cand[i].token);
      if (h.tokens.size() >= options.max_len) {
        h.finished = true;
        finished.push_back(std::move(h));
      } else {
        next.push_back(std::move(h));
      }
    }
    active = std::move(next);
  }
  finished.push_back(std::move(greedy));
  return *std::min_element(finished.begin(), finished.end(), better_final);
}

template <typename T>
EncoderOutput<T> select_examples(const EncoderOutput<T>& enc, std::span<const std::size_t> rows) {
  EncoderOutput<T> out;
  out.batch = rows.size();
  auto gather = [&](const Tensor<T>& states, std::size_t len, const std::vector<std::uint8_t>& mask,
                    Tensor<T>& dst, std::vector<std::uint8_t>& dst_mask) {
    std::vector<std::int32_t> ids;
    for (auto r : rows) {
      if (r >= enc.batch) throw DimensionError("example " + std::to_string(r) + " of " + std::to_string(enc.batch));
      for (std::size_t t = 0; t < len; ++t) {
        ids.push_back(static_cast<std::int32_t>(r * len + t));
        dst_mask.push_back(mask[r * len + t]);
      }
    }
    dst = gather_rows(states, std::span<const std::int32_t>(ids));
  };
  if (enc.has_text()) {
    out.text_len = enc.text_len;
    gather(enc.text, enc.text_len, enc.text_mask, out.text, out.text_mask);
    for (auto r : rows)
      out.text_ids.insert(out.text_ids.end(), enc.text_ids.begin() + static_cast<std::ptrdiff_t>(r * enc.text_len),
                          enc.text_ids.begin() + static_cast<std::ptrdiff_t>((r + 1) * enc.text_len));
  }
  if (enc.has_video()) {
    out.video_len = enc.video_len;
    gather(enc.video, enc.video_len, enc.video_mask, out.video, out.video_mask);
  }
  return out;
}

template <typename T>
NextTokenScorer model_scorer(const Model<T>& model, const EncoderOutput<T>& enc, std::size_t index,
                             Style target_style) {
  return [&model, &enc, index, target_style](std::span<const std::vector<TokenId>> prefixes) {
    NoGradGuard no_grad;
    const std::size_t B = prefixes.size();
    std::vector<std::size_t> rows(B, index);
    auto sub = select_examples(enc, rows);
    std::vector<std::vector<TokenId>> inputs;
    for (const auto& p : prefixes) {
      std::vector<TokenId> in{kBos};
      in.insert(in.end(), p.begin(), p.end());
      inputs.push_back(std::move(in));
    }
    std::vector<Style> styles(B, target_style);
    auto grid = pad_sequences(inputs, styles);
    auto logits = model.decode_forward(grid, {}, sub, {}, {});
    const std::size_t V = logits.cols(), L = grid.length;
    std::vector<std::vector<double>> out(B);
    for (std::size_t b = 0; b < B; ++b) {
      auto row = logits.data().subspan((b * L + inputs[b].size() - 1) * V, V);
      double mx = -INFINITY;
      for (auto x : row) mx = std::max(mx, static_cast<double>(x));
      double z = 0.0;
      for (auto x : row) z += std::exp(static_cast<double>(x) - mx);
      const double lz = mx + std::log(z);
      out[b].resize(V);
      for (std::size_t v = 0; v < V; ++v) out[b][v] = static_cast<double>(row[v]) - lz;
    }
    return out;
  };
}

std::vector<Prediction> predict_captions(const Model<float>& model, const Vocabulary& vocab,
                                         const Dataset& data, std::span<const std::size_t> segments,
                                         bool with_video, const DecodeOptions& options,
                                         std::size_t batch_size) {
  NoGradGuard no_grad;
  const bool video = with_video && model.config().use_video;
  const std::size_t feature_dim = model.config().use_video ? model.config().video_feature_dim : 0;
  std::vector<Prediction> out;
  for (std::size_t first = 0; first < segments.size(); first += batch_size) {
    const std::size_t last = std::min(segments.size(), first + batch_size);
    std::vector<EncoderExample> ex;
    for (std::size_t k = first; k < last; ++k)
      ex.push_back(segment_input(data.segments().at(segments[k]), Style::kAsr, video));
    auto batch = make_batch(ex, data.max_text(), data.max_frames(), feature_dim);
    auto enc = model.encode(&batch.text, video ? &batch.video : nullptr, {});
    for (std::size_t k = first; k < last; ++k) {
      const auto& seg = data.segments()[segments[k]];
      auto h = beam_search(model_scorer(model, enc, k - first), options);
      out.push_back({seg.video_id, seg.seg_index, vocab.decode(h.tokens)});
    }
  }
  return out;
}

void write_predictions(const std::string& path, std::span<const Prediction> predictions) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  for (const auto& p : predictions) {
    nlohmann::ordered_json j;
    j["video_id"] = p.video_id;
    j["seg_index"] = p.seg_index;
    j["caption"] = p.caption;
    out << j.dump() << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

std::vector<Prediction> read_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<Prediction> out;
  std::string line;
  long n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      for (const char* key : {"video_id", "seg_index", "caption"})
        if (!j.contains(key)) throw DataError(path + ": missing field \"" + std::string(key) + "\"", n);
      out.push_back({j.at("video_id").get<std::string>(), j.at("seg_index").get<std::int64_t>(),
                     j.at("caption").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path + ": " + e.what(), n);
    }
  }
  return out;
}

template EncoderOutput<float> select_examples(const EncoderOutput<float>&, std::span<const std::size_t>);
template EncoderOutput<double> select_examples(const EncoderOutput<double>&, std::span<const std::size_t>);
template NextTokenScorer model_scorer(const Model<float>&, const EncoderOutput<float>&, std::size_t, Style);
template NextTokenScorer model_scorer(const Model<double>&, const EncoderOutput<double>&, std::size_t, Style);

}  // namespace mmcap
