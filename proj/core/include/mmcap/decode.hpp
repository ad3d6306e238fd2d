// core/include/mmcap/decode.hpp

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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mmcap/model.hpp"
#include "mmcap/objectives.hpp"

namespace mmcap {

inline constexpr std::size_t kDefaultBeam = 4;
inline constexpr std::size_t kDefaultMaxDecodeLength = 32;

struct DecodeOptions {
  std::size_t beam = kDefaultBeam;
  std::size_t max_len = kDefaultMaxDecodeLength;  // generated tokens, EOS excluded
};

struct Hypothesis {
  std::vector<TokenId> tokens;  // without BOS/EOS
  double log_prob = 0.0;
  bool finished = false;
  bool ended_with_eos = false;

  /// Log-probability per scored token (EOS counts as a token).
  double score() const;
};

/// Log-probabilities of the next token for each prefix (one row of size V
/// per prefix). Prefixes exclude BOS.
using NextTokenScorer =
    std::function<std::vector<std::vector<double>>(std::span<const std::vector<TokenId>> prefixes)>;

/// PAD, BOS, MASK and CLS are never generated.
bool can_generate(TokenId id);

Hypothesis greedy_decode(const NextTokenScorer& scorer, std::size_t max_len = kDefaultMaxDecodeLength);

/// Length-normalized beam search. Candidates are ranked by cumulative
/// log-probability (ties: parent rank, then smaller token id); finished
/// hypotheses by score(), ties broken by the lexicographically smaller
/// token sequence. The greedy hypothesis always competes in the final
/// ranking, so a wider beam never scores below greedy. beam = 1 is greedy.
Hypothesis beam_search(const NextTokenScorer& scorer, const DecodeOptions& options = {});

/// Rows of `rows` from a packed encoder output, in order (rows may repeat).
template <typename T>
EncoderOutput<T> select_examples(const EncoderOutput<T>& enc, std::span<const std::size_t> rows);

/// Scorer that runs the decoder over example `index` of `enc`.
template <typename T>
NextTokenScorer model_scorer(const Model<T>& model, const EncoderOutput<T>& enc, std::size_t index,
                             Style target_style = Style::kCap);

struct Prediction {
  std::string video_id;
  std::int64_t seg_index = 0;
  std::string caption;

  bool operator==(const Prediction&) const = default;
};

/// Captions for the given segments of `data` (ASR, plus frames when
/// `with_video`), decoded with `options`.
std::vector<Prediction> predict_captions(const Model<float>& model, const Vocabulary& vocab,
                                         const Dataset& data, std::span<const std::size_t> segments,
                                         bool with_video, const DecodeOptions& options = {},
                                         std::size_t batch_size = 32);

/// Line-oriented JSON {video_id, seg_index, caption}.
void write_predictions(const std::string& path, std::span<const Prediction> predictions);
std::vector<Prediction> read_predictions(const std::string& path);

}  // namespace mmcap
