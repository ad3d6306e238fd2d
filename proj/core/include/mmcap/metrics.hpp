// core/include/mmcap/metrics.hpp

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
#include <span>
#include <string>
#include <vector>

#include "mmcap/corpus.hpp"

namespace mmcap {

using Words = std::vector<std::string>;

/// Lower-cases ASCII and splits on anything that is not a letter, digit or
/// apostrophe.
Words eval_tokenize(const std::string& text);

inline constexpr double kRougeBeta = 1.2;
inline constexpr double kCiderSigma = 6.0;

/// Corpus BLEU-n on a 0..100 scale: clipped n-gram precisions summed over
/// the corpus, geometric mean over 1..n, brevity penalty exp(1 - r/c) when
/// c < r. No smoothing. Throws DataError on an empty corpus or a length
/// mismatch.
double bleu(std::span<const Words> candidates, std::span<const Words> references, int n);

/// LCS F-measure with recall weight beta for one pair, in [0, 1].
double rouge_l_pair(const Words& candidate, const Words& reference, double beta = kRougeBeta);
/// Mean of rouge_l_pair over the corpus, 0..100.
double rouge_l(std::span<const Words> candidates, std::span<const Words> references);

/// Per-pair CIDEr-D (0..10), document frequencies taken from `references`.
std::vector<double> cider_d_scores(std::span<const Words> candidates, std::span<const Words> references,
                                   double sigma = kCiderSigma);
double cider_d(std::span<const Words> candidates, std::span<const Words> references);

struct SegmentScore {
  std::string video_id;
  std::int64_t seg_index = 0;
  std::string candidate;
  std::string reference;
  double rouge_l = 0.0;  // 0..100
  double cider_d = 0.0;  // 0..10
};

struct EvalReport {
  std::size_t count = 0;
  double bleu1 = 0.0;    // 0..100
  double bleu4 = 0.0;    // 0..100
  double rouge_l = 0.0;  // 0..100
  double cider_d = 0.0;  // 0..10; tables also list cider_d * 100
  std::vector<SegmentScore> segments;

  std::string to_table(const std::string& title = "") const;
  /// metric,value,scale
  std::string summary_csv() const;
  std::string segments_csv() const;
};

/// Scores raw caption strings. An empty corpus gives an all-zero report.
/// `ids` (optional) labels segments as (video_id, seg_index).
EvalReport evaluate(std::span<const std::string> candidates, std::span<const std::string> references,
                    std::span<const std::pair<std::string, std::int64_t>> ids = {});

EvalReport constant_baseline(std::span<const std::string> references, const std::string& constant);

struct TimelineEntry {
  std::int64_t start = 0;  // index of the ASR sentence the tag starts at
  std::string tag;
};

struct Annotation {
  std::string video_id;
  std::string annotator;
  std::vector<TimelineEntry> timeline;
};

struct AgreementPair {
  std::string video_id;
  std::int64_t start = 0;
  std::string reference;   // earlier annotator
  std::string prediction;  // later annotator
};

/// For every video and every pair of its annotators (in order of
/// appearance), pairs up tags that start at the same sentence. Tags are
/// standardized with `tags` when given.
std::vector<AgreementPair> agreement_pool(std::span<const Annotation> annotations, const TagTable* tags = nullptr);
EvalReport evaluate_agreement(std::span<const AgreementPair> pool);

/// Line-oriented JSON {video_id, annotator, timeline: [{start, tag}, ...]}.
std::vector<Annotation> load_annotations(const std::string& path);

}  // namespace mmcap
