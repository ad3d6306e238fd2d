// core/include/mmcap/synthetic.hpp

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
#include <string>
#include <vector>

#include "mmcap/corpus.hpp"
#include "mmcap/rng.hpp"

namespace mmcap {

/// One step of a synthetic how-to video.
struct SyntheticSegment {
  std::size_t verb = 0;
  std::size_t noun = 0;
  std::string asr;
  std::string caption;  // "<gerund> <noun>"
  std::vector<TimedToken> tokens;
  FrameFeatures frames;
};

struct SyntheticVideo {
  std::string id;
  std::vector<SyntheticSegment> segments;
  FrameFeatures timeline;  // one frame per second over the whole video
};

/// A tiny instructional-video world with learnable structure:
///  - ASR mentions the step's verb (base form and gerund) and its noun
///    among filler words; the caption is "<gerund> <noun>".
///  - Verbs have a fixed rank and a video's steps use strictly increasing
///    ranks, so temporal order is recoverable from content.
///  - Each noun takes a few verbs (always including verb noun % num_verbs()),
///    so a verb narrows down its noun and vice versa.
///  - A frame is noun vector + verb vector + Gaussian noise.
/// `extra_nouns` appends pronounceable made-up nouns to the 16 built-in ones.
class SyntheticWorld {
 public:
  explicit SyntheticWorld(std::uint64_t seed, std::size_t feature_dim = 16,
                          double frame_noise = 0.3, std::size_t extra_nouns = 0);

  std::size_t num_verbs() const;
  std::size_t num_nouns() const;
  std::size_t feature_dim() const { return feature_dim_; }

  std::string asr_sentence(std::size_t verb, std::size_t noun, Rng& rng) const;
  std::string caption(std::size_t verb, std::size_t noun) const;
  std::string random_asr_sentence(Rng& rng) const;
  std::string random_caption(Rng& rng) const;
  /// A noun that goes with `verb`.
  std::size_t random_noun(std::size_t verb, Rng& rng) const;
  std::vector<float> frame(std::size_t verb, std::size_t noun, Rng& rng) const;

  /// A video of `segments` steps (at most num_verbs()). Words are 0.4 s
  /// apart inside a step and steps are separated by 3 s of silence.
  SyntheticVideo make_video(const std::string& id, std::size_t segments, Rng& rng) const;

 private:
  std::size_t feature_dim_;
  double frame_noise_;
  std::vector<std::string> nouns_;
  std::vector<std::vector<float>> verb_vectors_;
  std::vector<std::vector<float>> noun_vectors_;
  std::vector<std::vector<std::size_t>> verb_nouns_;
  static constexpr std::size_t kVerbsPerNoun = 4;
};

/// Writes `videos` as a segment file (one record per step) plus one frame
/// file per video under `dir`. Returns the segment file path.
std::string write_synthetic_dataset(const std::string& dir, const std::string& name,
                                    const std::vector<SyntheticVideo>& videos, RecordKind kind);

}  // namespace mmcap
