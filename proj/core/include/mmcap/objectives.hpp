// core/include/mmcap/objectives.hpp

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
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mmcap/corpus.hpp"
#include "mmcap/model.hpp"
#include "mmcap/optim.hpp"
#include "mmcap/rng.hpp"
#include "mmcap/tokenizer.hpp"

namespace mmcap {

// ---------------------------------------------------------------------------
// Step kinds and schedules

enum class StepKind {
  kCapToCap,       // MASS on caption-style text
  kAsrToAsr,       // MASS on ASR
  kAsrVideoToAsr,  // MASS on ASR with the segment's frames
  kAlign,          // ASR + frames -> same segment?
  kOrder,          // ASR + frames -> ASR comes first?
  kAsrToCap,
  kCapToAsr,
  kAsrVideoToCap,
  kCapVideoToAsr,
};

struct StepInfo {
  Style input_style;
  bool video;
  bool mass;            // masked reconstruction of the input
  bool classification;  // ALIGN / ORDER
  Style target_style;
};

StepInfo step_info(StepKind kind);
std::string step_kind_name(StepKind kind);

struct Step {
  StepKind kind;
  double hide_fraction = 0.0;  // share of examples whose text states the decoder cannot see
  bool operator==(const Step&) const = default;
};

enum class Strategy { kMass, kMassVid, kMassDrop, kMassAlign, kUniD, kBiD, kBiDalt };

Strategy parse_strategy(const std::string& name);  // ConfigError when unknown
std::string strategy_name(Strategy s);
bool is_pretraining(Strategy s);

inline constexpr std::int64_t kIterationsPerEpoch = 3125;
inline constexpr std::int64_t kPretrainEpochs = 200;
inline constexpr std::int64_t kFinetuneEpochs = 30;
inline constexpr double kDefaultMaskRatio = 0.5;
inline constexpr double kDefaultHideFraction = 0.25;

struct Schedule {
  Strategy strategy;
  std::vector<Step> steps;  // executed in order, once per iteration
  std::int64_t iterations_per_epoch = kIterationsPerEpoch;
  std::int64_t epochs = 0;
};

/// Steps per iteration for a strategy. `multimodal` picks the video variant
/// of UniD / BiD; BiDalt and the video pretraining strategies require it.
Schedule make_schedule(Strategy strategy, bool multimodal, double hide_fraction = kDefaultHideFraction);

// ---------------------------------------------------------------------------
// MASS

struct MassSpan {
  std::size_t start = 0;
  std::size_t length = 0;
};

/// length = max(1, round(ratio * L)), start uniform in [0, L - length].
/// Empty for L < 2.
std::optional<MassSpan> sample_mass_span(std::size_t length, double ratio, Rng& rng);

struct MassExample {
  std::vector<TokenId> encoder_input;    // span replaced by MASK
  std::vector<TokenId> decoder_input;    // BOS + span without its last token
  std::vector<TokenId> targets;          // the span
  std::vector<std::int32_t> positions;   // original positions of the span
  std::vector<std::uint8_t> loss_mask;   // one per decoder position
};

/// Throws ContractError when the span is out of bounds or empty.
MassExample build_mass_example(std::span<const TokenId> ids, MassSpan span);

// ---------------------------------------------------------------------------
// Alignment and ordering pairs

struct SegmentPair {
  std::size_t asr = 0;     // segment providing the ASR
  std::size_t frames = 0;  // segment providing the frames
  std::uint8_t label = 0;
};

/// Positive: a random segment paired with itself (label 1). Negative: a
/// uniformly drawn pair at least two segments apart (label 0); needs >= 3
/// segments. Empty when the video is too short.
std::optional<SegmentPair> sample_alignment_pair(std::size_t segments, Rng& rng, bool positive);

/// Uniform pair at least two segments apart; label 1 when the ASR comes
/// first. Empty for fewer than 3 segments.
std::optional<SegmentPair> sample_ordering_pair(std::size_t segments, Rng& rng);

inline std::uint8_t ordering_label(std::size_t asr, std::size_t frames) { return asr < frames ? 1 : 0; }

// ---------------------------------------------------------------------------
// Training data

struct TextSegment {
  std::string video_id;
  std::int64_t seg_index = 0;
  std::vector<TokenId> asr;
  std::vector<TokenId> caption;  // empty without supervision
  FrameFeatures frames;
};

/// Tokenized segments grouped by video, plus an unpaired caption-style
/// corpus. Text is truncated to max_text subwords and frames to max_frames.
class Dataset {
 public:
  explicit Dataset(std::size_t max_text = kMaxTextSubwords, std::size_t max_frames = kMaxFrames)
      : max_text_(max_text), max_frames_(max_frames) {}

  void add_segment(const Vocabulary& vocab, const std::string& video_id, std::int64_t seg_index,
                   const std::string& asr, FrameFeatures frames, const std::string& caption = "");
  void add_cap_text(const Vocabulary& vocab, const std::string& text);

  /// Reads a segment file; frame paths are resolved against the file's
  /// directory when relative.
  void load_segments(const Vocabulary& vocab, const std::string& path, RecordKind kind,
                     FrameStore& frames);

  const std::vector<TextSegment>& segments() const { return segments_; }
  const std::vector<std::vector<TokenId>>& cap_texts() const { return cap_texts_; }
  /// Segment indices per video, in seg_index order.
  const std::vector<std::vector<std::size_t>>& videos() const;
  std::size_t max_text() const { return max_text_; }
  std::size_t max_frames() const { return max_frames_; }

 private:
  std::size_t max_text_, max_frames_;
  std::vector<TextSegment> segments_;
  std::vector<std::vector<TokenId>> cap_texts_;
  mutable std::vector<std::vector<std::size_t>> videos_;
  mutable bool videos_dirty_ = true;
};

/// Encoder input of a segment: its ASR (or caption) and, if asked, frames.
EncoderExample segment_input(const TextSegment& seg, Style style, bool with_video);

/// Decoder grid for full-sequence targets: BOS + seq as inputs, seq + EOS
/// as targets.
struct TargetBatch {
  TokenGrid inputs;
  std::vector<std::int32_t> targets;
  std::vector<std::uint8_t> loss_mask;
};
TargetBatch make_target_batch(std::span<const std::vector<TokenId>> seqs, Style style);

// ---------------------------------------------------------------------------
// Trainer

struct TrainerConfig {
  Schedule schedule;
  std::size_t batch_size = 32;
  double mask_ratio = kDefaultMaskRatio;
  std::uint64_t seed = 1;
  AdamConfig adam;
};

struct StepResult {
  StepKind kind;
  double loss = 0.0;
  double lr = 0.0;
};

/// Runs the schedule over a model. All randomness for iteration i and step
/// s is derived from (seed, i, s), and each step kind walks its own shuffled
/// pass over its pool, so any iteration can be recomputed from the
/// parameters and optimizer state alone.
class Trainer {
 public:
  Trainer(Model<float>& model, const Dataset& data, TrainerConfig config);

  const TrainerConfig& config() const { return config_; }
  AdamState<float>& optimizer() { return optimizer_; }
  const AdamState<float>& optimizer() const { return optimizer_; }

  /// Forward pass of one step (no update); gradients are not touched.
  Tensor<float> step_loss(std::size_t step_index, std::int64_t iteration) const;
  /// step_loss, backward, one Adam update.
  StepResult run_training_step(std::size_t step_index, std::int64_t iteration);
  /// Every step of the schedule for one iteration.
  std::vector<StepResult> run_iteration(std::int64_t iteration);

  /// Number of examples a step kind draws from.
  std::size_t pool_size(StepKind kind) const;

 private:
  std::vector<std::size_t> draw(StepKind kind, std::int64_t iteration) const;

  Model<float>& model_;
  const Dataset& data_;
  TrainerConfig config_;
  AdamState<float> optimizer_;
  std::vector<std::size_t> mass_asr_pool_, cap_pool_, paired_pool_, video_pool_;
};

/// Optimizer moments plus the next iteration to run ("MMOPT1" binary).
void save_training_state(const std::string& path, const AdamState<float>& state, std::int64_t next_iteration);
std::int64_t load_training_state(const std::string& path, AdamState<float>& state);

/// CSV log: epoch,iteration,step_kind,loss,lr,wall_ms
class TrainingLog {
 public:
  /// Appends when the file exists, otherwise writes the header first.
  explicit TrainingLog(const std::string& path);
  void write(std::int64_t epoch, std::int64_t iteration, const StepResult& r, double wall_ms);

 private:
  std::ofstream out_;
};

// ---------------------------------------------------------------------------
// Evaluation helpers

/// Teacher-forced next-token accuracy of caption prediction (BOS..EOS) on
/// the given segments.
double teacher_forced_accuracy(const Model<float>& model, const Dataset& data,
                               std::span<const std::size_t> segments, bool with_video);

/// Accuracy of a CLS head on pairs sampled from every video with >= 3
/// segments (`per_video` draws each, half positive for alignment).
double classification_accuracy(const Model<float>& model, const Dataset& data, ClsTask task,
                               std::size_t per_video, std::uint64_t seed);

}  // namespace mmcap
