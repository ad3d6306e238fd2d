// core/src/objectives.cpp

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

#include "mmcap/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <map>

#include "binary_io.hpp"
#include "mmcap/error.hpp"
#include "mmcap/ops.hpp"

namespace mmcap {

// ---------------------------------------------------------------------------
// Step kinds and schedules

StepInfo step_info(StepKind kind) {
  switch (kind) {
    case StepKind::kCapToCap: return {Style::kCap, false, true, false, Style::kCap};
    case StepKind::kAsrToAsr: return {Style::kAsr, false, true, false, Style::kAsr};
    case StepKind::kAsrVideoToAsr: return {Style::kAsr, true, true, false, Style::kAsr};
    case StepKind::kAlign: return {Style::kAsr, true, false, true, Style::kAsr};
    case StepKind::kOrder: return {Style::kAsr, true, false, true, Style::kAsr};
    case StepKind::kAsrToCap: return {Style::kAsr, false, false, false, Style::kCap};
    case StepKind::kCapToAsr: return {Style::kCap, false, false, false, Style::kAsr};
    case StepKind::kAsrVideoToCap: return {Style::kAsr, true, false, false, Style::kCap};
    case StepKind::kCapVideoToAsr: return {Style::kCap, true, false, false, Style::kAsr};
  }
  throw ContractError("unknown step kind");
}

std::string step_kind_name(StepKind kind) {
  switch (kind) {
    case StepKind::kCapToCap: return "CAP->CAP";
    case StepKind::kAsrToAsr: return "ASR->ASR";
    case StepKind::kAsrVideoToAsr: return "ASR+video->ASR";
    case StepKind::kAlign: return "ALIGN";
    case StepKind::kOrder: return "ORDER";
    case StepKind::kAsrToCap: return "ASR->CAP";
    case StepKind::kCapToAsr: return "CAP->ASR";
    case StepKind::kAsrVideoToCap: return "ASR+video->CAP";
    case StepKind::kCapVideoToAsr: return "CAP+video->ASR";
  }
  return "?";
}

namespace {

const std::vector<std::pair<Strategy, std::string>>& strategy_names() {
  static const std::vector<std::pair<Strategy, std::string>> names{
      {Strategy::kMass, "MASS"},   {Strategy::kMassVid, "MASSvid"}, {Strategy::kMassDrop, "MASSdrop"},
      {Strategy::kMassAlign, "MASSalign"}, {Strategy::kUniD, "UniD"}, {Strategy::kBiD, "BiD"},
      {Strategy::kBiDalt, "BiDalt"}};
  return names;
}

}  // namespace

Strategy parse_strategy(const std::string& name) {
  for (const auto& [s, n] : strategy_names())
    if (n == name) return s;
  throw ConfigError("strategy: unknown value '" + name +
                    "' (expected MASS, MASSvid, MASSdrop, MASSalign, UniD, BiD or BiDalt)");
}

std::string strategy_name(Strategy s) {
  for (const auto& [k, n] : strategy_names())
    if (k == s) return n;
  return "?";
}

bool is_pretraining(Strategy s) {
  return s == Strategy::kMass || s == Strategy::kMassVid || s == Strategy::kMassDrop ||
         s == Strategy::kMassAlign;
}

Schedule make_schedule(Strategy strategy, bool multimodal, double hide_fraction) {
  if (!(hide_fraction >= 0.0 && hide_fraction <= 1.0))
    throw ConfigError("hide_fraction must lie in [0, 1]");
  Schedule s;
  s.strategy = strategy;
  s.epochs = is_pretraining(strategy) ? kPretrainEpochs : kFinetuneEpochs;
  auto need_video = [&] {
    if (!multimodal) throw ConfigError("strategy " + strategy_name(strategy) + " needs a multimodal model");
  };
  switch (strategy) {
    case Strategy::kMass:
      s.steps = {{StepKind::kCapToCap}, {StepKind::kAsrToAsr}};
      break;
    case Strategy::kMassVid:
      need_video();
      s.steps = {{StepKind::kCapToCap}, {StepKind::kAsrVideoToAsr}};
      break;
    case Strategy::kMassDrop:
      need_video();
      s.steps = {{StepKind::kCapToCap}, {StepKind::kAsrVideoToAsr, hide_fraction}};
      break;
    case Strategy::kMassAlign:
      need_video();
      s.steps = {{StepKind::kCapToCap}, {StepKind::kAsrToAsr}, {StepKind::kAlign}, {StepKind::kOrder}};
      break;
    case Strategy::kUniD:
      s.steps = {{multimodal ? StepKind::kAsrVideoToCap : StepKind::kAsrToCap}};
      break;
    case Strategy::kBiD:
      s.steps = {{multimodal ? StepKind::kAsrVideoToCap : StepKind::kAsrToCap}, {StepKind::kCapToAsr}};
      break;
    case Strategy::kBiDalt:
      need_video();
      s.steps = {{StepKind::kAsrVideoToCap}, {StepKind::kCapVideoToAsr}};
      break;
  }
  return s;
}

// ---------------------------------------------------------------------------
// MASS

std::optional<MassSpan> sample_mass_span(std::size_t length, double ratio, Rng& rng) {
  if (length < 2) return std::nullopt;
  if (!(ratio > 0.0 && ratio <= 1.0)) throw ConfigError("mask_ratio must lie in (0, 1]");
  MassSpan s;
  s.length = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(ratio * static_cast<double>(length))),
                                     1, length);
  s.start = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(length - s.length)));
  return s;
}

MassExample build_mass_example(std::span<const TokenId> ids, MassSpan span) {
  if (span.length == 0 || span.start + span.length > ids.size())
    throw ContractError("mass span [" + std::to_string(span.start) + ", +" + std::to_string(span.length) +
                        ") outside a sequence of " + std::to_string(ids.size()));
  MassExample m;
  m.encoder_input.assign(ids.begin(), ids.end());
  for (std::size_t i = 0; i < span.length; ++i) {
    m.encoder_input[span.start + i] = kMask;
    m.targets.push_back(ids[span.start + i]);
    m.decoder_input.push_back(i == 0 ? kBos : ids[span.start + i - 1]);
    m.positions.push_back(static_cast<std::int32_t>(span.start + i));
    m.loss_mask.push_back(1);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Pairs

namespace {

std::vector<std::pair<std::size_t, std::size_t>> distant_pairs(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i + 2 <= j || j + 2 <= i) pairs.emplace_back(i, j);
  return pairs;
}

}  // namespace

std::optional<SegmentPair> sample_alignment_pair(std::size_t segments, Rng& rng, bool positive) {
  if (positive) {
    if (segments == 0) return std::nullopt;
    const auto i = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(segments) - 1));
    return SegmentPair{i, i, 1};
  }
  auto pairs = distant_pairs(segments);
  if (pairs.empty()) return std::nullopt;
  const auto& [i, j] = pairs[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(pairs.size()) - 1))];
  return SegmentPair{i, j, 0};
}

std::optional<SegmentPair> sample_ordering_pair(std::size_t segments, Rng& rng) {
  auto pairs = distant_pairs(segments);
  if (pairs.empty()) return std::nullopt;
  const auto& [i, j] = pairs[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(pairs.size()) - 1))];
  return SegmentPair{i, j, ordering_label(i, j)};
}

// ---------------------------------------------------------------------------
// Data

namespace {

std::vector<TokenId> encode_truncated(const Vocabulary& vocab, const std::string& text, std::size_t max_len) {
  auto ids = vocab.encode(text);
  if (ids.size() > max_len) ids.resize(max_len);
  return ids;
}

}  // namespace

void Dataset::add_segment(const Vocabulary& vocab, const std::string& video_id, std::int64_t seg_index,
                          const std::string& asr, FrameFeatures frames, const std::string& caption) {
  TextSegment s;
  s.video_id = video_id;
  s.seg_index = seg_index;
  s.asr = encode_truncated(vocab, asr, max_text_);
  s.caption = encode_truncated(vocab, caption, max_text_);
  frames.truncate(max_frames_);
  s.frames = std::move(frames);
  segments_.push_back(std::move(s));
  videos_dirty_ = true;
}

void Dataset::add_cap_text(const Vocabulary& vocab, const std::string& text) {
  cap_texts_.push_back(encode_truncated(vocab, text, max_text_));
}

void Dataset::load_segments(const Vocabulary& vocab, const std::string& path, RecordKind kind,
                            FrameStore& frames) {
  namespace fs = std::filesystem;
  const fs::path base = fs::path(path).parent_path();
  SegmentReader reader(path, kind);
  SegmentRecord r;
  while (reader.next(r)) {
    if (kind == RecordKind::kCapText) {
      add_cap_text(vocab, r.text);
      continue;
    }
    FrameFeatures f;
    if (!r.frames_path.empty() && r.frame_count > 0) {
      fs::path fp(r.frames_path);
      if (fp.is_relative()) fp = base / fp;
      try {
        f = frames.get(fp.string(), static_cast<std::size_t>(r.frame_offset),
                       std::min<std::size_t>(static_cast<std::size_t>(r.frame_count), max_frames_));
      } catch (const DataError& e) {
        throw DataError(e.what(), reader.line());
      }
    }
    add_segment(vocab, r.video_id, r.seg_index, r.asr_text(), std::move(f), r.caption);
  }
}

const std::vector<std::vector<std::size_t>>& Dataset::videos() const {
  if (videos_dirty_) {
    videos_.clear();
    std::map<std::string, std::size_t> slot;
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      auto [it, fresh] = slot.emplace(segments_[i].video_id, videos_.size());
      if (fresh) videos_.emplace_back();
      videos_[it->second].push_back(i);
    }
    for (auto& v : videos_)
      std::stable_sort(v.begin(), v.end(), [this](std::size_t a, std::size_t b) {
        return segments_[a].seg_index < segments_[b].seg_index;
      });
    videos_dirty_ = false;
  }
  return videos_;
}

EncoderExample segment_input(const TextSegment& seg, Style style, bool with_video) {
  EncoderExample e;
  e.text = style == Style::kAsr ? seg.asr : seg.caption;
  e.style = style;
  if (with_video) e.frames = seg.frames;
  return e;
}

TargetBatch make_target_batch(std::span<const std::vector<TokenId>> seqs, Style style) {
  std::vector<std::vector<TokenId>> inputs, targets;
  for (const auto& s : seqs) {
    std::vector<TokenId> in{kBos}, out(s.begin(), s.end());
    in.insert(in.end(), s.begin(), s.end());
    out.push_back(kEos);
    inputs.push_back(std::move(in));
    targets.push_back(std::move(out));
  }
  std::vector<Style> styles(seqs.size(), style);
  TargetBatch b;
  b.inputs = pad_sequences(inputs, styles);
  auto t = pad_sequences(targets, styles);
  b.targets.assign(t.ids.begin(), t.ids.end());
  b.loss_mask = t.mask;
  return b;
}

// ---------------------------------------------------------------------------
// Trainer

namespace {

template <typename V>
std::vector<V> pad_rows(const std::vector<std::vector<V>>& rows, std::size_t length, V fill) {
  std::vector<V> out(rows.size() * length, fill);
  for (std::size_t r = 0; r < rows.size(); ++r) std::copy(rows[r].begin(), rows[r].end(), out.begin() + static_cast<std::ptrdiff_t>(r * length));
  return out;
}

}  // namespace

Trainer::Trainer(Model<float>& model, const Dataset& data, TrainerConfig config)
    : model_(model), data_(data), config_(std::move(config)) {
  optimizer_.config = config_.adam;
  if (config_.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (config_.schedule.steps.empty()) throw ConfigError("schedule has no steps");
  for (std::size_t i = 0; i < data_.segments().size(); ++i) {
    const auto& s = data_.segments()[i];
    if (s.asr.size() >= 2) mass_asr_pool_.push_back(i);
    if (!s.caption.empty() && !s.asr.empty()) paired_pool_.push_back(i);
  }
  for (std::size_t i = 0; i < data_.cap_texts().size(); ++i)
    if (data_.cap_texts()[i].size() >= 2) cap_pool_.push_back(i);
  for (std::size_t v = 0; v < data_.videos().size(); ++v)
    if (data_.videos()[v].size() >= 3) video_pool_.push_back(v);
  for (const auto& step : config_.schedule.steps) {
    if (step_info(step.kind).video && !model_.config().use_video)
      throw ContractError("step " + step_kind_name(step.kind) + " needs a multimodal model");
    if (pool_size(step.kind) == 0)
      throw DataError("no training examples for step " + step_kind_name(step.kind));
  }
}

std::size_t Trainer::pool_size(StepKind kind) const {
  const auto info = step_info(kind);
  if (info.classification) return video_pool_.size();
  if (info.mass) return kind == StepKind::kCapToCap ? cap_pool_.size() : mass_asr_pool_.size();
  return paired_pool_.size();
}

std::vector<std::size_t> Trainer::draw(StepKind kind, std::int64_t iteration) const {
  const auto info = step_info(kind);
  const std::vector<std::size_t>& pool = info.classification ? video_pool_
                                         : info.mass ? (kind == StepKind::kCapToCap ? cap_pool_ : mass_asr_pool_)
                                                     : paired_pool_;
  const std::uint64_t n = pool.size(), B = config_.batch_size;
  std::vector<std::size_t> out;
  std::uint64_t cached_pass = UINT64_MAX;
  std::vector<std::size_t> perm;
  for (std::uint64_t b = 0; b < B; ++b) {
    const std::uint64_t k = static_cast<std::uint64_t>(iteration) * B + b;
    const std::uint64_t pass = k / n;
    if (pass != cached_pass) {
      perm = pool;
      Rng rng = make_rng(config_.seed, RngStream::kShuffle, static_cast<std::uint64_t>(kind), pass);
      shuffle(perm.begin(), perm.end(), rng);
      cached_pass = pass;
    }
    out.push_back(perm[k % n]);
  }
  return out;
}

Tensor<float> Trainer::step_loss(std::size_t step_index, std::int64_t iteration) const {
  const Step& step = config_.schedule.steps.at(step_index);
  const auto info = step_info(step.kind);
  const auto ids = draw(step.kind, iteration);
  const auto it = static_cast<std::uint64_t>(iteration);
  Rng mask_rng = make_rng(config_.seed, RngStream::kMasking, it, step_index);
  Rng sample_rng = make_rng(config_.seed, RngStream::kSampling, it, step_index);
  Rng drop_rng = make_rng(config_.seed, RngStream::kDropout, it, step_index);
  ForwardOptions opts{true, &drop_rng};
  const std::size_t feature_dim = model_.config().use_video ? model_.config().video_feature_dim : 0;
  const auto& segs = data_.segments();
  std::vector<EncoderExample> examples;

  if (info.classification) {
    std::vector<std::uint8_t> labels;
    for (std::size_t b = 0; b < ids.size(); ++b) {
      const auto& video = data_.videos()[ids[b]];
      const bool want = b % 2 == 0;
      SegmentPair pair;
      if (step.kind == StepKind::kAlign) {
        pair = *sample_alignment_pair(video.size(), sample_rng, want);
      } else {
        pair = *sample_ordering_pair(video.size(), sample_rng);
        if ((pair.label == 1) != want) pair = {pair.frames, pair.asr, ordering_label(pair.frames, pair.asr)};
      }
      EncoderExample e = segment_input(segs[video[pair.asr]], Style::kAsr, false);
      e.frames = segs[video[pair.frames]].frames;
      examples.push_back(std::move(e));
      labels.push_back(pair.label);
    }
    auto batch = make_batch(examples, data_.max_text(), data_.max_frames(), feature_dim);
    auto enc = model_.encode(&batch.text, &batch.video, opts);
    const ClsTask task = step.kind == StepKind::kAlign ? ClsTask::kAlignment : ClsTask::kOrdering;
    return binary_cross_entropy_with_logits(model_.cls_logits(task, enc), std::span<const std::uint8_t>(labels));
  }

  std::vector<std::vector<TokenId>> dec_in, targets;
  std::vector<std::vector<std::int32_t>> positions;
  std::vector<std::uint8_t> hide;
  if (info.mass) {
    for (auto i : ids) {
      const auto& seq = step.kind == StepKind::kCapToCap ? data_.cap_texts()[i] : segs[i].asr;
      const auto span = sample_mass_span(seq.size(), config_.mask_ratio, mask_rng);
      auto m = build_mass_example(seq, *span);
      EncoderExample e;
      e.text = std::move(m.encoder_input);
      e.style = info.input_style;
      if (info.video) e.frames = segs[i].frames;
      examples.push_back(std::move(e));
      dec_in.push_back(std::move(m.decoder_input));
      targets.push_back(std::move(m.targets));
      // The encoder sees CLS in front of the sequence.
      for (auto& q : m.positions) ++q;
      positions.push_back(std::move(m.positions));
      if (step.hide_fraction > 0.0) hide.push_back(uniform01(sample_rng) < step.hide_fraction ? 1 : 0);
    }
  } else {
    for (auto i : ids) {
      examples.push_back(segment_input(segs[i], info.input_style, info.video));
      const auto& tgt = info.target_style == Style::kAsr ? segs[i].asr : segs[i].caption;
      std::vector<TokenId> in{kBos}, out(tgt.begin(), tgt.end());
      in.insert(in.end(), tgt.begin(), tgt.end());
      out.push_back(kEos);
      dec_in.push_back(std::move(in));
      targets.push_back(std::move(out));
    }
  }
  std::vector<Style> styles(ids.size(), info.target_style);
  auto grid = pad_sequences(dec_in, styles);
  auto flat_targets = pad_rows(targets, grid.length, static_cast<TokenId>(kPad));
  auto flat_positions = positions.empty() ? std::vector<std::int32_t>{} : pad_rows(positions, grid.length, 0);
  auto batch = make_batch(examples, data_.max_text(), data_.max_frames(), feature_dim);
  auto enc = model_.encode(&batch.text, info.video ? &batch.video : nullptr, opts);
  auto logits = model_.decode_forward(grid, flat_positions, enc, hide, opts);
  return masked_cross_entropy(logits, std::span<const std::int32_t>(flat_targets),
                              std::span<const std::uint8_t>(grid.mask));
}

StepResult Trainer::run_training_step(std::size_t step_index, std::int64_t iteration) {
  auto& params = model_.params();
  params.zero_grad();
  auto loss = step_loss(step_index, iteration);
  loss.backward();
  StepResult r;
  r.kind = config_.schedule.steps.at(step_index).kind;
  r.loss = static_cast<double>(loss.item());
  r.lr = adam_step(std::span<Tensor<float>>(params.tensors()), optimizer_);
  params.zero_grad();
  return r;
}

std::vector<StepResult> Trainer::run_iteration(std::int64_t iteration) {
  std::vector<StepResult> out;
  for (std::size_t s = 0; s < config_.schedule.steps.size(); ++s) out.push_back(run_training_step(s, iteration));
  return out;
}

// ---------------------------------------------------------------------------
// Training state

void save_training_state(const std::string& path, const AdamState<float>& state, std::int64_t next_iteration) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot open " + path + " for writing");
  out.write("MMOPT1", 6);
  binio::write_u64(out, static_cast<std::uint64_t>(state.step));
  binio::write_u64(out, static_cast<std::uint64_t>(next_iteration));
  binio::write_u32(out, static_cast<std::uint32_t>(state.m.size()));
  for (std::size_t i = 0; i < state.m.size(); ++i) {
    binio::write_u32(out, static_cast<std::uint32_t>(state.m[i].size()));
    for (float x : state.m[i]) binio::write_f32(out, x);
    for (float x : state.v[i]) binio::write_f32(out, x);
  }
  if (!out) throw CheckpointError("write failed: " + path);
}

std::int64_t load_training_state(const std::string& path, AdamState<float>& state) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open training state " + path);
  char magic[6];
  if (!in.read(magic, 6) || std::memcmp(magic, "MMOPT1", 6) != 0)
    throw CheckpointError(path + ": not a training state file");
  std::uint64_t step = 0, next = 0;
  std::uint32_t count = 0;
  if (!binio::read_u64(in, step) || !binio::read_u64(in, next) || !binio::read_u32(in, count))
    throw CheckpointError(path + ": truncated header");
  state.step = static_cast<std::int64_t>(step);
  state.m.assign(count, {});
  state.v.assign(count, {});
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint32_t n = 0;
    if (!binio::read_u32(in, n)) throw CheckpointError(path + ": truncated");
    state.m[i].resize(n);
    state.v[i].resize(n);
    for (auto& x : state.m[i])
      if (!binio::read_f32(in, x)) throw CheckpointError(path + ": truncated");
    for (auto& x : state.v[i])
      if (!binio::read_f32(in, x)) throw CheckpointError(path + ": truncated");
  }
  return static_cast<std::int64_t>(next);
}

TrainingLog::TrainingLog(const std::string& path) {
  const bool exists = std::filesystem::exists(path) && std::filesystem::file_size(path) > 0;
  out_.open(path, std::ios::app);
  if (!out_) throw Error("cannot open log " + path);
  if (!exists) out_ << "epoch,iteration,step_kind,loss,lr,wall_ms\n";
}

void TrainingLog::write(std::int64_t epoch, std::int64_t iteration, const StepResult& r, double wall_ms) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%lld,%lld,%s,%.9g,%.9g,%.3f\n", static_cast<long long>(epoch),
                static_cast<long long>(iteration), step_kind_name(r.kind).c_str(), r.loss, r.lr, wall_ms);
  out_ << buf;
  out_.flush();
}

// ---------------------------------------------------------------------------
// Evaluation helpers

double teacher_forced_accuracy(const Model<float>& model, const Dataset& data,
                               std::span<const std::size_t> segments, bool with_video) {
  NoGradGuard no_grad;
  const std::size_t feature_dim = model.config().use_video ? model.config().video_feature_dim : 0;
  std::size_t correct = 0, total = 0;
  for (std::size_t first = 0; first < segments.size(); first += 32) {
    const std::size_t last = std::min(segments.size(), first + 32);
    std::vector<EncoderExample> ex;
    std::vector<std::vector<TokenId>> captions;
    for (std::size_t k = first; k < last; ++k) {
      const auto& s = data.segments()[segments[k]];
      ex.push_back(segment_input(s, Style::kAsr, with_video));
      captions.push_back(s.caption);
    }
    auto batch = make_batch(ex, data.max_text(), data.max_frames(), feature_dim);
    auto tb = make_target_batch(captions, Style::kCap);
    auto enc = model.encode(&batch.text, with_video ? &batch.video : nullptr, {});
    auto logits = model.decode_forward(tb.inputs, {}, enc, {}, {});
    const std::size_t V = logits.cols();
    for (std::size_t r = 0; r < tb.targets.size(); ++r) {
      if (!tb.loss_mask[r]) continue;
      auto row = logits.data().subspan(r * V, V);
      const auto best = static_cast<TokenId>(std::max_element(row.begin(), row.end()) - row.begin());
      correct += best == tb.targets[r];
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

double classification_accuracy(const Model<float>& model, const Dataset& data, ClsTask task,
                               std::size_t per_video, std::uint64_t seed) {
  NoGradGuard no_grad;
  Rng rng = make_rng(seed, RngStream::kSampling, 0xE7A1);
  std::vector<EncoderExample> ex;
  std::vector<std::uint8_t> labels;
  for (const auto& video : data.videos()) {
    if (video.size() < 3) continue;
    for (std::size_t k = 0; k < per_video; ++k) {
      auto pair = task == ClsTask::kAlignment ? sample_alignment_pair(video.size(), rng, k % 2 == 0)
                                              : sample_ordering_pair(video.size(), rng);
      EncoderExample e = segment_input(data.segments()[video[pair->asr]], Style::kAsr, false);
      e.frames = data.segments()[video[pair->frames]].frames;
      ex.push_back(std::move(e));
      labels.push_back(pair->label);
    }
  }
  if (ex.empty()) return 0.0;
  const std::size_t feature_dim = model.config().use_video ? model.config().video_feature_dim : 0;
  std::size_t correct = 0;
  for (std::size_t first = 0; first < ex.size(); first += 32) {
    const std::size_t last = std::min(ex.size(), first + 32);
    auto batch = make_batch(std::span<const EncoderExample>(ex).subspan(first, last - first), data.max_text(),
                            data.max_frames(), feature_dim);
    auto enc = model.encode(&batch.text, &batch.video, {});
    auto probs = model.cls_predict(task, enc);
    for (std::size_t i = 0; i < probs.size(); ++i) correct += (probs[i] > 0.5) == (labels[first + i] == 1);
  }
  return static_cast<double>(correct) / static_cast<double>(ex.size());
}

}  // namespace mmcap
