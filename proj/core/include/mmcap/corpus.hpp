// core/include/mmcap/corpus.hpp

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
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmcap/tokenizer.hpp"

namespace mmcap {

inline constexpr double kDefaultGapSeconds = 2.0;
inline constexpr std::size_t kMaxSegmentWords = 320;
inline constexpr std::size_t kMaxTextSubwords = 240;
inline constexpr std::size_t kMaxFrames = 40;
inline constexpr std::size_t kDefaultFeatureDim = 128;

// ---------------------------------------------------------------------------
// Timed ASR and segmentation

struct TimedToken {
  std::string word;
  double start = 0.0;  // seconds

  bool operator==(const TimedToken&) const = default;
};

struct AsrSegment {
  std::string video_id;
  std::int64_t index = 0;  // within the video
  std::vector<TimedToken> tokens;

  double start() const { return tokens.empty() ? 0.0 : tokens.front().start; }
  double end() const { return tokens.empty() ? 0.0 : tokens.back().start; }
  std::string text() const;
};

/// Splits a time-sorted token stream wherever consecutive words are more
/// than `gap` seconds apart or the open segment already holds `max_len`
/// words. Throws DataError (with the offending token index as the line)
/// on a time that goes backwards.
std::vector<AsrSegment> segment_asr(std::span<const TimedToken> tokens,
                                    const std::string& video_id = "",
                                    double gap = kDefaultGapSeconds,
                                    std::size_t max_len = kMaxSegmentWords);

// ---------------------------------------------------------------------------
// Frame features (one vector per second of video)

class FrameFeatures {
 public:
  FrameFeatures() = default;
  explicit FrameFeatures(std::size_t dim) : dim_(dim) {}
  FrameFeatures(std::size_t dim, std::vector<float> values);

  std::size_t dim() const { return dim_; }
  std::size_t count() const { return dim_ == 0 ? 0 : values_.size() / dim_; }
  bool empty() const { return count() == 0; }
  std::span<const float> row(std::size_t i) const;
  std::span<const float> values() const { return values_; }
  void append(std::span<const float> frame);
  /// Rows [offset, offset+count), clamped to what exists.
  FrameFeatures slice(std::size_t offset, std::size_t count) const;
  void truncate(std::size_t max_count);

  bool operator==(const FrameFeatures&) const = default;

 private:
  std::size_t dim_ = 0;
  std::vector<float> values_;
};

/// Binary layout: "MMF1", dim u32, count u32, count*dim f32, little-endian.
void write_frame_file(const std::string& path, const FrameFeatures& frames);
FrameFeatures read_frame_file(const std::string& path);

struct FrameSlice {
  std::size_t offset = 0;
  std::size_t count = 0;
};

/// Frames whose second index lies in [floor(start), floor(end)] of the
/// segment, limited to the frames that exist and then to the first
/// `max_frames`.
FrameSlice pair_frames(const AsrSegment& segment, std::size_t available_frames,
                       std::size_t max_frames = kMaxFrames);

/// Loads frame files once and hands out slices.
class FrameStore {
 public:
  FrameFeatures get(const std::string& path, std::size_t offset, std::size_t count);

 private:
  std::map<std::string, FrameFeatures> cache_;
};

// ---------------------------------------------------------------------------
// Tag standardization

/// Canonical tag -> surface variants. Variant sets are disjoint and every
/// canonical form maps to itself, so standardize() is idempotent.
class TagTable {
 public:
  /// intro / outro / result groups used for timeline-tag evaluation.
  static TagTable standard();
  /// "canonical <tab> variant" per line; blank lines and '#' comments skipped.
  static TagTable load(const std::string& path);

  void add(const std::string& canonical, const std::string& variant);
  std::string standardize(const std::string& tag) const;
  std::size_t size() const { return to_canonical_.size(); }

 private:
  std::map<std::string, std::string> to_canonical_;
};

// ---------------------------------------------------------------------------
// Segment files (line-oriented JSON)

enum class RecordKind { kAsrVideo, kCapText, kAsrVideoCap };

RecordKind parse_record_kind(const std::string& name);
std::string record_kind_name(RecordKind kind);

struct SegmentRecord {
  // asr+video fields
  std::string video_id;
  std::int64_t seg_index = 0;
  std::vector<TimedToken> tokens;
  std::string frames_path;
  std::int64_t frame_offset = 0;
  std::int64_t frame_count = 0;
  // cap-text field
  std::string text;
  // finetune field
  std::string caption;

  std::string asr_text() const;
  bool operator==(const SegmentRecord&) const = default;
};

/// Streams records from a JSONL file. Blank lines are skipped; a record
/// that does not fit `kind` raises DataError naming the field and line.
class SegmentReader {
 public:
  SegmentReader(const std::string& path, RecordKind kind);
  bool next(SegmentRecord& out);
  long line() const { return line_; }

 private:
  std::ifstream in_;
  RecordKind kind_;
  long line_ = 0;
};

std::vector<SegmentRecord> load_segments(const std::string& path, RecordKind kind);

/// Parses one JSON record (exposed for tests and for the CLI).
SegmentRecord parse_segment_record(const std::string& json_line, RecordKind kind, long line = -1);
std::string format_segment_record(const SegmentRecord& record, RecordKind kind);

class SegmentWriter {
 public:
  SegmentWriter(const std::string& path, RecordKind kind);
  void write(const SegmentRecord& record);

 private:
  std::ofstream out_;
  RecordKind kind_;
};

// ---------------------------------------------------------------------------
// Batching

/// One encoder input: text (without CLS) of a given style and optional frames.
struct EncoderExample {
  std::vector<TokenId> text;
  Style style = Style::kAsr;
  FrameFeatures frames;
};

/// Right-padded token grid, row-major [batch x length].
struct TokenGrid {
  std::size_t batch = 0;
  std::size_t length = 0;
  std::vector<TokenId> ids;
  std::vector<std::uint8_t> mask;  // 1 on real tokens
  std::vector<Style> styles;       // per example

  std::size_t real_count() const;
};

/// Right-padded frame grid [batch x length x dim].
struct FrameGrid {
  std::size_t batch = 0;
  std::size_t length = 0;
  std::size_t dim = 0;
  std::vector<float> values;
  std::vector<std::uint8_t> mask;

  bool any() const;
};

struct Batch {
  TokenGrid text;   // CLS at column 0 of every row
  FrameGrid video;  // length 0 when no example carries frames
};

/// Truncates to the first max_text subwords / max_frames frames, prepends
/// CLS and pads with PAD. Video rows for examples without frames are fully
/// masked.
Batch make_batch(std::span<const EncoderExample> examples, std::size_t max_text = kMaxTextSubwords,
                 std::size_t max_frames = kMaxFrames, std::size_t feature_dim = 0);

/// Pads plain sequences (no CLS) for decoder inputs or targets.
TokenGrid pad_sequences(std::span<const std::vector<TokenId>> seqs, std::span<const Style> styles);

}  // namespace mmcap
