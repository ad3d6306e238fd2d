// core/src/corpus.cpp

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

#include "mmcap/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <json.hpp>

#include "binary_io.hpp"
#include "mmcap/error.hpp"

namespace mmcap {

using json = nlohmann::ordered_json;

std::string AsrSegment::text() const {
  std::string s;
  for (const auto& t : tokens) {
    if (!s.empty()) s.push_back(' ');
    s += t.word;
  }
  return s;
}

std::vector<AsrSegment> segment_asr(std::span<const TimedToken> tokens, const std::string& video_id,
                                    double gap, std::size_t max_len) {
  if (max_len == 0) throw ContractError("segment_asr: max length must be positive");
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!(tokens[i].start >= 0.0) || !std::isfinite(tokens[i].start))
      throw DataError("segment_asr: token " + std::to_string(i) + " has invalid time",
                      static_cast<long>(i));
    if (i > 0 && tokens[i].start < tokens[i - 1].start)
      throw DataError("segment_asr: timestamps not sorted at token " + std::to_string(i),
                      static_cast<long>(i));
  }
  std::vector<AsrSegment> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const bool split = out.empty() || tokens[i].start - tokens[i - 1].start > gap ||
                       out.back().tokens.size() >= max_len;
    if (split) {
      out.emplace_back();
      out.back().video_id = video_id;
      out.back().index = static_cast<std::int64_t>(out.size() - 1);
    }
    out.back().tokens.push_back(tokens[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------

FrameFeatures::FrameFeatures(std::size_t dim, std::vector<float> values)
    : dim_(dim), values_(std::move(values)) {
  if (dim_ == 0 ? !values_.empty() : values_.size() % dim_ != 0)
    throw DimensionError("frame features: " + std::to_string(values_.size()) +
                         " values do not fill rows of " + std::to_string(dim_));
}

std::span<const float> FrameFeatures::row(std::size_t i) const {
  if (i >= count()) throw DimensionError("frame " + std::to_string(i) + " out of range");
  return std::span<const float>(values_).subspan(i * dim_, dim_);
}

void FrameFeatures::append(std::span<const float> frame) {
  if (frame.size() != dim_)
    throw DimensionError("frame of dim " + std::to_string(frame.size()) + " appended to stream of dim " +
                         std::to_string(dim_));
  values_.insert(values_.end(), frame.begin(), frame.end());
}

FrameFeatures FrameFeatures::slice(std::size_t offset, std::size_t n) const {
  const std::size_t total = count();
  const std::size_t lo = std::min(offset, total);
  const std::size_t hi = std::min(total, lo + n);
  return FrameFeatures(dim_, std::vector<float>(values_.begin() + static_cast<std::ptrdiff_t>(lo * dim_),
                                                values_.begin() + static_cast<std::ptrdiff_t>(hi * dim_)));
}

void FrameFeatures::truncate(std::size_t max_count) {
  if (count() > max_count) values_.resize(max_count * dim_);
}

void write_frame_file(const std::string& path, const FrameFeatures& frames) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path + " for writing");
  f.write("MMF1", 4);
  binio::write_u32(f, static_cast<std::uint32_t>(frames.dim()));
  binio::write_u32(f, static_cast<std::uint32_t>(frames.count()));
  for (float v : frames.values()) binio::write_f32(f, v);
  if (!f) throw Error("write failed: " + path);
}

FrameFeatures read_frame_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open frame file " + path);
  char magic[4];
  if (!f.read(magic, 4) || std::memcmp(magic, "MMF1", 4) != 0)
    throw DataError("frame file " + path + ": bad magic");
  std::uint32_t dim = 0, count = 0;
  if (!binio::read_u32(f, dim) || !binio::read_u32(f, count))
    throw DataError("frame file " + path + ": truncated header");
  std::vector<float> values(static_cast<std::size_t>(dim) * count);
  for (auto& v : values)
    if (!binio::read_f32(f, v)) throw DataError("frame file " + path + ": truncated payload");
  return FrameFeatures(dim, std::move(values));
}

FrameSlice pair_frames(const AsrSegment& segment, std::size_t available_frames,
                       std::size_t max_frames) {
  if (segment.tokens.empty()) return {};
  const auto first = static_cast<std::size_t>(std::floor(segment.start()));
  const auto last = static_cast<std::size_t>(std::floor(segment.end()));
  if (first >= available_frames) return {first, 0};
  const std::size_t stop = std::min(last + 1, available_frames);
  return {first, std::min(stop - first, max_frames)};
}

FrameFeatures FrameStore::get(const std::string& path, std::size_t offset, std::size_t count) {
  auto it = cache_.find(path);
  if (it == cache_.end()) it = cache_.emplace(path, read_frame_file(path)).first;
  return it->second.slice(offset, count);
}

// ---------------------------------------------------------------------------

TagTable TagTable::standard() {
  TagTable t;
  for (const char* v : {"intro", "introduction", "opening"}) t.add("intro", v);
  for (const char* v : {"outro", "closing", "closure", "conclusion", "ending", "end of video",
                        "video closing"})
    t.add("outro", v);
  for (const char* v : {"result", "finished result", "final result", "results"}) t.add("result", v);
  return t;
}

TagTable TagTable::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open tag table " + path);
  TagTable t;
  std::string line;
  long lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw DataError("tag table: expected canonical<TAB>variant", lineno);
    try {
      t.add(line.substr(0, tab), line.substr(tab + 1));
    } catch (const DataError& e) {
      throw DataError(e.what(), lineno);
    }
  }
  return t;
}

void TagTable::add(const std::string& canonical, const std::string& variant) {
  const std::string c = normalize_text(canonical), v = normalize_text(variant);
  if (c.empty() || v.empty()) throw DataError("tag table: empty tag");
  auto check = [this](const std::string& key, const std::string& target) {
    auto it = to_canonical_.find(key);
    if (it != to_canonical_.end() && it->second != target)
      throw DataError("tag table: '" + key + "' already maps to '" + it->second + "'");
  };
  check(c, c);
  check(v, c);
  // A canonical form may not itself be a variant of another group.
  for (const auto& [key, target] : to_canonical_)
    if (target == v && v != c) throw DataError("tag table: '" + v + "' is a canonical tag");
  to_canonical_[c] = c;
  to_canonical_[v] = c;
}

std::string TagTable::standardize(const std::string& tag) const {
  const std::string n = normalize_text(tag);
  auto it = to_canonical_.find(n);
  return it == to_canonical_.end() ? tag : it->second;
}

// ---------------------------------------------------------------------------

RecordKind parse_record_kind(const std::string& name) {
  if (name == "asr+video") return RecordKind::kAsrVideo;
  if (name == "cap-text") return RecordKind::kCapText;
  if (name == "asr+video+cap") return RecordKind::kAsrVideoCap;
  throw ConfigError("unknown record kind '" + name + "'");
}

std::string record_kind_name(RecordKind kind) {
  switch (kind) {
    case RecordKind::kAsrVideo: return "asr+video";
    case RecordKind::kCapText: return "cap-text";
    case RecordKind::kAsrVideoCap: return "asr+video+cap";
  }
  return "?";
}

std::string SegmentRecord::asr_text() const {
  std::string s;
  for (const auto& t : tokens) {
    if (!s.empty()) s.push_back(' ');
    s += t.word;
  }
  return s;
}

namespace {

const json& field(const json& j, const char* name, long line) {
  auto it = j.find(name);
  if (it == j.end()) throw DataError(std::string("missing field \"") + name + "\"", line);
  return *it;
}

std::string string_field(const json& j, const char* name, long line) {
  const auto& v = field(j, name, line);
  if (!v.is_string()) throw DataError(std::string("field \"") + name + "\" must be a string", line);
  return v.get<std::string>();
}

std::int64_t int_field(const json& j, const char* name, long line) {
  const auto& v = field(j, name, line);
  if (!v.is_number_integer())
    throw DataError(std::string("field \"") + name + "\" must be an integer", line);
  return v.get<std::int64_t>();
}

}  // namespace

SegmentRecord parse_segment_record(const std::string& json_line, RecordKind kind, long line) {
  json j;
  try {
    j = json::parse(json_line);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("invalid JSON: ") + e.what(), line);
  }
  if (!j.is_object()) throw DataError("record must be a JSON object", line);
  SegmentRecord r;
  if (kind == RecordKind::kCapText) {
    r.text = string_field(j, "text", line);
    return r;
  }
  r.video_id = string_field(j, "video_id", line);
  r.seg_index = int_field(j, "seg_index", line);
  const auto& toks = field(j, "tokens", line);
  if (!toks.is_array()) throw DataError("field \"tokens\" must be an array", line);
  for (const auto& t : toks) {
    if (!t.is_object()) throw DataError("field \"tokens\" must hold {w, t} objects", line);
    TimedToken tt;
    tt.word = string_field(t, "w", line);
    const auto& time = field(t, "t", line);
    if (!time.is_number()) throw DataError("field \"t\" must be a number", line);
    tt.start = time.get<double>();
    r.tokens.push_back(std::move(tt));
  }
  if (j.contains("frames_path")) r.frames_path = string_field(j, "frames_path", line);
  if (j.contains("frame_offset")) r.frame_offset = int_field(j, "frame_offset", line);
  if (j.contains("frame_count")) r.frame_count = int_field(j, "frame_count", line);
  if (r.frame_offset < 0 || r.frame_count < 0)
    throw DataError("field \"frame_count\" and \"frame_offset\" must be non-negative", line);
  if (kind == RecordKind::kAsrVideoCap) {
    r.caption = string_field(j, "caption", line);
    if (normalize_text(r.caption).empty()) throw DataError("field \"caption\" is empty", line);
  }
  return r;
}

std::string format_segment_record(const SegmentRecord& r, RecordKind kind) {
  json j = json::object();
  if (kind == RecordKind::kCapText) {
    j["text"] = r.text;
    return j.dump();
  }
  j["video_id"] = r.video_id;
  j["seg_index"] = r.seg_index;
  json toks = json::array();
  for (const auto& t : r.tokens) toks.push_back(json{{"w", t.word}, {"t", t.start}});
  j["tokens"] = std::move(toks);
  j["frames_path"] = r.frames_path;
  j["frame_offset"] = r.frame_offset;
  j["frame_count"] = r.frame_count;
  if (kind == RecordKind::kAsrVideoCap) j["caption"] = r.caption;
  return j.dump();
}

SegmentReader::SegmentReader(const std::string& path, RecordKind kind) : in_(path), kind_(kind) {
  if (!in_) throw DataError("cannot open segment file " + path);
}

bool SegmentReader::next(SegmentRecord& out) {
  std::string text;
  while (std::getline(in_, text)) {
    ++line_;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    out = parse_segment_record(text, kind_, line_);
    return true;
  }
  return false;
}

std::vector<SegmentRecord> load_segments(const std::string& path, RecordKind kind) {
  SegmentReader reader(path, kind);
  std::vector<SegmentRecord> out;
  SegmentRecord r;
  while (reader.next(r)) out.push_back(std::move(r));
  return out;
}

SegmentWriter::SegmentWriter(const std::string& path, RecordKind kind)
    : out_(path, std::ios::binary), kind_(kind) {
  if (!out_) throw Error("cannot open " + path + " for writing");
}

void SegmentWriter::write(const SegmentRecord& record) {
  out_ << format_segment_record(record, kind_) << '\n';
  if (!out_) throw Error("segment write failed");
}

// ---------------------------------------------------------------------------

std::size_t TokenGrid::real_count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

bool FrameGrid::any() const {
  return std::find(mask.begin(), mask.end(), std::uint8_t{1}) != mask.end();
}

Batch make_batch(std::span<const EncoderExample> examples, std::size_t max_text,
                 std::size_t max_frames, std::size_t feature_dim) {
  Batch b;
  const std::size_t n = examples.size();
  std::size_t text_len = 0, video_len = 0, dim = feature_dim;
  for (const auto& e : examples) {
    text_len = std::max(text_len, std::min(e.text.size(), max_text) + 1);
    const std::size_t frames = std::min(e.frames.count(), max_frames);
    video_len = std::max(video_len, frames);
    if (frames > 0) {
      if (dim == 0) dim = e.frames.dim();
      if (e.frames.dim() != dim)
        throw DimensionError("make_batch: frame dim " + std::to_string(e.frames.dim()) +
                             " differs from " + std::to_string(dim));
    }
  }
  b.text.batch = n;
  b.text.length = text_len;
  b.text.ids.assign(n * text_len, kPad);
  b.text.mask.assign(n * text_len, 0);
  b.text.styles.reserve(n);
  b.video.batch = n;
  b.video.length = video_len;
  b.video.dim = dim;
  b.video.values.assign(n * video_len * dim, 0.0f);
  b.video.mask.assign(n * video_len, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = examples[i];
    b.text.styles.push_back(e.style);
    const std::size_t len = std::min(e.text.size(), max_text);
    b.text.ids[i * text_len] = kCls;
    b.text.mask[i * text_len] = 1;
    for (std::size_t j = 0; j < len; ++j) {
      b.text.ids[i * text_len + 1 + j] = e.text[j];
      b.text.mask[i * text_len + 1 + j] = 1;
    }
    const std::size_t frames = std::min(e.frames.count(), max_frames);
    for (std::size_t f = 0; f < frames; ++f) {
      auto row = e.frames.row(f);
      std::copy(row.begin(), row.end(),
                b.video.values.begin() + static_cast<std::ptrdiff_t>((i * video_len + f) * dim));
      b.video.mask[i * video_len + f] = 1;
    }
  }
  return b;
}

TokenGrid pad_sequences(std::span<const std::vector<TokenId>> seqs, std::span<const Style> styles) {
  if (styles.size() != seqs.size())
    throw DimensionError("pad_sequences: " + std::to_string(seqs.size()) + " sequences, " +
                         std::to_string(styles.size()) + " styles");
  TokenGrid g;
  g.batch = seqs.size();
  for (const auto& s : seqs) g.length = std::max(g.length, s.size());
  g.ids.assign(g.batch * g.length, kPad);
  g.mask.assign(g.batch * g.length, 0);
  g.styles.assign(styles.begin(), styles.end());
  for (std::size_t i = 0; i < seqs.size(); ++i)
    for (std::size_t j = 0; j < seqs[i].size(); ++j) {
      g.ids[i * g.length + j] = seqs[i][j];
      g.mask[i * g.length + j] = 1;
    }
  return g;
}

}  // namespace mmcap
