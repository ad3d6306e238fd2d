// core/src/synthetic.cpp

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

#include "mmcap/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include "mmcap/error.hpp"

namespace mmcap {

namespace {

struct Verb {
  const char* base;
  const char* gerund;
};

// Listed in recipe order; the index is the verb's rank.
constexpr std::array<Verb, 16> kVerbs{{
    {"wash", "washing"},   {"peel", "peeling"},   {"chop", "chopping"}, {"slice", "slicing"},
    {"measure", "measuring"}, {"add", "adding"},  {"mix", "mixing"},    {"whisk", "whisking"},
    {"pour", "pouring"},   {"stir", "stirring"},  {"season", "seasoning"}, {"fry", "frying"},
    {"boil", "boiling"},   {"bake", "baking"},    {"plate", "plating"}, {"serve", "serving"},
}};

constexpr std::array<const char*, 16> kNouns{
    "onions", "garlic",  "eggs",  "milk",   "batter", "flour",  "butter",   "sugar",
    "chicken", "rice",   "pasta", "tomatoes", "carrots", "potatoes", "cheese", "dough"};

constexpr std::array<const char*, 14> kFillers{"so",   "okay", "just",  "really", "nice",
                                               "and",  "then", "right", "well",   "now",
                                               "like", "this", "good",  "guys"};

std::string pick(Rng& rng, std::span<const char* const> words) {
  return words[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(words.size()) - 1))];
}

std::vector<float> gaussian_vector(Rng& rng, std::size_t dim) {
  std::vector<float> v(dim);
  for (auto& x : v) x = static_cast<float>(normal01(rng));
  return v;
}

}  // namespace

SyntheticWorld::SyntheticWorld(std::uint64_t seed, std::size_t feature_dim, double frame_noise,
                               std::size_t extra_nouns)
    : feature_dim_(feature_dim), frame_noise_(frame_noise), nouns_(kNouns.begin(), kNouns.end()) {
  if (feature_dim == 0) throw ContractError("synthetic world: feature dim must be positive");
  Rng rng = make_rng(seed, RngStream::kData);
  for (std::size_t i = 0; i < kVerbs.size(); ++i) verb_vectors_.push_back(gaussian_vector(rng, feature_dim));
  for (std::size_t i = 0; i < kNouns.size(); ++i) noun_vectors_.push_back(gaussian_vector(rng, feature_dim));

  static constexpr std::array<const char*, 12> kOnsets{"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "t", "z"};
  static constexpr std::array<const char*, 5> kVowels{"a", "e", "i", "o", "u"};
  Rng words = make_rng(seed, RngStream::kData, 1);
  std::set<std::string> used(nouns_.begin(), nouns_.end());
  while (nouns_.size() < kNouns.size() + extra_nouns) {
    std::string w;
    const auto syllables = uniform_int(words, 2, 3);
    for (std::int64_t k = 0; k < syllables; ++k) w += pick(words, kOnsets) + pick(words, kVowels);
    w += pick(words, kOnsets);
    if (used.insert(w).second) nouns_.push_back(w);
  }
  for (std::size_t i = kNouns.size(); i < nouns_.size(); ++i) noun_vectors_.push_back(gaussian_vector(rng, feature_dim));

  Rng afford = make_rng(seed, RngStream::kData, 2);
  verb_nouns_.assign(kVerbs.size(), {});
  for (std::size_t n = 0; n < nouns_.size(); ++n) {
    std::vector<std::size_t> others;
    for (std::size_t v = 0; v < kVerbs.size(); ++v)
      if (v != n % kVerbs.size()) others.push_back(v);
    shuffle(others.begin(), others.end(), afford);
    others.resize(kVerbsPerNoun - 1);
    others.push_back(n % kVerbs.size());
    for (auto v : others) verb_nouns_[v].push_back(n);
  }
}

std::size_t SyntheticWorld::random_noun(std::size_t verb, Rng& rng) const {
  const auto& nouns = verb_nouns_.at(verb);
  if (nouns.empty()) throw ContractError("synthetic world: verb " + std::to_string(verb) + " takes no noun");
  return nouns[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(nouns.size()) - 1))];
}

std::size_t SyntheticWorld::num_verbs() const { return kVerbs.size(); }
std::size_t SyntheticWorld::num_nouns() const { return nouns_.size(); }

std::string SyntheticWorld::asr_sentence(std::size_t verb, std::size_t noun, Rng& rng) const {
  const std::string v = kVerbs.at(verb).base, g = kVerbs.at(verb).gerund, n = nouns_.at(noun);
  std::string s;
  switch (uniform_int(rng, 0, 4)) {
    case 0: s = "so now we are going to " + v + " the " + n; break;
    case 1: s = "next " + v + " the " + n; break;
    case 2: s = "okay you want to " + v + " your " + n; break;
    case 3: s = "now i am " + g + " the " + n; break;
    default: s = "we " + v + " the " + n; break;
  }
  auto fillers = [&](std::int64_t most) {
    const auto k = uniform_int(rng, 0, most);
    for (std::int64_t i = 0; i < k; ++i) s += " " + pick(rng, kFillers);
  };
  fillers(2);
  // Speakers repeat what they are doing.
  switch (uniform_int(rng, 0, 3)) {
    case 0: s += " and keep " + g + " the " + n; break;
    case 1: s += " just " + v + " the " + n + " like this"; break;
    case 2: s += " " + g + " the " + n + " is easy"; break;
    default: s += " the " + n + " needs " + g; break;
  }
  fillers(1);
  return s;
}

std::string SyntheticWorld::caption(std::size_t verb, std::size_t noun) const {
  return std::string(kVerbs.at(verb).gerund) + " " + nouns_.at(noun);
}

std::string SyntheticWorld::random_asr_sentence(Rng& rng) const {
  const auto v = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(num_verbs()) - 1));
  const auto n = random_noun(v, rng);
  return asr_sentence(v, n, rng);
}

std::string SyntheticWorld::random_caption(Rng& rng) const {
  const auto v = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(num_verbs()) - 1));
  const auto n = random_noun(v, rng);
  return caption(v, n);
}

std::vector<float> SyntheticWorld::frame(std::size_t verb, std::size_t noun, Rng& rng) const {
  std::vector<float> f(feature_dim_);
  for (std::size_t i = 0; i < feature_dim_; ++i)
    f[i] = verb_vectors_.at(verb)[i] + noun_vectors_.at(noun)[i] +
           static_cast<float>(frame_noise_ * normal01(rng));
  return f;
}

SyntheticVideo SyntheticWorld::make_video(const std::string& id, std::size_t segments, Rng& rng) const {
  if (segments == 0 || segments > num_verbs())
    throw ContractError("synthetic video: segment count must be in [1, " + std::to_string(num_verbs()) + "]");
  std::vector<std::size_t> verbs(num_verbs());
  for (std::size_t i = 0; i < verbs.size(); ++i) verbs[i] = i;
  shuffle(verbs.begin(), verbs.end(), rng);
  verbs.resize(segments);
  std::sort(verbs.begin(), verbs.end());

  SyntheticVideo video;
  video.id = id;
  video.timeline = FrameFeatures(feature_dim_);
  double t = 0.5;
  std::vector<std::size_t> owner;  // per second: segment index + 1, 0 for silence
  for (std::size_t s = 0; s < segments; ++s) {
    SyntheticSegment seg;
    seg.verb = verbs[s];
    seg.noun = random_noun(seg.verb, rng);
    seg.asr = asr_sentence(seg.verb, seg.noun, rng);
    seg.caption = caption(seg.verb, seg.noun);
    std::istringstream words(seg.asr);
    for (std::string w; words >> w; t += 0.4) seg.tokens.push_back({w, std::round(t * 10.0) / 10.0});
    t += 3.0;
    const auto first = static_cast<std::size_t>(seg.tokens.front().start);
    const auto last = static_cast<std::size_t>(seg.tokens.back().start);
    if (owner.size() < last + 1) owner.resize(last + 1, 0);
    for (std::size_t sec = first; sec <= last; ++sec) owner[sec] = s + 1;
    video.segments.push_back(std::move(seg));
  }
  for (std::size_t sec = 0; sec < owner.size(); ++sec) {
    if (owner[sec] == 0) {
      std::vector<float> quiet(feature_dim_);
      for (auto& x : quiet) x = static_cast<float>(frame_noise_ * normal01(rng));
      video.timeline.append(quiet);
    } else {
      const auto& seg = video.segments[owner[sec] - 1];
      video.timeline.append(frame(seg.verb, seg.noun, rng));
    }
  }
  for (std::size_t s = 0; s < segments; ++s) {
    AsrSegment as{id, static_cast<std::int64_t>(s), video.segments[s].tokens};
    const auto slice = pair_frames(as, video.timeline.count());
    video.segments[s].frames = video.timeline.slice(slice.offset, slice.count);
  }
  return video;
}

std::string write_synthetic_dataset(const std::string& dir, const std::string& name,
                                    const std::vector<SyntheticVideo>& videos, RecordKind kind) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "frames");
  const std::string path = (fs::path(dir) / (name + ".jsonl")).string();
  SegmentWriter writer(path, kind);
  for (const auto& video : videos) {
    const std::string frames_rel = "frames/" + video.id + ".mmf";
    if (kind != RecordKind::kCapText)
      write_frame_file((fs::path(dir) / frames_rel).string(), video.timeline);
    for (std::size_t s = 0; s < video.segments.size(); ++s) {
      const auto& seg = video.segments[s];
      SegmentRecord r;
      if (kind == RecordKind::kCapText) {
        r.text = seg.caption;
      } else {
        r.video_id = video.id;
        r.seg_index = static_cast<std::int64_t>(s);
        r.tokens = seg.tokens;
        AsrSegment as{video.id, r.seg_index, seg.tokens};
        const auto slice = pair_frames(as, video.timeline.count());
        r.frames_path = frames_rel;
        r.frame_offset = static_cast<std::int64_t>(slice.offset);
        r.frame_count = static_cast<std::int64_t>(slice.count);
        if (kind == RecordKind::kAsrVideoCap) r.caption = seg.caption;
      }
      writer.write(r);
    }
  }
  return path;
}

}  // namespace mmcap
