// tools/make_fixtures.cpp

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

// Regenerates the bundled data/ fixtures. Output is a pure function of the
// seed, so rerunning reproduces the committed files byte for byte.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mmcap/metrics.hpp"
#include "mmcap/synthetic.hpp"

namespace fs = std::filesystem;
using namespace mmcap;

namespace {

std::vector<SyntheticVideo> videos(const SyntheticWorld& world, const std::string& prefix, int n,
                                   std::size_t segments, Rng& rng) {
  std::vector<SyntheticVideo> out;
  for (int i = 0; i < n; ++i) out.push_back(world.make_video(prefix + std::to_string(i), segments, rng));
  return out;
}

void write_cap_text(const fs::path& path, const SyntheticWorld& world, int n, Rng& rng) {
  SegmentWriter w(path.string(), RecordKind::kCapText);
  for (int i = 0; i < n; ++i) {
    SegmentRecord r;
    r.text = world.random_caption(rng);
    w.write(r);
  }
}

// Whole-video timed ASR (input of `mmcap segment`).
void write_timed_asr(const fs::path& dir, const std::vector<SyntheticVideo>& vids) {
  fs::create_directories(dir / "frames");
  std::ofstream out(dir / "asr.jsonl", std::ios::binary);
  for (const auto& v : vids) {
    nlohmann::ordered_json j;
    j["video_id"] = v.id;
    auto toks = nlohmann::json::array();
    for (const auto& s : v.segments)
      for (const auto& t : s.tokens) toks.push_back({{"w", t.word}, {"t", t.start}});
    j["tokens"] = std::move(toks);
    j["frames_path"] = "frames/" + v.id + ".mmf";
    write_frame_file((dir / "frames" / (v.id + ".mmf")).string(), v.timeline);
    out << j.dump() << '\n';
  }
}

// Timeline-tag style references: a few canonical tags in many surface
// forms plus free-form step descriptions.
std::string vitt_tag(const SyntheticWorld& world, Rng& rng) {
  static const std::vector<std::string> intro{"intro", "introduction", "opening", "Intro"};
  static const std::vector<std::string> outro{"outro", "closing", "conclusion", "ending", "end of video"};
  static const std::vector<std::string> result{"result", "finished result", "final result", "results"};
  static const std::vector<std::string> other{"ingredients", "tools needed", "tips", "overview", "demonstration"};
  auto pick = [&](const std::vector<std::string>& v) { return v[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(v.size()) - 1))]; };
  const double u = uniform01(rng);
  if (u < 0.12) return pick(intro);
  if (u < 0.20) return pick(outro);
  if (u < 0.25) return pick(result);
  if (u < 0.33) return pick(other);
  auto caption = world.random_caption(rng);
  if (uniform01(rng) < 0.3) {
    const auto second = world.random_caption(rng);
    caption += " and " + second.substr(0, second.find(' '));
  }
  return caption;
}

void write_vitt_like(const fs::path& dir, const SyntheticWorld& world, Rng& rng) {
  fs::create_directories(dir);
  std::vector<std::string> refs;
  {
    SegmentWriter w((dir / "references.jsonl").string(), RecordKind::kAsrVideoCap);
    for (int v = 0; v < 40; ++v)
      for (int s = 0; s < 5; ++s) {
        SegmentRecord r;
        r.video_id = "vitt" + std::to_string(v);
        r.seg_index = s;
        r.caption = vitt_tag(world, rng);
        refs.push_back(TagTable::standard().standardize(r.caption));
        w.write(r);
      }
  }
  // Annotations: two or three annotators per video, sharing most starts.
  std::ofstream ann(dir / "annotations.jsonl", std::ios::binary);
  for (int v = 0; v < 40; ++v) {
    std::vector<std::pair<std::int64_t, std::string>> base;
    for (std::int64_t s = 0; s < 6; ++s) base.emplace_back(s * 3, vitt_tag(world, rng));
    const auto annotators = uniform_int(rng, 2, 3);
    for (std::int64_t a = 0; a < annotators; ++a) {
      nlohmann::ordered_json j;
      j["video_id"] = "vitt" + std::to_string(v);
      j["annotator"] = "a" + std::to_string(a);
      auto tl = nlohmann::json::array();
      for (const auto& [start, tag] : base) {
        if (a > 0 && uniform01(rng) < 0.2) continue;
        const auto shifted = a > 0 && uniform01(rng) < 0.15 ? start + 1 : start;
        tl.push_back({{"start", shifted}, {"tag", a > 0 && uniform01(rng) < 0.4 ? vitt_tag(world, rng) : tag}});
      }
      j["timeline"] = std::move(tl);
      ann << j.dump() << '\n';
    }
  }
  auto rep = constant_baseline(refs, "intro");
  std::ofstream exp(dir / "expected_constant_intro.csv", std::ios::binary);
  exp << rep.summary_csv();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Writes the bundled fixtures"};
  std::string out = "data";
  std::uint64_t seed = 20211;
  app.add_option("--out", out, "data directory");
  app.add_option("--seed", seed, "generator seed");
  CLI11_PARSE(app, argc, argv);
  try {
    const fs::path root(out);
    SyntheticWorld world(seed, 16);
    Rng rng = make_rng(seed, RngStream::kData, 1);

    const auto pre = root / "fixture" / "pretrain";
    write_synthetic_dataset(pre.string(), "segments", videos(world, "pre", 250, 4, rng), RecordKind::kAsrVideo);
    write_cap_text(pre / "cap_text.jsonl", world, 500, rng);

    const auto ft = root / "fixture" / "finetune";
    write_synthetic_dataset(ft.string(), "train", videos(world, "ft", 16, 4, rng), RecordKind::kAsrVideoCap);
    write_synthetic_dataset(ft.string(), "dev", videos(world, "dev", 8, 4, rng), RecordKind::kAsrVideoCap);

    write_timed_asr(root / "fixture" / "raw", videos(world, "raw", 12, 5, rng));
    write_vitt_like(root / "vitt_like", world, rng);
    std::cout << "fixtures written under " << root << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
