// tests/unit/test_cli.cpp

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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cli/commands.hpp"
#include "mmcap/decode.hpp"
#include "mmcap/error.hpp"
#include "mmcap/model.hpp"

namespace mmcap::cli {
namespace {

namespace fs = std::filesystem;

const fs::path kData = MMCAP_DATA_DIR;

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("mmcap_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

// Shared vocabulary over the fixture corpora.
const fs::path& vocab() {
  static const fs::path path = [] {
    auto dir = scratch("vocab");
    auto r = run({"train-bpe", "--out", dir.string(), "--set", "vocab_size=300", "--set",
                  "segments=" + (kData / "fixture/pretrain/segments.jsonl").string(), "--set",
                  "cap_text=" + (kData / "fixture/pretrain/cap_text.jsonl").string(), "--set",
                  "finetune=" + (kData / "fixture/finetune/train.jsonl").string()});
    EXPECT_EQ(r.code, 0) << r.err;
    return dir / "vocab.txt";
  }();
  return path;
}

std::vector<std::string> tiny(const std::string& cmd, const fs::path& out, const std::string& model,
                              const std::string& strategy, int epochs, int iterations) {
  const bool pre = cmd == "pretrain";
  return {cmd, "--out", out.string(), "--seed", "3",
          "--set", "model=" + model, "--set", "strategy=" + strategy,
          "--set", "d_model=16", "--set", "heads=2", "--set", "batch_size=4",
          "--set", "epochs=" + std::to_string(epochs), "--set", "iterations_per_epoch=" + std::to_string(iterations),
          "--set", "warmup=10", "--set", "lr=1e-3", "--set", "vocab=" + vocab().string(),
          "--set", "train=" + (kData / (pre ? "fixture/pretrain/segments.jsonl" : "fixture/finetune/train.jsonl")).string(),
          "--set", "cap_text=" + (pre ? (kData / "fixture/pretrain/cap_text.jsonl").string() : "")};
}

TEST(Cli, UsageErrorsAreConfigurationErrors) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  auto r = run({"segment", "--set", "colour=blue"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("colour"), std::string::npos);
  auto dir = scratch("cfg");
  write(dir / "bad.cfg", "# comment\ninput = x\nwibble = 3\n");
  r = run({"segment", "--config", (dir / "bad.cfg").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find(":3: unknown key 'wibble'"), std::string::npos) << r.err;
}

TEST(Cli, SegmentFixture) {
  auto dir = scratch("segment");
  auto r = run({"segment", "--out", dir.string(), "--set", "input=" + (kData / "fixture/raw/asr.jsonl").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("segments 60 from 12 videos"), std::string::npos) << r.out;
  auto recs = load_segments((dir / "segments.jsonl").string(), RecordKind::kAsrVideo);
  ASSERT_EQ(recs.size(), 60u);
  EXPECT_GT(recs[0].frame_count, 0);
  // Frame paths are rewritten relative to the output file and still resolve.
  Dataset d;
  FrameStore store;
  Vocabulary v;
  EXPECT_NO_THROW(d.load_segments(v, (dir / "segments.jsonl").string(), RecordKind::kAsrVideo, store));
  EXPECT_TRUE(fs::exists(dir / "config.resolved"));
}

TEST(Cli, SegmentReportsUnsortedLineAndAcceptsEmptyInput) {
  auto dir = scratch("segment_bad");
  write(dir / "asr.jsonl",
        "{\"video_id\":\"a\",\"tokens\":[{\"w\":\"x\",\"t\":0.0}]}\n"
        "{\"video_id\":\"b\",\"tokens\":[{\"w\":\"x\",\"t\":1.0},{\"w\":\"y\",\"t\":0.5}]}\n");
  auto r = run({"segment", "--out", dir.string(), "--set", "input=" + (dir / "asr.jsonl").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
  write(dir / "empty.jsonl", "");
  r = run({"segment", "--out", dir.string(), "--set", "input=" + (dir / "empty.jsonl").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir / "segments.jsonl"), "");
}

TEST(Cli, InvalidStrategyNamesTheField) {
  auto dir = scratch("badstrategy");
  auto args = tiny("pretrain", dir, "E2D2", "MASSive", 1, 1);
  auto r = run(args);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("strategy"), std::string::npos) << r.err;
  r = run(tiny("pretrain", dir, "E2D2", "BiD", 1, 1));
  EXPECT_EQ(r.code, 2);
  r = run(tiny("pretrain", dir, "E2D2", "MASSvid", 1, 1));
  EXPECT_EQ(r.code, 2) << "video strategy on a text-only model";
}

TEST(Cli, PretrainResumeMatchesUninterruptedRun) {
  auto a = scratch("resume_a"), b = scratch("resume_b");
  auto r = run(tiny("pretrain", a, "E2D2", "MASS", 2, 3));
  ASSERT_EQ(r.code, 0) << r.err;
  r = run(tiny("pretrain", b, "E2D2", "MASS", 1, 3));
  ASSERT_EQ(r.code, 0) << r.err;
  r = run(tiny("pretrain", b, "E2D2", "MASS", 2, 3));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("resuming at iteration 3"), std::string::npos) << r.out;
  EXPECT_EQ(slurp(a / "model.ckpt"), slurp(b / "model.ckpt"));
  EXPECT_EQ(slurp(a / "train.state"), slurp(b / "train.state"));
  // 2 epochs x 3 iterations x 2 steps, one header.
  std::ifstream log(b / "train_log.csv");
  int lines = 0;
  for (std::string l; std::getline(log, l);) ++lines;
  EXPECT_EQ(lines, 13);
}

TEST(Cli, EchoedConfigReproducesTheRun) {
  auto a = scratch("echo_a");
  ASSERT_EQ(run(tiny("pretrain", a, "E2D2", "MASS", 1, 2)).code, 0);
  auto b = scratch("echo_b");
  auto r = run({"pretrain", "--config", (a / "config.resolved").string(), "--out", b.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(a / "model.ckpt"), slurp(b / "model.ckpt"));
}

TEST(Cli, FinetuneFromTextOnlyCheckpoint) {
  auto pre = scratch("ft_pre");
  ASSERT_EQ(run(tiny("pretrain", pre, "E2D2", "MASS", 1, 2)).code, 0);
  auto ft = scratch("ft");
  auto args = tiny("finetune", ft, "E2vidD2", "BiD", 1, 2);
  args.insert(args.end(), {"--set", "init=" + (pre / "model.ckpt").string()});
  auto r = run(args);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("initialized"), std::string::npos);

  auto text_only = read_checkpoint((pre / "model.ckpt").string());
  auto tuned = read_checkpoint((ft / "model.ckpt").string());
  EXPECT_TRUE(tuned.config.use_video);
  EXPECT_EQ(text_only.find("video_proj.fc1.w"), nullptr);
  EXPECT_NE(tuned.find("video_proj.fc1.w"), nullptr);

  // BiD logs two step kinds per iteration.
  int rows = 0;
  std::ifstream log(ft / "train_log.csv");
  for (std::string l; std::getline(log, l);) ++rows;
  EXPECT_EQ(rows, 1 + 2 * 2);
  EXPECT_NE(slurp(ft / "train_log.csv").find("ASR+video->CAP"), std::string::npos);
  EXPECT_NE(slurp(ft / "train_log.csv").find("CAP->ASR"), std::string::npos);
}

TEST(Cli, FinetuneShapeConflictNamesTheTensor) {
  auto pre = scratch("conflict_pre");
  ASSERT_EQ(run(tiny("pretrain", pre, "E2D2", "MASS", 1, 1)).code, 0);
  auto ft = scratch("conflict");
  auto args = tiny("finetune", ft, "E2D2", "UniD", 1, 1);
  args.insert(args.end(), {"--set", "init=" + (pre / "model.ckpt").string(), "--set", "ffn_dim=24"});
  auto r = run(args);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("ffn.fc1.w"), std::string::npos) << r.err;
}

TEST(Cli, PredictAndEvaluate) {
  auto ft = scratch("pe_ft");
  ASSERT_EQ(run(tiny("finetune", ft, "E2D2", "UniD", 1, 2)).code, 0);
  auto dev = (kData / "fixture/finetune/dev.jsonl").string();
  auto predict = [&](const fs::path& out) {
    return run({"predict", "--out", out.string(), "--set", "checkpoint=" + (ft / "model.ckpt").string(), "--set",
                "vocab=" + vocab().string(), "--set", "input=" + dev, "--set", "beam=2", "--set", "max_len=6"});
  };
  auto p1 = scratch("pe_p1"), p2 = scratch("pe_p2");
  auto r = predict(p1);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("warning: text-only checkpoint"), std::string::npos);
  ASSERT_EQ(predict(p2).code, 0);
  EXPECT_EQ(slurp(p1 / "predictions.jsonl"), slurp(p2 / "predictions.jsonl"));

  auto ev = scratch("pe_eval");
  r = run({"eval", "--out", ev.string(), "--set", "predictions=" + (p1 / "predictions.jsonl").string(), "--set",
           "references=" + dev});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("ROUGE-L"), std::string::npos);
  for (const char* f : {"report.txt", "report.csv", "segments.csv"}) EXPECT_TRUE(fs::exists(ev / f)) << f;

  r = run({"predict", "--out", p1.string(), "--set", "checkpoint=/nonexistent.ckpt", "--set",
           "vocab=" + vocab().string(), "--set", "input=" + dev});
  EXPECT_EQ(r.code, 1);
}

TEST(Cli, EvalPerfectAndMismatchedPredictions) {
  auto dir = scratch("eval");
  auto dev = (kData / "fixture/finetune/dev.jsonl").string();
  std::vector<Prediction> preds;
  for (const auto& rec : load_segments(dev, RecordKind::kAsrVideoCap)) preds.push_back({rec.video_id, rec.seg_index, rec.caption});
  write_predictions((dir / "perfect.jsonl").string(), preds);
  auto r = run({"eval", "--out", dir.string(), "--set", "predictions=" + (dir / "perfect.jsonl").string(), "--set",
                "references=" + dev});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("ROUGE-L       100.00"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("BLEU-1        100.00"), std::string::npos) << r.out;

  std::swap(preds[3], preds[4]);
  write_predictions((dir / "swapped.jsonl").string(), preds);
  r = run({"eval", "--out", dir.string(), "--set", "predictions=" + (dir / "swapped.jsonl").string(), "--set",
           "references=" + dev});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("first mismatch at segment 4"), std::string::npos) << r.err;

  r = run({"eval", "--out", dir.string(), "--set", "mode=sideways", "--set", "references=" + dev});
  EXPECT_EQ(r.code, 2);
}

TEST(Cli, ConstantBaselineMatchesFrozenFixtureScores) {
  auto dir = scratch("constant");
  auto r = run({"eval", "--out", dir.string(), "--set", "mode=constant:intro", "--set",
                "references=" + (kData / "vitt_like/references.jsonl").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir / "report.csv"), slurp(kData / "vitt_like/expected_constant_intro.csv"));
  r = run({"eval", "--out", dir.string(), "--set", "mode=agreement", "--set",
           "references=" + (kData / "vitt_like/annotations.jsonl").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("annotator agreement"), std::string::npos);
}

TEST(Cli, DeskMassRunLowersEpochMeanLoss) {
  auto dir = scratch("desk");
  auto r = run({"pretrain", "--desk", "--out", dir.string(), "--seed", "1", "--set", "model=E2D2", "--set",
                "strategy=MASS", "--set", "vocab=" + vocab().string(), "--set",
                "train=" + (kData / "fixture/pretrain/segments.jsonl").string(), "--set",
                "cap_text=" + (kData / "fixture/pretrain/cap_text.jsonl").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::vector<double> means;
  std::istringstream in(r.out);
  for (std::string l; std::getline(in, l);)
    if (l.rfind("epoch ", 0) == 0) means.push_back(std::stod(l.substr(l.find("mean loss ") + 10)));
  ASSERT_EQ(means.size(), 2u);
  EXPECT_LT(means[1], means[0]);
}

}  // namespace
}  // namespace mmcap::cli
