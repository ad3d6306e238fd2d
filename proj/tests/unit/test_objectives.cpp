// tests/unit/test_objectives.cpp

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

#include "mmcap/error.hpp"
#include "mmcap/objectives.hpp"
#include "mmcap/synthetic.hpp"

namespace mmcap {
namespace {

namespace fs = std::filesystem;

TEST(MassSpan, HalfOfTen) {
  Rng rng(1);
  std::set<std::size_t> starts;
  for (int i = 0; i < 500; ++i) {
    auto s = sample_mass_span(10, 0.5, rng);
    ASSERT_TRUE(s);
    EXPECT_EQ(s->length, 5u);
    starts.insert(s->start);
  }
  EXPECT_EQ(starts, (std::set<std::size_t>{0, 1, 2, 3, 4, 5}));
}

TEST(MassSpan, ShortSequences) {
  Rng rng(2);
  EXPECT_EQ(sample_mass_span(2, 0.5, rng)->length, 1u);
  EXPECT_FALSE(sample_mass_span(1, 0.5, rng));
  EXPECT_FALSE(sample_mass_span(0, 0.5, rng));
  EXPECT_EQ(sample_mass_span(3, 0.1, rng)->length, 1u);
}

TEST(MassSpan, SeededDrawsRepeat) {
  Rng a(9), b(9);
  for (int i = 0; i < 20; ++i) {
    auto x = sample_mass_span(17, 0.5, a), y = sample_mass_span(17, 0.5, b);
    EXPECT_EQ(x->start, y->start);
    EXPECT_EQ(x->length, y->length);
  }
}

TEST(MassExample, MasksSpanAndShiftsDecoderInput) {
  const TokenId a = 10, b = 11, c = 12, d = 13;
  std::vector<TokenId> ids{a, b, c, d};
  auto m = build_mass_example(ids, {1, 2});
  EXPECT_EQ(m.encoder_input, (std::vector<TokenId>{a, kMask, kMask, d}));
  EXPECT_EQ(m.targets, (std::vector<TokenId>{b, c}));
  EXPECT_EQ(m.decoder_input, (std::vector<TokenId>{kBos, b}));
  EXPECT_EQ(m.positions, (std::vector<std::int32_t>{1, 2}));
  EXPECT_EQ(m.loss_mask, (std::vector<std::uint8_t>{1, 1}));
}

TEST(MassExample, FullSpanIsLanguageModelling) {
  std::vector<TokenId> ids{10, 11, 12};
  auto m = build_mass_example(ids, {0, 3});
  EXPECT_EQ(m.encoder_input, (std::vector<TokenId>{kMask, kMask, kMask}));
  EXPECT_EQ(m.targets, ids);
  EXPECT_EQ(m.decoder_input, (std::vector<TokenId>{kBos, 10, 11}));
  EXPECT_THROW(build_mass_example(ids, {2, 2}), ContractError);
  EXPECT_THROW(build_mass_example(ids, {0, 0}), ContractError);
}

TEST(AlignmentPair, NegativesAreAtLeastTwoApart) {
  Rng rng(3);
  std::map<std::size_t, std::set<std::size_t>> seen;
  for (int i = 0; i < 3000; ++i) {
    auto p = sample_alignment_pair(6, rng, false);
    ASSERT_TRUE(p);
    EXPECT_EQ(p->label, 0);
    EXPECT_GE(p->asr > p->frames ? p->asr - p->frames : p->frames - p->asr, 2u);
    seen[p->asr].insert(p->frames);
  }
  EXPECT_EQ(seen[2], (std::set<std::size_t>{0, 4, 5}));
}

TEST(AlignmentPair, PositivesAndShortVideos) {
  Rng rng(4);
  auto p = sample_alignment_pair(5, rng, true);
  EXPECT_EQ(p->asr, p->frames);
  EXPECT_EQ(p->label, 1);
  EXPECT_FALSE(sample_alignment_pair(2, rng, false));
  EXPECT_TRUE(sample_alignment_pair(2, rng, true));
  EXPECT_FALSE(sample_ordering_pair(2, rng));
}

TEST(OrderingPair, LabelsAndAntisymmetry) {
  EXPECT_EQ(ordering_label(1, 4), 1);
  EXPECT_EQ(ordering_label(4, 1), 0);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j)
      if (i + 2 <= j || j + 2 <= i) EXPECT_NE(ordering_label(i, j), ordering_label(j, i));
}

TEST(OrderingPair, ExhaustiveEnumerationIsBalanced) {
  // Brute force over every ordered pair of 5 segments at distance >= 2.
  int before = 0, after = 0;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      if (std::abs(i - j) >= 2) (i < j ? before : after)++;
  EXPECT_EQ(before, after);
  EXPECT_EQ(before, 6);
  Rng rng(5);
  std::map<std::pair<std::size_t, std::size_t>, int> hits;
  int ones = 0;
  const int draws = 12000;
  for (int k = 0; k < draws; ++k) {
    auto p = sample_ordering_pair(5, rng);
    hits[{p->asr, p->frames}]++;
    ones += p->label;
  }
  EXPECT_EQ(hits.size(), 12u);
  for (const auto& [pair, n] : hits) EXPECT_NEAR(n, draws / 12, 150);
  EXPECT_NEAR(ones, draws / 2, 300);
}

// The objectives table, written out independently of the library.
const std::map<std::string, std::vector<std::string>>& table_rows() {
  static const std::map<std::string, std::vector<std::string>> rows{
      {"MASS", {"CAP->CAP", "ASR->ASR"}},
      {"MASSvid", {"CAP->CAP", "ASR+video->ASR"}},
      {"MASSdrop", {"CAP->CAP", "ASR+video->ASR"}},
      {"MASSalign", {"CAP->CAP", "ASR->ASR", "ALIGN", "ORDER"}},
      {"UniD/text", {"ASR->CAP"}},
      {"BiD/text", {"ASR->CAP", "CAP->ASR"}},
      {"UniD/video", {"ASR+video->CAP"}},
      {"BiD/video", {"ASR+video->CAP", "CAP->ASR"}},
      {"BiDalt", {"ASR+video->CAP", "CAP+video->ASR"}},
  };
  return rows;
}

std::vector<std::string> kinds_of(const Schedule& s) {
  std::vector<std::string> out;
  for (const auto& step : s.steps) out.push_back(step_kind_name(step.kind));
  return out;
}

TEST(Schedule, MatchesObjectivesTable) {
  auto expect_row = [](const std::string& row, const Schedule& s) {
    auto want = table_rows().at(row), got = kinds_of(s);
    std::multiset<std::string> a(want.begin(), want.end()), b(got.begin(), got.end());
    EXPECT_EQ(a, b) << row;
    EXPECT_EQ(want, got) << row;
  };
  expect_row("MASS", make_schedule(Strategy::kMass, false));
  expect_row("MASSvid", make_schedule(Strategy::kMassVid, true));
  expect_row("MASSdrop", make_schedule(Strategy::kMassDrop, true));
  expect_row("MASSalign", make_schedule(Strategy::kMassAlign, true));
  expect_row("UniD/text", make_schedule(Strategy::kUniD, false));
  expect_row("BiD/text", make_schedule(Strategy::kBiD, false));
  expect_row("UniD/video", make_schedule(Strategy::kUniD, true));
  expect_row("BiD/video", make_schedule(Strategy::kBiD, true));
  expect_row("BiDalt", make_schedule(Strategy::kBiDalt, true));
  EXPECT_EQ(make_schedule(Strategy::kMassAlign, true).steps.size(), 4u);
}

TEST(Schedule, DefaultsAndHideFraction) {
  auto s = make_schedule(Strategy::kMassDrop, true, 0.4);
  EXPECT_EQ(s.steps[1].hide_fraction, 0.4);
  EXPECT_EQ(s.steps[0].hide_fraction, 0.0);
  EXPECT_EQ(make_schedule(Strategy::kMassVid, true).steps[1].hide_fraction, 0.0);
  EXPECT_EQ(s.iterations_per_epoch, 3125);
  EXPECT_EQ(s.epochs, 200);
  EXPECT_EQ(make_schedule(Strategy::kBiD, true).epochs, 30);
}

TEST(Schedule, Errors) {
  EXPECT_THROW(parse_strategy("MASSive"), ConfigError);
  EXPECT_THROW(make_schedule(Strategy::kMassVid, false), ConfigError);
  EXPECT_THROW(make_schedule(Strategy::kBiDalt, false), ConfigError);
  EXPECT_THROW(make_schedule(Strategy::kMassDrop, true, 1.5), ConfigError);
  for (auto s : {Strategy::kMass, Strategy::kMassVid, Strategy::kMassDrop, Strategy::kMassAlign,
                 Strategy::kUniD, Strategy::kBiD, Strategy::kBiDalt})
    EXPECT_EQ(parse_strategy(strategy_name(s)), s);
}

TEST(TargetBatch, WrapsWithBosAndEos) {
  std::vector<std::vector<TokenId>> seqs{{7, 8}, {9}};
  auto tb = make_target_batch(seqs, Style::kCap);
  EXPECT_EQ(tb.inputs.ids, (std::vector<TokenId>{kBos, 7, 8, kBos, 9, kPad}));
  EXPECT_EQ(tb.targets, (std::vector<std::int32_t>{7, 8, kEos, 9, kEos, kPad}));
  EXPECT_EQ(tb.loss_mask, (std::vector<std::uint8_t>{1, 1, 1, 1, 1, 0}));
}

// A small synthetic world shared by the trainer tests.
struct Fixture {
  SyntheticWorld world{21, 6};
  Vocabulary vocab;
  Dataset data;

  Fixture() {
    Rng rng(8);
    std::vector<SyntheticVideo> videos;
    for (int i = 0; i < 6; ++i) videos.push_back(world.make_video("v" + std::to_string(i), 5, rng));
    std::vector<std::string> corpus;
    for (auto& v : videos)
      for (auto& s : v.segments) {
        corpus.push_back(s.asr);
        corpus.push_back(s.caption);
      }
    vocab = train_bpe(corpus, 120);
    for (auto& v : videos)
      for (std::size_t i = 0; i < v.segments.size(); ++i)
        data.add_segment(vocab, v.id, static_cast<std::int64_t>(i), v.segments[i].asr, v.segments[i].frames,
                         v.segments[i].caption);
    for (int i = 0; i < 40; ++i) data.add_cap_text(vocab, world.random_caption(rng));
  }

  ModelConfig config(bool video = true) const {
    ModelConfig c;
    c.d_model = 16;
    c.heads = 2;
    c.ffn_dim = 32;
    c.vocab_size = vocab.size();
    c.video_feature_dim = 6;
    c.use_video = video;
    return c;
  }

  TrainerConfig trainer(Strategy s, bool video = true) const {
    TrainerConfig t;
    t.schedule = make_schedule(s, video);
    t.batch_size = 4;
    t.seed = 77;
    t.adam.lr_max = 1e-3;
    t.adam.warmup = 10;
    return t;
  }
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

TEST(Dataset, GroupsVideosInSegmentOrder) {
  Dataset d;
  auto& f = fixture();
  d.add_segment(f.vocab, "b", 1, "chop the onions", {});
  d.add_segment(f.vocab, "a", 0, "add eggs", {});
  d.add_segment(f.vocab, "b", 0, "wash the rice", {});
  ASSERT_EQ(d.videos().size(), 2u);
  EXPECT_EQ(d.videos()[0], (std::vector<std::size_t>{2, 0}));
  EXPECT_EQ(d.videos()[1], (std::vector<std::size_t>{1}));
}

TEST(Dataset, LoadsSegmentFilesWithRelativeFramePaths) {
  auto& f = fixture();
  SyntheticWorld world(5, 6);
  Rng rng(6);
  std::vector<SyntheticVideo> videos{world.make_video("x", 3, rng)};
  auto dir = fs::temp_directory_path() / "mmcap_test_dataset";
  fs::remove_all(dir);
  auto path = write_synthetic_dataset(dir.string(), "ft", videos, RecordKind::kAsrVideoCap);
  Dataset d;
  FrameStore store;
  d.load_segments(f.vocab, path, RecordKind::kAsrVideoCap, store);
  ASSERT_EQ(d.segments().size(), 3u);
  EXPECT_EQ(d.segments()[1].frames, videos[0].segments[1].frames);
  EXPECT_EQ(d.segments()[1].caption, f.vocab.encode(videos[0].segments[1].caption));
}

TEST(Trainer, StepStreamMismatchIsContractError) {
  auto& f = fixture();
  Model<float> m(f.config(false), 1);
  auto tc = f.trainer(Strategy::kUniD, false);
  tc.schedule.steps = {{StepKind::kAsrVideoToCap}};
  EXPECT_THROW(Trainer(m, f.data, tc), ContractError);
}

TEST(Trainer, AlignStepLeavesDecoderGradientsZero) {
  auto& f = fixture();
  Model<float> m(f.config(), 2);
  Trainer t(m, f.data, f.trainer(Strategy::kMassAlign));
  for (std::size_t step : {2u, 3u}) {
    m.params().zero_grad();
    t.step_loss(step, 0).backward();
    for (std::size_t i = 0; i < m.params().size(); ++i) {
      const auto& name = m.params().names()[i];
      if (name.rfind("dec.", 0) != 0) continue;
      const auto& p = m.params().tensors()[i];
      if (p.has_grad())
        for (float g : p.grad()) ASSERT_EQ(g, 0.0f) << name;
    }
    EXPECT_TRUE(m.params().get("cls.align.fc1.w").has_grad() || m.params().get("cls.order.fc1.w").has_grad());
  }
}

TEST(Trainer, MassDropWithFullHideCutsTextPath) {
  auto& f = fixture();
  Model<float> m(f.config(), 3);
  auto tc = f.trainer(Strategy::kMassDrop);
  tc.schedule = make_schedule(Strategy::kMassDrop, true, 1.0);
  Trainer t(m, f.data, tc);
  m.params().zero_grad();
  t.step_loss(1, 0).backward();
  for (const char* n : {"text_enc.ln_f.g", "text_enc.ln_f.b"}) {
    const auto& p = m.params().get(n);
    if (p.has_grad())
      for (float g : p.grad()) ASSERT_EQ(g, 0.0f) << n;
  }
}

TEST(Trainer, SeededRunsAreBitIdentical) {
  auto& f = fixture();
  auto run = [&] {
    Model<float> m(f.config(), 4);
    Trainer t(m, f.data, f.trainer(Strategy::kMassAlign));
    std::vector<double> losses;
    for (int it = 0; it < 3; ++it)
      for (auto& r : t.run_iteration(it)) losses.push_back(r.loss);
    std::vector<float> params;
    for (auto& p : m.params().tensors()) params.insert(params.end(), p.data().begin(), p.data().end());
    return std::make_pair(losses, params);
  };
  auto a = run(), b = run();
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
}

TEST(Trainer, ResumeContinuesBitIdentically) {
  auto& f = fixture();
  auto dir = fs::temp_directory_path() / "mmcap_test_resume";
  fs::create_directories(dir);
  const auto tc = f.trainer(Strategy::kBiD);

  Model<float> straight(f.config(), 5);
  {
    Trainer t(straight, f.data, tc);
    for (int it = 0; it < 4; ++it) t.run_iteration(it);
  }

  Model<float> first(f.config(), 5);
  {
    Trainer t(first, f.data, tc);
    for (int it = 0; it < 2; ++it) t.run_iteration(it);
    save_checkpoint(first, (dir / "m.ckpt").string());
    save_training_state((dir / "m.opt").string(), t.optimizer(), 2);
  }
  auto resumed = load_checkpoint<float>((dir / "m.ckpt").string());
  Trainer t(resumed, f.data, tc);
  const auto next = load_training_state((dir / "m.opt").string(), t.optimizer());
  EXPECT_EQ(next, 2);
  EXPECT_EQ(t.optimizer().step, 4);
  for (auto it = next; it < 4; ++it) t.run_iteration(it);
  for (std::size_t i = 0; i < straight.params().size(); ++i) {
    auto a = straight.params().tensors()[i].data(), b = resumed.params().tensors()[i].data();
    ASSERT_TRUE(std::equal(a.begin(), a.end(), b.begin())) << straight.params().names()[i];
  }
}

TEST(Trainer, OverfitsFewPairs) {
  auto& f = fixture();
  auto c = f.config(false);
  c.dropout = 0.0;
  c.attention_dropout = 0.0;
  Model<float> m(c, 6);
  auto tc = f.trainer(Strategy::kUniD, false);
  tc.batch_size = 8;
  tc.adam.lr_max = 3e-3;
  tc.adam.warmup = 200;
  Dataset small;
  for (std::size_t i = 0; i < 8; ++i) {
    const auto& s = f.data.segments()[i];
    small.add_segment(f.vocab, s.video_id, s.seg_index, f.vocab.decode(s.asr), s.frames, f.vocab.decode(s.caption));
  }
  Trainer t(m, small, tc);
  double loss = 0;
  for (int it = 0; it < 1000; ++it) loss = t.run_iteration(it)[0].loss;
  EXPECT_LT(loss, 0.01);
  std::vector<std::size_t> all{0, 1, 2, 3, 4, 5, 6, 7};
  EXPECT_EQ(teacher_forced_accuracy(m, small, all, false), 1.0);
}

TEST(Trainer, EpochVisitsEveryExampleOnce) {
  auto& f = fixture();
  Model<float> m(f.config(false), 7);
  auto tc = f.trainer(Strategy::kUniD, false);
  tc.batch_size = 5;
  Trainer t(m, f.data, tc);
  EXPECT_EQ(t.pool_size(StepKind::kAsrToCap), 30u);
  // 30 examples, batch 5: iterations 0..5 form one pass. Steps are
  // recomputed without updates, so this only inspects the draw order via
  // loss determinism.
  auto a = t.step_loss(0, 3).item(), b = t.step_loss(0, 3).item();
  EXPECT_EQ(a, b);
}

TEST(TrainingLog, HeaderOnceThenAppends) {
  auto path = fs::temp_directory_path() / "mmcap_test_log.csv";
  fs::remove(path);
  {
    TrainingLog log(path.string());
    log.write(0, 0, {StepKind::kCapToCap, 1.5, 1e-4}, 2.0);
  }
  {
    TrainingLog log(path.string());
    log.write(0, 1, {StepKind::kAsrToAsr, 1.25, 2e-4}, 3.0);
  }
  std::ifstream in(path);
  std::string l1, l2, l3, l4;
  std::getline(in, l1);
  std::getline(in, l2);
  std::getline(in, l3);
  EXPECT_EQ(l1, "epoch,iteration,step_kind,loss,lr,wall_ms");
  EXPECT_EQ(l2, "0,0,CAP->CAP,1.5,0.0001,2.000");
  EXPECT_EQ(l3, "0,1,ASR->ASR,1.25,0.0002,3.000");
  EXPECT_FALSE(std::getline(in, l4));
}

}  // namespace
}  // namespace mmcap
