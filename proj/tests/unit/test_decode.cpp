// tests/unit/test_decode.cpp

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

#include <cmath>
#include <filesystem>
#include <functional>

#include "mmcap/decode.hpp"
#include "mmcap/error.hpp"
#include "mmcap/synthetic.hpp"

namespace mmcap {
namespace {

constexpr std::size_t kToyVocab = 10;  // EOS plus five words (ids 5..9)

// Next-token distribution drawn afresh for every distinct prefix.
NextTokenScorer toy_model(std::uint64_t seed) {
  return [seed](std::span<const std::vector<TokenId>> prefixes) {
    std::vector<std::vector<double>> out;
    for (const auto& p : prefixes) {
      std::uint64_t h = seed;
      for (auto t : p) h = h * 1000003u + static_cast<std::uint64_t>(t) + 1;
      Rng rng(h);
      std::vector<double> logits(kToyVocab);
      for (auto& x : logits) x = 3.0 * normal01(rng);
      double z = 0;
      for (auto x : logits) z += std::exp(x);
      for (auto& x : logits) x -= std::log(z);
      out.push_back(logits);
    }
    return out;
  };
}

double sequence_log_prob(const NextTokenScorer& s, const std::vector<TokenId>& tokens, bool eos) {
  double lp = 0;
  std::vector<TokenId> prefix;
  for (std::size_t i = 0; i <= tokens.size(); ++i) {
    if (i == tokens.size() && !eos) break;
    std::vector<std::vector<TokenId>> q{prefix};
    const TokenId next = i < tokens.size() ? tokens[i] : kEos;
    lp += s(q)[0][static_cast<std::size_t>(next)];
    if (i < tokens.size()) prefix.push_back(tokens[i]);
  }
  return lp;
}

// Best length-normalized score over every finished sequence up to max_len.
double exhaustive_best(const NextTokenScorer& s, std::size_t max_len) {
  double best = -INFINITY;
  std::function<void(std::vector<TokenId>&)> walk = [&](std::vector<TokenId>& seq) {
    if (seq.size() == max_len) {
      best = std::max(best, sequence_log_prob(s, seq, false) / static_cast<double>(seq.size()));
      return;
    }
    best = std::max(best, sequence_log_prob(s, seq, true) / static_cast<double>(seq.size() + 1));
    for (TokenId t = 5; t < static_cast<TokenId>(kToyVocab); ++t) {
      seq.push_back(t);
      walk(seq);
      seq.pop_back();
    }
  };
  std::vector<TokenId> seq;
  walk(seq);
  return best;
}

TEST(Decode, OneHotModelEmitsItsSequence) {
  const std::vector<TokenId> target{7, 5, 9, 9};
  NextTokenScorer s = [&](std::span<const std::vector<TokenId>> prefixes) {
    std::vector<std::vector<double>> out;
    for (const auto& p : prefixes) {
      std::vector<double> row(kToyVocab, -1e9);
      row[static_cast<std::size_t>(p.size() < target.size() ? target[p.size()] : kEos)] = 0.0;
      out.push_back(row);
    }
    return out;
  };
  for (std::size_t beam : {1u, 2u, 4u}) {
    auto h = beam_search(s, {beam, 32});
    EXPECT_EQ(h.tokens, target);
    EXPECT_TRUE(h.ended_with_eos);
    EXPECT_EQ(h.log_prob, 0.0);
  }
}

TEST(Decode, TiesGoToTheSmallerTokenId) {
  NextTokenScorer uniform = [](std::span<const std::vector<TokenId>> prefixes) {
    return std::vector<std::vector<double>>(prefixes.size(), std::vector<double>(kToyVocab, -1.0));
  };
  // EOS (2) is the smallest generatable id.
  EXPECT_TRUE(greedy_decode(uniform).tokens.empty());
  EXPECT_TRUE(beam_search(uniform, {4, 32}).tokens.empty());
}

TEST(Decode, MaxLengthTruncates) {
  NextTokenScorer never_stop = [](std::span<const std::vector<TokenId>> prefixes) {
    std::vector<std::vector<double>> out(prefixes.size(), std::vector<double>(kToyVocab, -5.0));
    for (auto& r : out) r[6] = -0.1;
    return out;
  };
  auto h = beam_search(never_stop, {3, 5});
  EXPECT_EQ(h.tokens, (std::vector<TokenId>(5, 6)));
  EXPECT_FALSE(h.ended_with_eos);
  EXPECT_TRUE(h.finished);
  EXPECT_THROW(beam_search(never_stop, {0, 5}), ContractError);
}

TEST(Decode, BeamOneIsGreedyAndWiderBeamsNeverLose) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto s = toy_model(seed);
    auto g = greedy_decode(s, 4);
    auto b1 = beam_search(s, {1, 4});
    ASSERT_EQ(g.tokens, b1.tokens);
    ASSERT_EQ(g.log_prob, b1.log_prob);
    auto b4 = beam_search(s, {4, 4});
    ASSERT_GE(b4.score(), b1.score()) << seed;
    const double best = exhaustive_best(s, 4);
    ASSERT_LE(b4.score(), best + 1e-12);
    EXPECT_NEAR(beam_search(s, {5000, 4}).score(), best, 1e-12) << seed;
    // Scores are recomputable from the scorer.
    EXPECT_NEAR(b4.log_prob, sequence_log_prob(s, b4.tokens, b4.ended_with_eos), 1e-12);
  }
}

struct ModelFixture {
  SyntheticWorld world{3, 5};
  Vocabulary vocab;
  Dataset data;
  ModelFixture() {
    Rng rng(4);
    std::vector<SyntheticVideo> videos;
    for (int i = 0; i < 3; ++i) videos.push_back(world.make_video("v" + std::to_string(i), 3, rng));
    std::vector<std::string> corpus;
    for (auto& v : videos)
      for (auto& s : v.segments) corpus.insert(corpus.end(), {s.asr, s.caption});
    vocab = train_bpe(corpus, 80);
    for (auto& v : videos)
      for (std::size_t i = 0; i < v.segments.size(); ++i)
        data.add_segment(vocab, v.id, static_cast<std::int64_t>(i), v.segments[i].asr, v.segments[i].frames,
                         v.segments[i].caption);
  }
  ModelConfig config() const {
    ModelConfig c;
    c.d_model = 16;
    c.heads = 2;
    c.ffn_dim = 32;
    c.vocab_size = vocab.size();
    c.video_feature_dim = 5;
    c.init_std = 0.5;
    return c;
  }
};

TEST(Decode, ModelBeamOneEqualsGreedyTokenForToken) {
  ModelFixture f;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    Model<float> m(f.config(), seed);
    std::vector<EncoderExample> ex;
    for (const auto& s : f.data.segments()) ex.push_back(segment_input(s, Style::kAsr, true));
    auto batch = make_batch(ex, 240, 40, 5);
    auto enc = m.encode(&batch.text, &batch.video, {});
    for (std::size_t i = 0; i < ex.size(); ++i) {
      auto s = model_scorer(m, enc, i);
      auto g = greedy_decode(s, 12);
      auto b = beam_search(s, {1, 12});
      ASSERT_EQ(g.tokens, b.tokens);
      ASSERT_GE(beam_search(s, {3, 12}).score(), g.score());
    }
  }
}

TEST(Decode, SelectExamplesMatchesSingleExampleEncoding) {
  ModelFixture f;
  Model<float> m(f.config(), 9);
  std::vector<EncoderExample> ex;
  for (std::size_t i = 0; i < 3; ++i) ex.push_back(segment_input(f.data.segments()[i], Style::kAsr, true));
  auto batch = make_batch(ex, 240, 40, 5);
  auto enc = m.encode(&batch.text, &batch.video, {});
  std::vector<std::size_t> rows{2, 2, 0};
  auto sub = select_examples(enc, rows);
  EXPECT_EQ(sub.batch, 3u);
  const std::size_t d = 16, L = enc.text_len;
  for (std::size_t t = 0; t < L * d; ++t) {
    EXPECT_EQ(sub.text.data()[t], enc.text.data()[2 * L * d + t]);
    EXPECT_EQ(sub.text.data()[2 * L * d + t], enc.text.data()[t]);
  }
  EXPECT_EQ(sub.video_len, enc.video_len);
}

TEST(Predict, DeterministicAndRoundTrips) {
  ModelFixture f;
  Model<float> m(f.config(), 11);
  std::vector<std::size_t> idx{0, 1, 2, 3, 4};
  auto a = predict_captions(m, f.vocab, f.data, idx, true, {2, 8}, 2);
  auto b = predict_captions(m, f.vocab, f.data, idx, true, {2, 8}, 3);
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.size(), 5u);
  EXPECT_EQ(a[4].video_id, "v1");
  auto path = (std::filesystem::temp_directory_path() / "mmcap_pred.jsonl").string();
  write_predictions(path, a);
  EXPECT_EQ(read_predictions(path), a);
  EXPECT_THROW(read_predictions(path + ".missing"), DataError);
}

}  // namespace
}  // namespace mmcap
