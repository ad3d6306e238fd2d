// tests/unit/test_metrics.cpp

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

#include <algorithm>

#include "metric_oracles.hpp"
#include "mmcap/error.hpp"
#include "mmcap/metrics.hpp"

namespace mmcap {
namespace {

std::vector<Words> w(std::initializer_list<const char*> sentences) {
  std::vector<Words> out;
  for (auto s : sentences) out.push_back(eval_tokenize(s));
  return out;
}

TEST(EvalTokenize, LowercasesAndDropsPunctuation) {
  EXPECT_EQ(eval_tokenize("Adding the EGGS, then... mix!"), (Words{"adding", "the", "eggs", "then", "mix"}));
  EXPECT_EQ(eval_tokenize("don't  stop"), (Words{"don't", "stop"}));
  EXPECT_TRUE(eval_tokenize(" .. ").empty());
}

TEST(Bleu, HandCountedExamples) {
  auto c = w({"adding the eggs"}), r = w({"adding eggs"});
  EXPECT_NEAR(bleu(c, r, 1), 200.0 / 3.0, 1e-9);
  EXPECT_NEAR(bleu(r, r, 4), 0.0, 0.0);  // 2 words have no 4-grams
  auto long_c = w({"mix the batter well now", "add the eggs to the bowl"});
  EXPECT_DOUBLE_EQ(bleu(long_c, long_c, 4), 100.0);
  EXPECT_EQ(bleu(w({"intro"}), w({"outro"}), 1), 0.0);
  // Brevity: c = 1, r = 2, precision 1.
  EXPECT_NEAR(bleu(w({"eggs"}), w({"adding eggs"}), 1), 100.0 * std::exp(1.0 - 2.0), 1e-9);
}

TEST(Bleu, Errors) {
  std::vector<Words> none;
  EXPECT_THROW(bleu(none, none, 1), DataError);
  EXPECT_THROW(bleu(w({"a"}), w({"a", "b"}), 1), DataError);
}

TEST(RougeL, HandComputedExamples) {
  EXPECT_NEAR(rouge_l(w({"mixing the batter"}), w({"mixing batter"})), 82.99, 0.005);
  // P = 2/3, R = 1, beta 1.2: 2.44 * (2/3) / (1 + 1.44 * 2/3)
  EXPECT_NEAR(rouge_l(w({"mixing the batter"}), w({"mixing batter"})), 100 * 2.44 * (2.0 / 3) / (1 + 0.96), 1e-9);
  EXPECT_DOUBLE_EQ(rouge_l(w({"adding eggs"}), w({"adding eggs"})), 100.0);
  EXPECT_EQ(rouge_l(std::vector<Words>{Words{}}, w({"adding eggs"})), 0.0);
}

TEST(CiderD, HandComputedExamples) {
  auto two = w({"a b c d", "e f g h"});
  EXPECT_NEAR(cider_d(two, two), 10.0, 1e-12);
  auto one = w({"a b c d"});
  EXPECT_EQ(cider_d(one, one), 0.0);
  EXPECT_EQ(cider_d(w({"a b", "c d"}), w({"e f", "g h"})), 0.0);
}

TEST(CiderD, LengthPenalty) {
  // Unigram-only overlap is the whole reference; penalty exp(-1/72) for a
  // one-word length difference.
  auto c = w({"x y", "q r"}), r = w({"x y z", "q r"});
  auto s = cider_d_scores(c, r);
  EXPECT_LT(s[0], s[1]);
  EXPECT_NEAR(s[1], 10.0 * (1 + 1 + 0 + 0) / 4.0, 1e-12);
}

TEST(MetricOracles, TwoHundredRandomCorpora) {
  Rng rng(2024);
  for (int t = 0; t < 200; ++t) {
    auto [c, r] = oracle::random_corpus(rng);
    ASSERT_NEAR(bleu(c, r, 1), oracle::bleu(c, r, 1), 1e-9) << t;
    ASSERT_NEAR(bleu(c, r, 4), oracle::bleu(c, r, 4), 1e-9) << t;
    ASSERT_NEAR(rouge_l(c, r), oracle::rouge_l(c, r), 1e-9) << t;
    ASSERT_NEAR(cider_d(c, r), oracle::cider_d(c, r), 1e-9) << t;
  }
}

TEST(MetricProperties, OrderInvarianceAndRanges) {
  Rng rng(7);
  for (int t = 0; t < 100; ++t) {
    auto [c, r] = oracle::random_corpus(rng);
    std::vector<std::size_t> perm(c.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    shuffle(perm.begin(), perm.end(), rng);
    std::vector<Words> pc, pr;
    for (auto i : perm) {
      pc.push_back(c[i]);
      pr.push_back(r[i]);
    }
    EXPECT_NEAR(bleu(c, r, 4), bleu(pc, pr, 4), 1e-9);
    EXPECT_NEAR(rouge_l(c, r), rouge_l(pc, pr), 1e-9);
    EXPECT_NEAR(cider_d(c, r), cider_d(pc, pr), 1e-9);
    for (double s : {bleu(c, r, 1), bleu(c, r, 4), rouge_l(c, r)}) {
      EXPECT_GE(s, 0.0);
      EXPECT_LE(s, 100.0 + 1e-9);
    }
    EXPECT_GE(cider_d(c, r), 0.0);
    EXPECT_NEAR(rouge_l(r, r), 100.0, 1e-9);
  }
}

TEST(EvalReport, CountsAndFormats) {
  std::vector<std::string> c{"adding the eggs", "mix, batter"}, r{"adding eggs", "mix batter"};
  std::vector<std::pair<std::string, std::int64_t>> ids{{"v1", 0}, {"v1", 3}};
  auto rep = evaluate(c, r, ids);
  EXPECT_EQ(rep.count, 2u);
  ASSERT_EQ(rep.segments.size(), 2u);
  EXPECT_EQ(rep.segments[1].seg_index, 3);
  EXPECT_DOUBLE_EQ(rep.segments[1].rouge_l, 100.0);
  EXPECT_NEAR(rep.bleu1, 100.0 * 4 / 5, 1e-9);
  EXPECT_NE(rep.to_table().find("ROUGE-L"), std::string::npos);
  EXPECT_EQ(rep.summary_csv().substr(0, 19), "metric,value,scale\n");
  EXPECT_NE(rep.segments_csv().find("\"mix, batter\""), std::string::npos);
  EXPECT_THROW(evaluate(c, std::vector<std::string>{"x"}), DataError);
  auto empty = evaluate({}, {});
  EXPECT_EQ(empty.count, 0u);
  EXPECT_EQ(empty.rouge_l, 0.0);
}

TEST(ConstantBaseline, Examples) {
  std::vector<std::string> all_intro(5, "intro");
  EXPECT_DOUBLE_EQ(constant_baseline(all_intro, "intro").bleu1, 100.0);
  std::vector<std::string> refs{"intro", "adding eggs", "outro"};
  auto rep = constant_baseline(refs, "");
  EXPECT_EQ(rep.bleu1, 0.0);
  EXPECT_EQ(rep.rouge_l, 0.0);
  EXPECT_EQ(rep.cider_d, 0.0);
  auto intro = constant_baseline(refs, "intro");
  EXPECT_NEAR(intro.rouge_l, 100.0 / 3, 1e-9);
  EXPECT_EQ(intro.count, 3u);
}

TEST(Agreement, IdenticalAnnotatorsAgreeFully) {
  std::vector<Annotation> a{{"v", "A", {{0, "intro"}, {4, "adding eggs"}}},
                            {"v", "B", {{0, "intro"}, {4, "adding eggs"}}}};
  auto pool = agreement_pool(a);
  ASSERT_EQ(pool.size(), 2u);
  EXPECT_DOUBLE_EQ(evaluate_agreement(pool).rouge_l, 100.0);
}

TEST(Agreement, NoSharedStartsGivesEmptyPool) {
  std::vector<Annotation> a{{"v", "A", {{0, "intro"}}}, {"v", "B", {{1, "intro"}}}, {"w", "A", {{0, "intro"}}}};
  auto pool = agreement_pool(a);
  EXPECT_TRUE(pool.empty());
  EXPECT_EQ(evaluate_agreement(pool).count, 0u);
}

TEST(Agreement, PairsEveryAnnotatorPairAndStandardizes) {
  std::vector<Annotation> a{{"v", "A", {{0, "Introduction"}, {2, "mix"}}},
                            {"v", "B", {{0, "intro"}, {2, "whisk"}}},
                            {"v", "C", {{0, "opening"}, {5, "end"}}},
                            {"u", "A", {{3, "closing"}}},
                            {"u", "B", {{3, "outro"}}}};
  auto tags = TagTable::standard();
  auto pool = agreement_pool(a, &tags);
  // v: (A,B) 2 pairs, (A,C) 1, (B,C) 1; u: (A,B) 1.
  ASSERT_EQ(pool.size(), 5u);
  EXPECT_EQ(pool[0].reference, "intro");
  EXPECT_EQ(pool[0].prediction, "intro");
  EXPECT_EQ(pool[1].reference, "mix");
  EXPECT_EQ(pool[1].prediction, "whisk");
  EXPECT_EQ(pool[4].video_id, "u");
  EXPECT_EQ(pool[4].prediction, "outro");
  EXPECT_NEAR(evaluate_agreement(pool).rouge_l, 80.0, 1e-9);
}

}  // namespace
}  // namespace mmcap
