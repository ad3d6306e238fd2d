// tests/unit/test_tokenizer.cpp

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

#include <sstream>

#include "mmcap/error.hpp"
#include "mmcap/rng.hpp"
#include "mmcap/synthetic.hpp"
#include "mmcap/tokenizer.hpp"

namespace mmcap {
namespace {

std::vector<std::string> sample_corpus() {
  return {"so now we are going to chop the onions", "chop the onions finely",
          "add the eggs to the bowl", "adding eggs", "whisk the eggs and the milk",
          "now we chop the garlic", "mixing the batter"};
}

TEST(TrainBpe, FirstMergeIsMostFrequentPair) {
  // Pairs: (a, a</w>) x2 from "aa aa", (a, b</w>) x1 from "ab".
  std::vector<std::string> corpus{"aa aa ab"};
  auto v = train_bpe(corpus, kNumSpecialTokens + 3 + 1);
  ASSERT_EQ(v.merges().size(), 1u);
  EXPECT_EQ(v.merges()[0].first, "a");
  EXPECT_EQ(v.merges()[0].second, std::string("a") + std::string(kEndOfWord));
}

TEST(TrainBpe, BudgetOfBaseSetMeansNoMerges) {
  std::vector<std::string> corpus{"aa aa ab"};
  auto v = train_bpe(corpus, kNumSpecialTokens + 3);
  EXPECT_TRUE(v.merges().empty());
  EXPECT_EQ(v.size(), static_cast<std::size_t>(kNumSpecialTokens) + 3);
  EXPECT_EQ(v.base_size(), 3u);
}

TEST(TrainBpe, Deterministic) {
  auto corpus = sample_corpus();
  EXPECT_TRUE(train_bpe(corpus, 80) == train_bpe(corpus, 80));
}

TEST(TrainBpe, TieBreakIsLexicographic) {
  // (b, a</w>) and (a, b</w>) both occur twice; ("a", "b</w>") sorts first.
  std::vector<std::string> corpus{"ab ba ab ba"};
  auto v = train_bpe(corpus, kNumSpecialTokens + 4 + 1);
  ASSERT_EQ(v.merges().size(), 1u);
  EXPECT_EQ(v.merges()[0].first, "a");
}

TEST(TrainBpe, StopsWhenNoPairRepeats) {
  std::vector<std::string> corpus{"abc"};
  auto v = train_bpe(corpus, 1000);
  EXPECT_TRUE(v.merges().empty());
}

TEST(TrainBpe, EmptyCorpusIsDataError) {
  std::vector<std::string> corpus{"", "   "};
  EXPECT_THROW(train_bpe(corpus, 100), DataError);
}

TEST(TrainBpe, TooSmallTargetIsContractError) {
  std::vector<std::string> corpus{"abc"};
  EXPECT_THROW(train_bpe(corpus, kNumSpecialTokens + 2), ContractError);
}

TEST(Encode, EmptyTextGivesNoIds) {
  auto corpus = sample_corpus();
  auto v = train_bpe(corpus, 60);
  EXPECT_TRUE(v.encode("").empty());
  EXPECT_EQ(v.decode(std::vector<TokenId>{}), "");
}

TEST(Encode, UnknownCharacterBecomesUnk) {
  auto corpus = sample_corpus();
  auto v = train_bpe(corpus, 60);
  auto ids = v.encode("chop the q onions");
  EXPECT_NE(std::find(ids.begin(), ids.end(), kUnk), ids.end());
}

TEST(Encode, IsCaseInsensitive) {
  auto corpus = sample_corpus();
  auto v = train_bpe(corpus, 60);
  EXPECT_EQ(v.encode("Chop The ONIONS"), v.encode("chop the onions"));
}

TEST(Decode, SpecialTokensAreDropped) {
  auto corpus = sample_corpus();
  auto v = train_bpe(corpus, 60);
  auto ids = v.encode("chop");
  std::vector<TokenId> wrapped{kBos};
  wrapped.insert(wrapped.end(), ids.begin(), ids.end());
  wrapped.push_back(kEos);
  EXPECT_EQ(v.decode(wrapped), v.decode(ids));
}

TEST(Decode, OutOfRangeIdIsDataError) {
  auto corpus = sample_corpus();
  auto v = train_bpe(corpus, 60);
  std::vector<TokenId> bad{static_cast<TokenId>(v.size())};
  EXPECT_THROW(v.decode(bad), DataError);
}

TEST(Vocabulary, SaveLoadSaveIsByteIdentical) {
  auto corpus = sample_corpus();
  auto v = train_bpe(corpus, 70);
  std::stringstream a;
  v.save(a);
  auto loaded = Vocabulary::load(a);
  std::stringstream b;
  loaded.save(b);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_TRUE(loaded == v);
  EXPECT_EQ(loaded.encode("chop the onions"), v.encode("chop the onions"));
}

TEST(Vocabulary, LoadRejectsCorruptHeader) {
  std::stringstream s("not-a-vocab 1 0 6 0\n");
  EXPECT_THROW(Vocabulary::load(s), DataError);
}

// Round-trip, reserved-id exclusion, and compression over sampled corpus lines.
TEST(TokenizerProperty, RoundTripOnHundredCorpusLines) {
  SyntheticWorld world(4242);
  std::vector<std::string> corpus;
  Rng rng(1);
  for (int i = 0; i < 400; ++i) corpus.push_back(world.random_asr_sentence(rng));
  for (int i = 0; i < 200; ++i) corpus.push_back(world.random_caption(rng));
  auto v = train_bpe(corpus, 300);
  Rng pick(2);
  for (int i = 0; i < 100; ++i) {
    const auto& line = corpus[static_cast<std::size_t>(uniform_int(pick, 0, 599))];
    auto ids = v.encode(line);
    EXPECT_EQ(v.decode(ids), normalize_text(line));
    for (auto id : ids) EXPECT_GE(id, kNumSpecialTokens);
    EXPECT_LE(ids.size(), line.size());
    EXPECT_EQ(v.encode(v.decode(ids)), ids);
  }
}

TEST(TokenizerProperty, IdsAreDense) {
  auto corpus = sample_corpus();
  auto v = train_bpe(corpus, 90);
  for (std::size_t i = kNumSpecialTokens; i < v.size(); ++i)
    EXPECT_EQ(v.find(v.token(static_cast<TokenId>(i))), static_cast<TokenId>(i));
}

}  // namespace
}  // namespace mmcap
