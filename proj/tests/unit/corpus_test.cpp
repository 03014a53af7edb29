/*
 * Copyright 2026 The muforge Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <filesystem>
#include <set>

#include <gtest/gtest.h>

#include "muforge/corpus.hpp"
#include "muforge/error.hpp"
#include "muforge/synthetic.hpp"

namespace muforge::corpus {
namespace {

std::vector<Sentence> corpus_of(std::initializer_list<const char*> lines) {
  std::vector<Sentence> out;
  for (const char* l : lines) out.push_back(tokenize(l));
  return out;
}

TEST(Tokenize, LowercasesAndSplitsPunctuation) {
  EXPECT_EQ(tokenize("The Phone, is GREAT!"), (Sentence{"the", "phone", ",", "is", "great", "!"}));
  EXPECT_TRUE(tokenize("   ").empty());
  EXPECT_EQ(detokenize(tokenize("a  b .")), "a b .");
}

TEST(BuildVocab, KeepsEveryTokenAtMinFreqOne) {
  const auto v = Vocabulary::build(corpus_of({"a a b"}), 1, 100);
  EXPECT_EQ(v.size(), 6u);
  EXPECT_EQ(v.id("a"), 4);
  EXPECT_EQ(v.id("b"), 5);
  EXPECT_EQ(v.token(Vocabulary::kPad), "<pad>");
  EXPECT_EQ(v.token(Vocabulary::kUnk), "<unk>");
}

TEST(BuildVocab, MinFreqThresholdMapsRareToUnk) {
  const auto v = Vocabulary::build(corpus_of({"a a b"}), 2, 100);
  EXPECT_EQ(v.size(), 5u);
  EXPECT_TRUE(v.contains("a"));
  EXPECT_FALSE(v.contains("b"));
  EXPECT_EQ(v.id("b"), Vocabulary::kUnk);
}

TEST(BuildVocab, FrequencyTiesBreakLexicographically) {
  const auto v = Vocabulary::build(corpus_of({"y x y x y x"}), 1, 5);
  EXPECT_EQ(v.size(), 5u);
  EXPECT_TRUE(v.contains("x"));
  EXPECT_FALSE(v.contains("y"));
}

TEST(BuildVocab, RejectsEmptyCorpus) {
  EXPECT_THROW(Vocabulary::build({}, 1, 100), Error);
  EXPECT_THROW(Vocabulary::build(corpus_of({"a"}), 0, 100), Error);
}

TEST(BuildVocab, BijectionAndDecodeRoundTrip) {
  const auto v = Vocabulary::build(corpus_of({"the cat sat on the mat .", "a dog ran"}), 1, 100);
  std::set<TokenId> seen;
  for (TokenId id = Vocabulary::kReserved; id < static_cast<TokenId>(v.size()); ++id) {
    EXPECT_EQ(v.id(v.token(id)), id);
    seen.insert(id);
    const std::string tok = v.token(id);
    EXPECT_EQ(v.decode(v.encode(std::vector<std::string>{tok}, 8)), Sentence{tok});
  }
  EXPECT_EQ(seen.size(), v.size() - Vocabulary::kReserved);
}

TEST(BuildVocab, SaveLoadRoundTripAndHash) {
  const auto v = Vocabulary::build(corpus_of({"b a c a"}), 1, 100);
  const auto path = std::filesystem::temp_directory_path() / "muforge_vocab_test.txt";
  v.save(path);
  const auto w = Vocabulary::load(path);
  EXPECT_EQ(v, w);
  EXPECT_EQ(v.hash(), w.hash());
  EXPECT_NE(v.hash(), Vocabulary::build(corpus_of({"b a d a"}), 1, 100).hash());
  std::filesystem::remove(path);
}

TEST(Encode, EmptySentenceIsBosEos) {
  const auto v = Vocabulary::build(corpus_of({"a b"}), 1, 100);
  EXPECT_EQ(v.encode(Sentence{}, 8), (std::vector<TokenId>{Vocabulary::kBos, Vocabulary::kEos}));
}

TEST(Encode, KnownAndUnknownTokens) {
  const auto v = Vocabulary::build(corpus_of({"a b"}), 1, 100);
  EXPECT_EQ(v.encode(tokenize("a b"), 8), (std::vector<TokenId>{1, v.id("a"), v.id("b"), 2}));
  EXPECT_EQ(v.encode(tokenize("a z"), 8), (std::vector<TokenId>{1, v.id("a"), Vocabulary::kUnk, 2}));
}

TEST(Encode, TruncatesContentToMaxLen) {
  const auto v = Vocabulary::build(corpus_of({"a b c d"}), 1, 100);
  const auto ids = v.encode(tokenize("a b c d"), 4);
  ASSERT_EQ(ids.size(), 4u);
  EXPECT_EQ(ids.front(), Vocabulary::kBos);
  EXPECT_EQ(ids.back(), Vocabulary::kEos);
  EXPECT_THROW(v.encode(tokenize("a"), 2), Error);
}

TEST(Batches, TrainModeDropsRemainder) {
  std::vector<std::vector<TokenId>> rows(10, std::vector<TokenId>{1, 4, 2});
  const auto b = make_batches(rows, 4, 7, BatchMode::kTrain);
  ASSERT_EQ(b.size(), 2u);
  EXPECT_EQ(b[0].rows, 4u);
  EXPECT_EQ(b[1].rows, 4u);
}

TEST(Batches, EvalModeKeepsEveryRowInOrder) {
  std::vector<std::vector<TokenId>> rows(10, std::vector<TokenId>{1, 4, 2});
  const auto b = make_batches(rows, 4, 7, BatchMode::kEval);
  ASSERT_EQ(b.size(), 3u);
  EXPECT_EQ(b[2].rows, 2u);
  EXPECT_EQ(b[0].source, (std::vector<std::size_t>{0, 1, 2, 3}));
}

TEST(Batches, SameSeedSameOrder) {
  std::vector<std::vector<TokenId>> rows;
  for (TokenId i = 0; i < 20; ++i) rows.push_back({1, 4 + i, 2});
  const auto a = make_batches(rows, 4, 11, BatchMode::kTrain);
  const auto b = make_batches(rows, 4, 11, BatchMode::kTrain);
  const auto c = make_batches(rows, 4, 12, BatchMode::kTrain);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].ids, b[i].ids);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs = differs || a[i].ids != c[i].ids;
  EXPECT_TRUE(differs);
}

TEST(Batches, RejectsBatchSizeBelowTwo) {
  std::vector<std::vector<TokenId>> rows(4, std::vector<TokenId>{1, 2});
  EXPECT_THROW(make_batches(rows, 1, 0, BatchMode::kTrain), Error);
}

TEST(Batches, PaddingAndMaskInvariants) {
  std::vector<std::vector<TokenId>> rows{{1, 4, 5, 2}, {1, 2}, {1, 6, 2}};
  const auto b = make_batch(rows);
  ASSERT_EQ(b.steps, 4u);
  for (std::size_t r = 0; r < b.rows; ++r) {
    EXPECT_EQ(b.at(r, 0), Vocabulary::kBos);
    EXPECT_EQ(b.at(r, b.lengths[r] - 1), Vocabulary::kEos);
    for (std::size_t t = 0; t < b.steps; ++t) {
      EXPECT_EQ(b.mask[r * b.steps + t], t < b.lengths[r] ? 1 : 0);
      if (t >= b.lengths[r]) EXPECT_EQ(b.at(r, t), Vocabulary::kPad);
    }
  }
  EXPECT_EQ(b.token_count(), 3u + 1u + 2u);
}

TEST(FilterLong, CountsContentTokensOnly) {
  auto kept = filter_long(corpus_of({"a b c", "a b", "a"}), 2);
  EXPECT_EQ(kept.size(), 2u);
}

TEST(Synthetic, DeterministicAndLabelled) {
  const auto a = synthesize_reviews(200, 5);
  const auto b = synthesize_reviews(200, 5);
  ASSERT_EQ(a.size(), 200u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].tokens, b[i].tokens);
    EXPECT_EQ(polarity_of(a[i].tokens), a[i].polarity);
  }
}

TEST(Synthetic, PolarityFlipKeepsEverythingElse) {
  for (std::size_t t = 0; t < review_template_count(); ++t) {
    const auto pos = render_review(t, 3, 1, 2, +1);
    const auto neg = render_review(t, 3, 1, 2, -1);
    ASSERT_EQ(pos.tokens.size(), neg.tokens.size());
    std::size_t diff = 0;
    for (std::size_t i = 0; i < pos.tokens.size(); ++i) diff += pos.tokens[i] != neg.tokens[i];
    EXPECT_EQ(diff, 1u);
    EXPECT_EQ(polarity_of(pos.tokens), 1);
    EXPECT_EQ(polarity_of(neg.tokens), -1);
  }
}

TEST(Synthetic, SmallVocabulary) {
  std::vector<Sentence> s;
  for (auto& r : synthesize_reviews(3000, 1)) s.push_back(r.tokens);
  EXPECT_LE(Vocabulary::build(s, 1, 100000).size(), 300u);
}

}  // namespace
}  // namespace muforge::corpus
