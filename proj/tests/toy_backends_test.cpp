// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "pc/toy_backends.hpp"
#include "support/oracles.hpp"

namespace pc {
namespace {

std::vector<TokenId> ids(std::initializer_list<TokenId> l) { return l; }

TEST(PretokenizeTest, PiecesConcatenateToInput) {
  std::mt19937_64 rng(1);
  const std::string alphabet = "ab Z9 .,\n\t  \xc3\xa9!";
  for (int iter = 0; iter < 300; ++iter) {
    std::string text;
    for (int i = static_cast<int>(rng() % 40); i > 0; --i) text += alphabet[rng() % alphabet.size()];
    std::string rebuilt;
    std::size_t expected_offset = 0;
    for (auto span : pretokenize(text)) {
      EXPECT_EQ(span.offset, expected_offset);
      EXPECT_GT(span.length, 0u);
      rebuilt += text.substr(span.offset, span.length);
      expected_offset += span.length;
    }
    EXPECT_EQ(rebuilt, text);
  }
}

TEST(PretokenizeTest, LeadingSpaceJoinsWordOrPunctuation) {
  std::string text = "a  b ,c\n d";
  std::vector<std::string> pieces;
  for (auto s : pretokenize(text)) pieces.push_back(text.substr(s.offset, s.length));
  EXPECT_EQ(pieces, (std::vector<std::string>{"a", " ", " b", " ,", "c", "\n", " d"}));
}

class ToyVocabularyTest : public ::testing::Test {
 protected:
  ToyVocabulary vocab = ToyVocabulary::from_corpus({"the cat sat"});
};

TEST_F(ToyVocabularyTest, IdsFollowSortedPieceTable) {
  // Pieces " cat" < " sat" < "the" in byte order, numbered from 256.
  EXPECT_EQ(vocab.size(), 259u);
  EXPECT_EQ(vocab.tokenize("the cat").tokens, ids({258, 256}));
  EXPECT_EQ(vocab.tokenize("the sat cat").tokens, ids({258, 257, 256}));
  EXPECT_EQ(vocab.piece(256), " cat");
}

TEST_F(ToyVocabularyTest, UnknownPiecesFallBackToBytes) {
  EXPECT_EQ(vocab.tokenize("the dog").tokens, ids({258, ' ', 'd', 'o', 'g'}));
  auto seq = vocab.tokenize("the dog");
  EXPECT_EQ(seq.spans[1], (SourceSpan{3, 1}));
  EXPECT_EQ(seq.spans[4], (SourceSpan{6, 1}));
}

TEST_F(ToyVocabularyTest, EmptyTextGivesEmptySequence) {
  auto seq = vocab.tokenize("");
  EXPECT_TRUE(seq.empty());
  EXPECT_TRUE(seq.spans.empty());
}

TEST_F(ToyVocabularyTest, RoundTripIsExact) {
  std::mt19937_64 rng(9);
  const std::vector<std::string> words = {"the", " cat", " sat", " dog", "\n", ",", " \xe2\x82\xac", "x"};
  for (int iter = 0; iter < 300; ++iter) {
    std::string text;
    for (int i = static_cast<int>(rng() % 20); i > 0; --i) text += words[rng() % words.size()];
    auto seq = vocab.tokenize(text);
    ASSERT_EQ(seq.tokens.size(), seq.spans.size());
    auto back = vocab.detokenize(seq.tokens);
    EXPECT_EQ(back, text);
    EXPECT_EQ(vocab.tokenize(back).tokens, seq.tokens);
  }
}

class ToyBigramLMTest : public ::testing::Test {
 protected:
  // Token streams: [the, cat, sat] and [the, cat]. N = 5, V = 259.
  std::vector<std::string> corpus{"the cat sat", "the cat"};
  ToyBigramLM lm{ToyVocabulary::from_corpus(corpus), corpus, 0.5};
  static constexpr TokenId kCat = 256, kSat = 257, kThe = 258;
};

TEST_F(ToyBigramLMTest, CountsMatchCorpus) {
  EXPECT_EQ(lm.total_count(), 5u);
  EXPECT_EQ(lm.unigram_count(kThe), 2u);
  EXPECT_EQ(lm.bigram_count(kThe, kCat), 2u);
  EXPECT_EQ(lm.bigram_count(kCat, kSat), 1u);
  EXPECT_EQ(lm.row_total(kCat), 1u);
  EXPECT_EQ(lm.row_total(kSat), 0u);
}

TEST_F(ToyBigramLMTest, EmptyContextSingleTokenUsesSmoothedUnigram) {
  auto lp = lm.score_logprobs({}, ids({kThe}));
  ASSERT_EQ(lp.size(), 1u);
  EXPECT_DOUBLE_EQ(lp.values[0], std::log(3.0 / 264.0));
  EXPECT_DOUBLE_EQ(lm.score_logprobs({}, ids({'z'})).values[0], std::log(1.0 / 264.0));
}

TEST_F(ToyBigramLMTest, ContextMixesBigramAndCache) {
  // h = [the]: 0.5 * (2+1)/(2+259) + 0.5 * 0/1
  auto lp = lm.score_logprobs(ids({kThe}), ids({kCat}));
  EXPECT_DOUBLE_EQ(lp.values[0], std::log(0.5 * 3.0 / 261.0));
  // then h = [the, cat], next = the: 0.5 * (0+1)/(1+259) + 0.5 * 1/2
  auto lp2 = lm.score_logprobs(ids({kThe}), ids({kCat, kThe}));
  EXPECT_DOUBLE_EQ(lp2.values[1], std::log(0.5 * 1.0 / 260.0 + 0.25));
}

TEST_F(ToyBigramLMTest, EmptyTargetGivesEmptyVector) { EXPECT_EQ(lm.score_logprobs(ids({kThe}), {}).size(), 0u); }

TEST_F(ToyBigramLMTest, BigramRowsSumToOne) {
  for (std::size_t a = 0; a < lm.vocab_size(); ++a) {
    double s = 0.0;
    for (std::size_t b = 0; b < lm.vocab_size(); ++b)
      s += lm.bigram_probability(static_cast<TokenId>(a), static_cast<TokenId>(b));
    EXPECT_NEAR(s, 1.0, 1e-9) << "row " << a;
  }
}

TEST_F(ToyBigramLMTest, PredictiveDistributionSumsToOne) {
  for (const auto& h : {ids({}), ids({kThe}), ids({kThe, kCat, 'q'}), ids({kSat, kSat})}) {
    double s = 0.0;
    for (double p : lm.distribution(h)) s += p;
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

TEST_F(ToyBigramLMTest, ChainRuleAdditivityIsExact) {
  std::mt19937_64 rng(5);
  for (int iter = 0; iter < 200; ++iter) {
    auto draw = [&](std::size_t n) {
      std::vector<TokenId> v;
      for (std::size_t i = 0; i < n; ++i) v.push_back(static_cast<TokenId>(rng() % lm.vocab_size()));
      return v;
    };
    auto c = draw(rng() % 6), a = draw(rng() % 6), b = draw(rng() % 6);
    std::vector<TokenId> ab = a, ca = c;
    ab.insert(ab.end(), b.begin(), b.end());
    ca.insert(ca.end(), a.begin(), a.end());
    auto whole = lm.score_logprobs(c, ab).values;
    auto first = lm.score_logprobs(c, a).values;
    auto second = lm.score_logprobs(ca, b).values;
    first.insert(first.end(), second.begin(), second.end());
    EXPECT_EQ(whole, first);
  }
}

TEST_F(ToyBigramLMTest, IncrementalScoringMatchesDistributionRoute) {
  auto c = ids({kThe, kCat}), t = ids({kSat, 'x', kThe, kCat});
  auto lp = lm.score_logprobs(c, t).values;
  auto ref = testing::logprobs_via_distribution(lm, c, t);
  ASSERT_EQ(lp.size(), ref.size());
  for (std::size_t i = 0; i < lp.size(); ++i) EXPECT_DOUBLE_EQ(lp[i], ref[i]);
}

TEST_F(ToyBigramLMTest, WindowOverflowIsReported) {
  ToyBigramLM small(ToyVocabulary::from_corpus(corpus), corpus, 0.5, 3);
  EXPECT_NO_THROW(small.score_logprobs(ids({kThe}), ids({kCat, kSat})));
  try {
    small.score_logprobs(ids({kThe, kThe}), ids({kCat, kSat}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ContextOverflow);
  }
}

TEST_F(ToyBigramLMTest, TrainingIsDeterministic) {
  auto a = ToyBigramLM::train(corpus);
  auto b = ToyBigramLM::train(corpus);
  auto t = a->tokenize("the cat sat the dog");
  EXPECT_EQ(a->score_logprobs({}, t.ids()).values, b->score_logprobs({}, t.ids()).values);
}

TEST_F(ToyBigramLMTest, ZeroCacheWeightIsPlainBigram) {
  ToyBigramLM plain(ToyVocabulary::from_corpus(corpus), corpus, 0.0);
  auto lp = plain.score_logprobs(ids({kCat, kThe}), ids({kCat}));
  EXPECT_DOUBLE_EQ(lp.values[0], std::log(3.0 / 261.0));
  EXPECT_THROW(ToyBigramLM(ToyVocabulary{}, corpus, 1.0), Error);
}

TEST(HashedBagEmbedderTest, Deterministic) {
  HashedBagEmbedder e;
  EXPECT_EQ(e.embed("Where did it sink?").values, e.embed("Where did it sink?").values);
}

TEST(HashedBagEmbedderTest, ThreeWordTextIsSumOfOneHots) {
  HashedBagEmbedder e(512);
  auto v = e.embed("Red fox, red");
  std::vector<double> expected(512, 0.0);
  for (std::string w : {"red", "fox", "red"}) expected[testing::reference_fnv(w) % 512] += 1.0;
  EXPECT_EQ(v.values, expected);
}

TEST(HashedBagEmbedderTest, DisjointVocabulariesAreOrthogonal) {
  HashedBagEmbedder e;
  auto a = e.embed("alpha beta gamma");
  auto b = e.embed("delta epsilon zeta");
  std::set<std::uint64_t> buckets;
  for (std::string w : {"alpha", "beta", "gamma"}) buckets.insert(testing::reference_fnv(w) % e.dim());
  for (std::string w : {"delta", "epsilon", "zeta"})
    ASSERT_EQ(buckets.count(testing::reference_fnv(w) % e.dim()), 0u) << "bucket collision, pick other words";
  double dot = 0.0;
  for (std::size_t i = 0; i < e.dim(); ++i) dot += a.values[i] * b.values[i];
  EXPECT_EQ(dot, 0.0);
  EXPECT_GT(a.norm(), 0.0);
}

TEST(TemplateQuestionStubTest, ProducesDistinctQuestionsContainingTheSubject) {
  TemplateQuestionStub stub;
  EXPECT_TRUE(stub.generate_guiding("where did X sink", 0).empty());
  auto qs = stub.generate_guiding("where did X sink", 3);
  ASSERT_EQ(qs.size(), 3u);
  EXPECT_EQ(std::set<std::string>(qs.begin(), qs.end()).size(), 3u);
  for (const auto& q : qs) EXPECT_NE(q.find("X"), std::string::npos) << q;
  EXPECT_EQ(qs, stub.generate_guiding("where did X sink", 3));
  auto many = stub.generate_guiding("where did X sink?", 12);
  EXPECT_EQ(std::set<std::string>(many.begin(), many.end()).size(), 12u);
}

}  // namespace
}  // namespace pc
