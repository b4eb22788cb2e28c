#include <gtest/gtest.h>

#include "eic/fixture_suite.hpp"
#include "eic/integrate.hpp"
#include "support.hpp"

namespace eic {
namespace {

using testing::error_code;

// Scores a candidate text by a lookup on its joined tokens.
class TableScorer final : public Scorer {
 public:
  explicit TableScorer(std::map<std::string, double> scores) : scores_(std::move(scores)) {}
  ScorerKind kind() const override { return ScorerKind::External; }
  std::vector<double> score_sentences(const WeightedQuery&, const Passage&,
                                      std::span<const std::size_t> indices) override {
    return std::vector<double>(indices.size(), 0.0);
  }
  std::vector<double> score_texts(std::span<const Token>, std::span<const TokenList> candidates) override {
    std::vector<double> out;
    for (const auto& c : candidates) out.push_back(scores_.at(join_tokens(c)));
    return out;
  }

 private:
  std::map<std::string, double> scores_;
};

EvidenceChain chain(std::vector<std::size_t> idx, double score = 0.0) {
  EvidenceChain c;
  c.sentence_indices = std::move(idx);
  c.score = score;
  return c;
}

const Passage kPassage{"p", {{"s0"}, {"s1", "x"}, {"s2"}, {"s3", "y"}}, std::nullopt};
const Token kSep(kSeparatorToken);

TEST(Assemble, Examples) {
  auto e = assemble(chain({3, 0}), kPassage);
  EXPECT_EQ(e.passage_order_indices, (std::vector<std::size_t>{0, 3}));
  EXPECT_EQ(e.text_tokens, (TokenList{"s0", kSep, "s3", "y"}));
  EXPECT_EQ(e.chain.sentence_indices, (std::vector<std::size_t>{3, 0}));

  EXPECT_EQ(assemble(chain({2}), kPassage).text_tokens, (TokenList{"s2"}));
  auto ordered = assemble(chain({1, 2}), kPassage);
  EXPECT_EQ(ordered.passage_order_indices, (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(ordered.text_tokens, (TokenList{"s1", "x", kSep, "s2"}));
}

TEST(Assemble, InvalidIndices) {
  EXPECT_EQ(error_code([] { assemble(chain({7}), kPassage); }), "evidence");
  EXPECT_EQ(error_code([] { assemble(chain({1, 1}), kPassage); }), "evidence");
  EXPECT_EQ(error_code([] { assemble(chain({}), kPassage); }), "evidence");
}

TEST(RerankAndSelect, Argmax) {
  std::vector<IntegratedEvidence> c{assemble(chain({0}), kPassage), assemble(chain({2}), kPassage)};
  TableScorer scorer({{"s0", 0.8}, {"s2", 0.3}});
  auto best = rerank_and_select(c, TokenList{"q"}, scorer);
  EXPECT_EQ(best.passage_order_indices, (std::vector<std::size_t>{0}));
  EXPECT_DOUBLE_EQ(best.rerank_score, 0.8);
}

TEST(RerankAndSelect, TieGoesToShorterChain) {
  std::vector<IntegratedEvidence> c{assemble(chain({2, 0}), kPassage), assemble(chain({2}), kPassage)};
  TableScorer scorer({{"s0 s2", 0.5}, {"s2", 0.5}});
  EXPECT_EQ(rerank_and_select(c, TokenList{"q"}, scorer).passage_order_indices, (std::vector<std::size_t>{2}));

  std::vector<IntegratedEvidence> same_length{assemble(chain({2}), kPassage), assemble(chain({0}), kPassage)};
  TableScorer flat({{"s0", 0.1}, {"s2", 0.1}});
  EXPECT_EQ(rerank_and_select(same_length, TokenList{"q"}, flat).passage_order_indices,
            (std::vector<std::size_t>{0}));
}

TEST(RerankAndSelect, NoisySecondSentenceFiltered) {
  EmbeddingTable t(3);
  t.add("a", std::vector<double>{1, 0, 0});
  t.add("b", std::vector<double>{0, 1, 0});
  t.add("n", std::vector<double>{0, 0, 1});
  Passage p{"p", {{"x"}, {"a", "b"}, {"n", "n"}}, std::nullopt};
  CosineScorer scorer(t);
  const TokenList option{"a", "b"};
  std::vector<IntegratedEvidence> c{assemble(chain({1}), p), assemble(chain({1, 2}), p)};
  const auto single = scorer.score_texts(option, std::vector<TokenList>{c[0].text_tokens})[0];
  const auto pair = scorer.score_texts(option, std::vector<TokenList>{c[1].text_tokens})[0];
  EXPECT_GT(single, pair);
  EXPECT_NEAR(single, 1.0, 1e-12);
  // mean(a,b,n,n) against mean(a,b): cosine = 0.25 / (sqrt(0.5) * sqrt(0.375)).
  EXPECT_NEAR(pair, 0.25 / (std::sqrt(0.5) * std::sqrt(0.375)), 1e-12);
  EXPECT_EQ(rerank_and_select(c, option, scorer).passage_order_indices, (std::vector<std::size_t>{1}));
}

TEST(RerankAndSelect, EmptyCandidates) {
  TableScorer scorer({});
  EXPECT_EQ(error_code([&] { rerank_and_select({}, TokenList{"q"}, scorer); }), "evidence");
}

TEST(RerankAndSelect, DeduplicatesByIndexSet) {
  std::vector<IntegratedEvidence> c{assemble(chain({2, 0}, 0.4), kPassage),
                                    assemble(chain({0, 2}, 0.9), kPassage)};
  TableScorer scorer({{"s0 s2", 0.2}});
  const auto best = rerank_and_select(c, TokenList{"q"}, scorer);
  EXPECT_EQ(best.chain.sentence_indices, (std::vector<std::size_t>{0, 2}));
  EXPECT_DOUBLE_EQ(best.chain.score, 0.9);
}

TEST(RerankAndSelect, MemberOfInputAndOrderInvariant) {
  testing::Gen gen(51);
  for (int trial = 0; trial < 200; ++trial) {
    const auto c = testing::random_case(gen);
    const auto table = testing::to_table(c.vectors, c.dim);
    const Passage p = testing::to_passage(c);
    std::vector<IntegratedEvidence> candidates;
    for (std::size_t k = gen.between(1, 6); k > 0; --k) {
      std::vector<std::size_t> idx{gen.below(p.size())};
      if (p.size() > 1 && gen.coin()) {
        std::size_t other = gen.below(p.size());
        if (other != idx[0]) idx.push_back(other);
      }
      candidates.push_back(assemble(chain(idx, gen.uniform()), p));
    }
    CosineScorer scorer(table);
    const auto best = rerank_and_select(candidates, c.option, scorer);
    bool member = false;
    for (const auto& cand : candidates) member |= cand.passage_order_indices == best.passage_order_indices;
    EXPECT_TRUE(member);

    auto shuffled = candidates;
    for (std::size_t i = shuffled.size(); i > 1; --i) std::swap(shuffled[i - 1], shuffled[gen.below(i)]);
    const auto again = rerank_and_select(shuffled, c.option, scorer);
    EXPECT_EQ(again.passage_order_indices, best.passage_order_indices);
    EXPECT_EQ(again.chain.sentence_indices, best.chain.sentence_indices);
    EXPECT_EQ(again.rerank_score, best.rerank_score);
  }
}

TEST(SelectWithoutIntegration, TopChainOfLongestLength) {
  std::vector<EvidenceChain> chains{chain({1}, 0.9), chain({2}, 0.8), chain({1, 3}, 1.2), chain({2, 0}, 1.5)};
  const auto e = select_without_integration(chains, kPassage);
  EXPECT_EQ(e.passage_order_indices, (std::vector<std::size_t>{0, 2}));
  EXPECT_DOUBLE_EQ(e.rerank_score, 1.5);
}

TEST(Integrate, SelectedLengthsAdaptToEvidenceCount) {
  SuiteSpec spec;
  spec.questions = 30;
  const auto suite = make_fixture_suite(spec);
  CosineScorer scorer(suite.embeddings);
  ExtractorConfig config;
  config.mode = ExtractMode::SoftMask;
  std::map<std::size_t, std::size_t> lengths;
  for (const auto& q : suite.dataset.questions()) {
    const auto& p = suite.dataset.passage_for(q);
    for (const auto& o : q.options) {
      const auto chains = beam_extract(o.text_tokens, p, config, suite.embeddings, scorer);
      ++lengths[integrate(chains, p, o.text_tokens, scorer).passage_order_indices.size()];
    }
  }
  EXPECT_GT(lengths[1], 0u);
  EXPECT_GT(lengths[2], 0u);
}

}  // namespace
}  // namespace eic
