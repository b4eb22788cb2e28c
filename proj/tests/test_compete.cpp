#include <gtest/gtest.h>

#include <cmath>

#include "eic/compete.hpp"
#include "support.hpp"

namespace eic {
namespace {

using testing::error_code;

TEST(Hinge, ConsistentExamples) {
  EXPECT_DOUBLE_EQ(hinge_loss_consistent(1.0, std::vector<double>{0.2}, 0.5), 0.0);
  EXPECT_NEAR(hinge_loss_consistent(0.6, std::vector<double>{0.4}, 0.5), 0.3, 1e-12);
  EXPECT_NEAR(hinge_loss_consistent(0.5, std::vector<double>{0.6, 0.7}, 0.5), 1.3, 1e-12);
}

TEST(Hinge, ContradictoryExamples) {
  EXPECT_DOUBLE_EQ(hinge_loss_contradictory(0.0, std::vector<double>{0.9}, 0.5), 0.0);
  EXPECT_NEAR(hinge_loss_contradictory(0.5, std::vector<double>{0.7}, 0.5), 0.3, 1e-12);
}

TEST(Hinge, RandomProperties) {
  testing::Gen gen(61);
  for (int trial = 0; trial < 1000; ++trial) {
    const double a = gen.uniform(-2, 2), m = gen.uniform(0.01, 1);
    std::vector<double> others(gen.between(1, 3));
    for (double& x : others) x = gen.uniform(-2, 2);

    const double lc = hinge_loss_consistent(a, others, m);
    const double lx = hinge_loss_contradictory(a, others, m);
    EXPECT_NEAR(lc, testing::ref_hinge_consistent(a, others, m), 1e-12);
    EXPECT_NEAR(lx, testing::ref_hinge_contradictory(a, others, m), 1e-12);
    EXPECT_GE(lc, 0.0);
    EXPECT_GE(lx, 0.0);

    bool all_margins = true;
    for (double o : others) all_margins &= a - o >= m;
    EXPECT_EQ(lc == 0.0, all_margins);

    const double b = others[0];
    EXPECT_DOUBLE_EQ(hinge_loss_contradictory(a, std::vector<double>{b}, m),
                     hinge_loss_consistent(b, std::vector<double>{a}, m));

    const double shift = gen.uniform(-5, 5);
    auto shifted = others;
    for (double& x : shifted) x += shift;
    EXPECT_NEAR(hinge_loss_consistent(a + shift, shifted, m), lc, 1e-9);
    EXPECT_NEAR(hinge_loss_contradictory(a + shift, shifted, m), lx, 1e-9);

    const double a2 = gen.uniform(-2, 2);
    std::vector<double> others2(others.size()), mid(others.size());
    for (std::size_t i = 0; i < others.size(); ++i) {
      others2[i] = gen.uniform(-2, 2);
      mid[i] = 0.5 * (others[i] + others2[i]);
    }
    EXPECT_LE(hinge_loss_consistent(0.5 * (a + a2), mid, m),
              0.5 * (lc + hinge_loss_consistent(a2, others2, m)) + 1e-12);
  }
}

TEST(SelectAnswer, Examples) {
  const std::vector<double> s{0.1, 0.9, 0.3, 0.2};
  EXPECT_EQ(select_answer(Polarity::MostConsistent, s), 1u);
  EXPECT_EQ(select_answer(Polarity::MostContradictory, s), 0u);
  EXPECT_EQ(select_answer(Polarity::MostConsistent, std::vector<double>{0.5, 0.5, 0.1, 0.1}), 0u);
  EXPECT_EQ(error_code([] { select_answer(Polarity::MostConsistent, std::vector<double>{1, 2}); }),
            "prediction");
}

TEST(SelectAnswer, InvariantUnderIncreasingTransform) {
  testing::Gen gen(62);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> s(4);
    for (double& x : s) x = std::round(gen.uniform(-3, 3) * 4) / 4;
    std::vector<double> t(4);
    for (std::size_t i = 0; i < 4; ++i) t[i] = std::exp(s[i]) * 3 + 1;
    for (auto p : {Polarity::MostConsistent, Polarity::MostContradictory}) {
      EXPECT_EQ(select_answer(p, s), select_answer(p, t));
    }
  }
}

CompetitionExample random_example(testing::Gen& gen, std::size_t dim) {
  CompetitionExample e;
  e.polarity = gen.coin() ? Polarity::MostConsistent : Polarity::MostContradictory;
  e.answer = gen.below(4);
  for (auto& f : e.features) f = gen.vec(dim);
  return e;
}

TEST(Gradient, MatchesCentralDifferences) {
  testing::Gen gen(63);
  std::size_t checked = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t dim = gen.between(1, 5);
    const auto example = random_example(gen, dim);
    CompetitionConfig config;
    config.objective = gen.coin() ? Objective::Pairwise : Objective::Pointwise;
    LinearVerifier v = LinearVerifier::zeros(std::vector<std::string>(dim, "f"));
    for (double& w : v.weights) w = gen.normal();
    v.bias = gen.normal();

    if (config.objective == Objective::Pairwise) {
      bool near_kink = false;
      const double ga = v.score(example.features[example.answer]);
      for (std::size_t i = 0; i < 4; ++i) {
        if (i == example.answer) continue;
        const double gi = v.score(example.features[i]);
        const double arg = example.polarity == Polarity::MostConsistent ? gi - ga + config.margin
                                                                        : ga - gi + config.margin;
        near_kink |= std::abs(arg) < 1e-3;
      }
      if (near_kink) continue;
    }

    const auto grad = example_gradient(v, example, config);
    ASSERT_EQ(grad.size(), dim + 1);
    const double h = 1e-6;
    for (std::size_t d = 0; d <= dim; ++d) {
      LinearVerifier up = v, down = v;
      (d < dim ? up.weights[d] : up.bias) += h;
      (d < dim ? down.weights[d] : down.bias) -= h;
      const double numeric = (example_loss(up, example, config) - example_loss(down, example, config)) / (2 * h);
      EXPECT_NEAR(grad[d], numeric, 1e-5);
    }
    ++checked;
  }
  EXPECT_GT(checked, 400u);
}

TEST(Gradient, HandComputedSingleStep) {
  CompetitionExample e;
  e.polarity = Polarity::MostConsistent;
  e.answer = 0;
  e.features = {Vector{0.6}, Vector{0.4}, Vector{0.4}, Vector{0.4}};
  CompetitionConfig config;
  LinearVerifier v = LinearVerifier::zeros({"cosine"});
  v.weights = {1.0};
  // g_pos = 0.6, g_neg = 0.4: each hinge -0.6 + 0.4 + 0.5 = 0.3 > 0 contributes 0.4 - 0.6.
  const auto g = example_gradient(v, e, config);
  EXPECT_NEAR(g[0], 3 * -0.2, 1e-12);
  EXPECT_EQ(g[1], 0.0);
  EXPECT_NEAR(example_loss(v, e, config), 0.9, 1e-12);

  config.epochs = 1;
  config.learning_rate = 0.1;
  const auto r = train_linear_verifier(std::vector<CompetitionExample>{e}, config, {"cosine"});
  // From w = 0 every hinge is at 0.5 > 0, so w1 = 0 - 0.1 * 3 * (0.4 - 0.6).
  EXPECT_NEAR(r.verifier.weights[0], 0.06, 1e-12);
  ASSERT_EQ(r.loss_trace.size(), 2u);
  EXPECT_NEAR(r.loss_trace[0], 1.5, 1e-12);
  EXPECT_NEAR(r.loss_trace[1], 3 * (0.5 - 0.06 * 0.2), 1e-12);
}

TEST(Training, ZeroEpochsReturnsInitialization) {
  testing::Gen gen(64);
  std::vector<CompetitionExample> examples{random_example(gen, 4)};
  CompetitionConfig config;
  config.epochs = 0;
  const auto r = train_linear_verifier(examples, config);
  EXPECT_EQ(r.verifier.weights, std::vector<double>(4, 0.0));
  EXPECT_EQ(r.verifier.bias, 0.0);
  EXPECT_EQ(r.loss_trace.size(), 1u);
}

TEST(Training, SeparableFixtureReachesZeroLoss) {
  testing::Gen gen(65);
  std::vector<CompetitionExample> examples;
  for (int q = 0; q < 40; ++q) {
    CompetitionExample e;
    e.polarity = gen.coin() ? Polarity::MostConsistent : Polarity::MostContradictory;
    e.answer = gen.below(4);
    for (std::size_t o = 0; o < 4; ++o) {
      const bool high = e.polarity == Polarity::MostConsistent ? o == e.answer : o != e.answer;
      e.features[o] = Vector{high ? gen.uniform(0.7, 1.0) : gen.uniform(0.0, 0.5)};
    }
    examples.push_back(e);
  }
  CompetitionConfig config;
  config.epochs = 300;
  const auto r = train_linear_verifier(examples, config, {"cosine"});
  EXPECT_EQ(r.loss_trace.back(), 0.0);
  EXPECT_LE(r.loss_trace.back(), r.loss_trace.front());
  for (const auto& e : examples) {
    const double ga = r.verifier.score(e.features[e.answer]);
    for (std::size_t o = 0; o < 4; ++o) {
      if (o == e.answer) continue;
      const double go = r.verifier.score(e.features[o]);
      EXPECT_GE(e.polarity == Polarity::MostConsistent ? ga - go : go - ga, 0.5);
    }
  }
}

TEST(Training, DeterministicGivenSeed) {
  testing::Gen gen(66);
  std::vector<CompetitionExample> examples;
  for (int i = 0; i < 30; ++i) examples.push_back(random_example(gen, 4));
  CompetitionConfig config;
  config.epochs = 20;
  config.seed = 9;
  const auto a = train_linear_verifier(examples, config);
  const auto b = train_linear_verifier(examples, config);
  EXPECT_EQ(a.verifier.weights, b.verifier.weights);
  EXPECT_EQ(a.loss_trace, b.loss_trace);
  EXPECT_EQ(error_code([&] { train_linear_verifier({}, config); }), "training");
}

TEST(Features, HandExample) {
  EmbeddingTable t(2);
  t.add("a", std::vector<double>{1, 0});
  t.add("b", std::vector<double>{0, 1});
  t.add("c", std::vector<double>{1, 1});
  Passage p{"p", {{"a", "b"}, {"c"}}, std::nullopt};
  const TokenList option{"a", "c"};
  const TokenList evidence{"a", "b"};
  const auto f = verifier_features(option, evidence, p, t);
  ASSERT_EQ(f.size(), 4u);
  // mean(option) = (1, 0.5), mean(evidence) = (0.5, 0.5).
  EXPECT_NEAR(f[0], 0.75 / (std::sqrt(1.25) * std::sqrt(0.5)), 1e-12);
  EXPECT_NEAR(f[1], 0.5, 1e-12);
  // IDF(a) = ln(1.5 / 1.5 + 1), tf part = 2.2 / (1 + 1.2 * (0.25 + 0.75 * 2 / 1.5)).
  const double s = std::log(2.0) * 2.2 / 2.5;
  EXPECT_NEAR(f[2], s / (1 + s), 1e-12);
  EXPECT_NEAR(f[3], 0.5, 1e-12);

  TokenList with_sep{"a", std::string(kSeparatorToken), "b"};
  const auto g = verifier_features(option, with_sep, p, t);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(g[i], f[i], 1e-12);
}

TEST(Verifier, JsonRoundTripAndValidation) {
  LinearVerifier v{{"cosine", "overlap"}, {0.25, -1.5}, 0.125};
  const auto back = verifier_from_json(verifier_to_json(v));
  EXPECT_EQ(back.feature_names, v.feature_names);
  EXPECT_EQ(back.weights, v.weights);
  EXPECT_EQ(back.bias, v.bias);
  EXPECT_EQ(error_code([] { verifier_from_json(R"({"weights":[1],"bias":0,"features":["a","b"]})"); }),
            "verifier");
  EXPECT_EQ(error_code([] { verifier_from_json("nope"); }), "verifier");
}

TEST(Sigmoid, StableAtExtremes) {
  EXPECT_DOUBLE_EQ(sigmoid(0), 0.5);
  EXPECT_NEAR(sigmoid(800), 1.0, 1e-15);
  EXPECT_NEAR(sigmoid(-800), 0.0, 1e-15);
  EXPECT_NEAR(sigmoid(1.3) + sigmoid(-1.3), 1.0, 1e-15);
}

}  // namespace
}  // namespace eic
