#include "eic/compete.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "eic/error.hpp"
#include "json.hpp"

namespace eic {

using nlohmann::json;

double hinge_loss_consistent(double g_pos, std::span<const double> g_negs, double margin) {
  if (g_negs.empty()) throw Error("training", "consistent hinge loss needs at least one negative");
  double loss = 0.0;
  for (double g_neg : g_negs) loss += std::max(0.0, -g_pos + g_neg + margin);
  return loss;
}

double hinge_loss_contradictory(double g_neg, std::span<const double> g_poss, double margin) {
  if (g_poss.empty()) throw Error("training", "contradictory hinge loss needs at least one positive");
  double loss = 0.0;
  for (double g_pos : g_poss) loss += std::max(0.0, -g_pos + g_neg + margin);
  return loss;
}

Vector verifier_features(std::span<const Token> option_tokens, std::span<const Token> evidence_tokens,
                         const Passage& passage, const EmbeddingTable& table, Bm25Params bm25) {
  const TokenList option = without_separators(option_tokens);
  const TokenList evidence = without_separators(evidence_tokens);
  if (option.empty()) throw Error("evidence", "option has no tokens");
  if (evidence.empty()) throw Error("evidence", "evidence has no tokens");

  const double cos = cosine(sentence_vector(option, table), sentence_vector(evidence, table));

  const std::set<Token> evidence_set(evidence.begin(), evidence.end());
  std::size_t covered = 0;
  for (const auto& token : option) covered += evidence_set.count(token);
  const double overlap = static_cast<double>(covered) / static_cast<double>(option.size());

  const Bm25Index index(passage.sentences, bm25);
  const double s = index.score_text(option, evidence);
  const double bm25_norm = s / (1.0 + s);

  const double length_ratio =
      static_cast<double>(option.size()) / static_cast<double>(option.size() + evidence.size());
  return {cos, overlap, bm25_norm, length_ratio};
}

LinearVerifier LinearVerifier::zeros(std::vector<std::string> feature_names) {
  LinearVerifier v;
  v.weights.assign(feature_names.size(), 0.0);
  v.feature_names = std::move(feature_names);
  return v;
}

double LinearVerifier::score(std::span<const double> features) const {
  if (features.size() != weights.size()) {
    throw Error("dimension", "verifier expects " + std::to_string(weights.size()) + " features, got " +
                                 std::to_string(features.size()));
  }
  return dot(weights, features) + bias;
}

void LinearVerifier::validate() const {
  if (weights.size() != feature_names.size()) {
    throw Error("verifier", "weight vector length must equal the feature count");
  }
  for (double w : weights) {
    if (!std::isfinite(w)) throw Error("verifier", "non-finite verifier weight");
  }
  if (!std::isfinite(bias)) throw Error("verifier", "non-finite verifier bias");
}

std::string verifier_to_json(const LinearVerifier& verifier) {
  json j = {{"weights", verifier.weights}, {"bias", verifier.bias}, {"features", verifier.feature_names}};
  return j.dump();
}

LinearVerifier verifier_from_json(std::string_view text) {
  LinearVerifier v;
  try {
    json j = json::parse(text);
    v.weights = j.at("weights").get<std::vector<double>>();
    v.bias = j.at("bias").get<double>();
    v.feature_names = j.at("features").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error("verifier", std::string("malformed verifier JSON: ") + e.what());
  }
  v.validate();
  return v;
}

void save_verifier(const LinearVerifier& verifier, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot write verifier file '" + path.string() + "'");
  out << verifier_to_json(verifier) << '\n';
}

LinearVerifier load_verifier(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open verifier file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return verifier_from_json(buffer.str());
}

std::string_view to_string(Objective objective) {
  return objective == Objective::Pairwise ? "pairwise" : "pointwise";
}

Objective parse_objective(std::string_view text) {
  if (text == "pairwise") return Objective::Pairwise;
  if (text == "pointwise") return Objective::Pointwise;
  throw Error("config", "unknown objective '" + std::string(text) + "' (pairwise|pointwise)");
}

void CompetitionConfig::validate() const {
  if (!(margin > 0.0)) throw Error("config", "margin must be > 0");
  if (!(learning_rate > 0.0)) throw Error("config", "learning rate must be > 0");
}

namespace {

std::array<double, kOptionsPerQuestion> option_scores(const LinearVerifier& verifier,
                                                      const CompetitionExample& example) {
  std::array<double, kOptionsPerQuestion> g{};
  for (std::size_t i = 0; i < kOptionsPerQuestion; ++i) g[i] = verifier.score(example.features[i]);
  return g;
}

bool pointwise_label(const CompetitionExample& example, std::size_t option) {
  const bool is_answer = option == example.answer;
  return example.polarity == Polarity::MostConsistent ? is_answer : !is_answer;
}

// log(1 + exp(-z)) without overflow.
double softplus_neg(double z) {
  return z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
}

}  // namespace

double example_loss(const LinearVerifier& verifier, const CompetitionExample& example,
                    const CompetitionConfig& config) {
  const auto g = option_scores(verifier, example);
  if (config.objective == Objective::Pointwise) {
    double loss = 0.0;
    for (std::size_t i = 0; i < kOptionsPerQuestion; ++i) {
      loss += softplus_neg(pointwise_label(example, i) ? g[i] : -g[i]);
    }
    return loss;
  }
  std::vector<double> others;
  for (std::size_t i = 0; i < kOptionsPerQuestion; ++i) {
    if (i != example.answer) others.push_back(g[i]);
  }
  if (example.polarity == Polarity::MostConsistent) {
    return hinge_loss_consistent(g[example.answer], others, config.margin);
  }
  return hinge_loss_contradictory(g[example.answer], others, config.margin);
}

Vector example_gradient(const LinearVerifier& verifier, const CompetitionExample& example,
                        const CompetitionConfig& config) {
  const std::size_t dim = verifier.weights.size();
  Vector grad(dim + 1, 0.0);
  const auto g = option_scores(verifier, example);

  if (config.objective == Objective::Pointwise) {
    for (std::size_t i = 0; i < kOptionsPerQuestion; ++i) {
      const double residual = sigmoid(g[i]) - (pointwise_label(example, i) ? 1.0 : 0.0);
      for (std::size_t d = 0; d < dim; ++d) grad[d] += residual * example.features[i][d];
      grad[dim] += residual;
    }
    return grad;
  }

  // Each active hinge max(0, -g(higher) + g(lower) + margin) adds
  // x_lower - x_higher. The bias cancels.
  const std::size_t a = example.answer;
  for (std::size_t i = 0; i < kOptionsPerQuestion; ++i) {
    if (i == a) continue;
    const bool consistent = example.polarity == Polarity::MostConsistent;
    const std::size_t higher = consistent ? a : i;
    const std::size_t lower = consistent ? i : a;
    if (-g[higher] + g[lower] + config.margin <= 0.0) continue;
    for (std::size_t d = 0; d < dim; ++d) {
      grad[d] += example.features[lower][d] - example.features[higher][d];
    }
  }
  return grad;
}

double total_loss(const LinearVerifier& verifier, std::span<const CompetitionExample> examples,
                  const CompetitionConfig& config) {
  double loss = 0.0;
  for (const auto& example : examples) loss += example_loss(verifier, example, config);
  return loss;
}

TrainingResult train_linear_verifier(std::span<const CompetitionExample> examples,
                                     const CompetitionConfig& config,
                                     std::vector<std::string> feature_names) {
  config.validate();
  if (examples.empty()) throw Error("training", "training set is empty");
  const std::size_t dim = feature_names.size();
  for (const auto& example : examples) {
    if (example.answer >= kOptionsPerQuestion) throw Error("training", "answer index out of range");
    for (const auto& f : example.features) {
      if (f.size() != dim) {
        throw Error("training", "feature vector length " + std::to_string(f.size()) +
                                    " does not match " + std::to_string(dim) + " feature names");
      }
    }
  }

  TrainingResult result;
  result.verifier = LinearVerifier::zeros(std::move(feature_names));
  result.loss_trace.push_back(total_loss(result.verifier, examples, config));

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(examples.size());
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    // Fisher-Yates on raw mt19937_64 output keeps the order identical across
    // standard library implementations.
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng() % i]);
    }
    for (std::size_t idx : order) {
      const Vector grad = example_gradient(result.verifier, examples[idx], config);
      for (std::size_t d = 0; d < dim; ++d) result.verifier.weights[d] -= config.learning_rate * grad[d];
      result.verifier.bias -= config.learning_rate * grad[dim];
    }
    result.loss_trace.push_back(total_loss(result.verifier, examples, config));
  }
  return result;
}

std::size_t select_answer(Polarity polarity, std::span<const double> scores) {
  if (scores.size() != kOptionsPerQuestion) {
    throw Error("prediction", "expected 4 option scores, got " + std::to_string(scores.size()));
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    const bool better = polarity == Polarity::MostConsistent ? scores[i] > scores[best]
                                                             : scores[i] < scores[best];
    if (better) best = i;
  }
  return best;
}

std::size_t select_answer(const QuestionInstance& question, std::span<const double> scores) {
  return select_answer(question.polarity, scores);
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace eic
