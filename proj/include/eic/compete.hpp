#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eic/corpus.hpp"
#include "eic/embed.hpp"
#include "eic/scorers.hpp"

namespace eic {

// Consistent questions: sum_i max(0, -g_pos + g_neg_i + margin).
double hinge_loss_consistent(double g_pos, std::span<const double> g_negs, double margin);

// Contradictory questions: sum_i max(0, -g_pos_i + g_neg + margin).
double hinge_loss_contradictory(double g_neg, std::span<const double> g_poss, double margin);

inline const std::vector<std::string>& default_feature_names() {
  static const std::vector<std::string> names = {"cosine", "overlap", "bm25", "length_ratio"};
  return names;
}

// Features of an option against its integrated evidence:
//   cosine        mean-embedding cosine of option and evidence text
//   overlap       fraction of option tokens that occur in the evidence
//   bm25          s / (1 + s), s = BM25 of the option against the evidence
//                 text using the passage's IDF and average sentence length
//   length_ratio  |option| / (|option| + |evidence|)
// Separator tokens are ignored.
Vector verifier_features(std::span<const Token> option_tokens, std::span<const Token> evidence_tokens,
                         const Passage& passage, const EmbeddingTable& table,
                         Bm25Params bm25 = {});

// g(option, evidence) = weights . features + bias.
struct LinearVerifier {
  std::vector<std::string> feature_names;
  std::vector<double> weights;
  double bias = 0.0;

  static LinearVerifier zeros(std::vector<std::string> feature_names);
  double score(std::span<const double> features) const;
  void validate() const;
};

std::string verifier_to_json(const LinearVerifier& verifier);
LinearVerifier verifier_from_json(std::string_view text);
void save_verifier(const LinearVerifier& verifier, const std::filesystem::path& path);
LinearVerifier load_verifier(const std::filesystem::path& path);

// Pairwise trains on the hinge losses above. Pointwise is the
// independent-option ablation: logistic loss per option with label 1 for
// options consistent with the passage.
enum class Objective { Pairwise, Pointwise };

std::string_view to_string(Objective objective);
Objective parse_objective(std::string_view text);

struct CompetitionConfig {
  double margin = 0.5;
  double learning_rate = 0.05;
  std::size_t epochs = 200;
  std::uint64_t seed = 0;
  Objective objective = Objective::Pairwise;

  void validate() const;
};

// One training question: the feature vector of each option against its own
// evidence.
struct CompetitionExample {
  Polarity polarity = Polarity::MostConsistent;
  std::size_t answer = 0;
  std::array<Vector, kOptionsPerQuestion> features;
};

double example_loss(const LinearVerifier& verifier, const CompetitionExample& example,
                    const CompetitionConfig& config);

// Subgradient with respect to (weights..., bias). A hinge sitting exactly at
// its kink contributes 0.
Vector example_gradient(const LinearVerifier& verifier, const CompetitionExample& example,
                        const CompetitionConfig& config);

double total_loss(const LinearVerifier& verifier, std::span<const CompetitionExample> examples,
                  const CompetitionConfig& config);

struct TrainingResult {
  LinearVerifier verifier;
  // Entry 0 is the loss at initialization, entry e the loss after epoch e.
  std::vector<double> loss_trace;
};

// Stochastic subgradient descent from zero weights, one example at a time in
// a seeded shuffled order per epoch.
TrainingResult train_linear_verifier(std::span<const CompetitionExample> examples,
                                     const CompetitionConfig& config,
                                     std::vector<std::string> feature_names = default_feature_names());

// Argmax for MostConsistent, argmin for MostContradictory; ties go to the
// lowest option index.
std::size_t select_answer(Polarity polarity, std::span<const double> scores);
std::size_t select_answer(const QuestionInstance& question, std::span<const double> scores);

double sigmoid(double x);

}  // namespace eic
