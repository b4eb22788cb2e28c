#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "eic/corpus.hpp"

namespace eic {

using Vector = std::vector<double>;

// Static token embeddings. Unknown tokens resolve to the all-zeros vector.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dim);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return tokens_.size(); }
  bool contains(std::string_view token) const;

  // Returns the stored vector, or the zero vector for out-of-vocabulary tokens.
  std::span<const double> lookup(std::string_view token) const;

  void add(const Token& token, std::span<const double> vector);

  // Tokens in insertion order.
  const std::vector<Token>& tokens() const { return tokens_; }

 private:
  std::size_t dim_;
  std::vector<Token> tokens_;
  std::vector<double> data_;
  std::vector<double> zero_;
  std::unordered_map<std::string, std::size_t> index_;
};

// word2vec text format: optional "count dim" header, then "token v1 ... vdim".
EmbeddingTable load_embeddings(const std::filesystem::path& path);
EmbeddingTable parse_embeddings(std::istream& in);
void write_embeddings(const EmbeddingTable& table, std::ostream& out);
void write_embeddings(const EmbeddingTable& table, const std::filesystem::path& path);

// Hard: beta_i = alpha_i / sum(alpha). Soft: beta = softmax(lambda * alpha).
enum class WeightMode { Hard, Soft };

// Token-weighted query. The token list is fixed across masking iterations
// (query-append is the one update that grows it). `coverage_complete` marks a
// hard-masked query whose every alpha is zero; beta is meaningless then.
struct WeightedQuery {
  TokenList tokens;
  std::vector<double> alpha;
  std::vector<double> beta;
  WeightMode mode = WeightMode::Hard;
  double lambda = 1.0;
  std::size_t step = 0;
  bool coverage_complete = false;
};

WeightedQuery init_query(const TokenList& tokens, WeightMode mode, double lambda = 1.0);

// Recomputes beta from alpha under the query's mode. Hard mode with all-zero
// alpha marks the query coverage-complete.
void normalize_weights(WeightedQuery& query);

// Sum_i beta_i * embed(token_i). Throws Error("coverage_complete") for a
// coverage-complete query.
Vector compose_query(const WeightedQuery& query, const EmbeddingTable& table);

// Unweighted mean of token embeddings; OOV tokens count in the denominator.
Vector sentence_vector(std::span<const Token> sentence, const EmbeddingTable& table);

double dot(std::span<const double> u, std::span<const double> v);

}  // namespace eic
