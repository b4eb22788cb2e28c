#pragma once

#include <cstddef>
#include <set>
#include <span>
#include <string_view>
#include <vector>

#include "eic/corpus.hpp"
#include "eic/embed.hpp"
#include "eic/scorers.hpp"

namespace eic {

enum class ExtractMode { HardMask, SoftMask, OneOffTopK, QueryAppend };

std::string_view to_string(ExtractMode mode);
ExtractMode parse_extract_mode(std::string_view text);

struct ExtractorConfig {
  ExtractMode mode = ExtractMode::SoftMask;
  std::size_t top_k = 1;       // OneOffTopK only
  std::size_t max_steps = 2;
  std::size_t beam_width = 2;
  double lambda = 1.0;          // softmax temperature for soft masking

  void validate() const;
};

// Sentences in selection order, the summed per-step retrieval score, and the
// query after the last update.
struct EvidenceChain {
  std::vector<std::size_t> sentence_indices;
  double score = 0.0;
  WeightedQuery query_state;
};

struct RankedSentence {
  std::size_t index;
  double score;
};

// Zeroes alpha for query tokens that occur in the evidence and renormalizes.
WeightedQuery hard_mask_update(const WeightedQuery& query, const std::set<Token>& evidence_tokens);

// alpha'_i = -max(max_j q_i . c_j, -alpha_i); beta' = softmax(lambda * alpha').
WeightedQuery soft_mask_update(const WeightedQuery& query,
                               std::span<const std::span<const double>> evidence_vectors,
                               double lambda, const EmbeddingTable& table);
WeightedQuery soft_mask_update(const WeightedQuery& query, std::span<const Token> evidence,
                               double lambda, const EmbeddingTable& table);

// Concatenates the evidence onto the query and resets to uniform weights.
WeightedQuery append_update(const WeightedQuery& query, std::span<const Token> evidence);

// Scores every sentence not in `excluded`; descending score, ties by index.
std::vector<RankedSentence> rank_step(const WeightedQuery& query, const Passage& passage,
                                      const std::set<std::size_t>& excluded, Scorer& scorer);

// Cosine ranking against a precomposed query vector.
std::vector<RankedSentence> rank_step(std::span<const double> query_vector, const Passage& passage,
                                      const std::set<std::size_t>& excluded,
                                      const EmbeddingTable& table);

// Orders chains by score descending, then lexicographically by indices.
bool chain_before(const EvidenceChain& a, const EvidenceChain& b);

// Beam search over evidence chains with the configured query update (hard
// mask, soft mask, or query append). Returns every chain that survived
// pruning at any step, grouped by length ascending and ordered within a
// length by chain_before.
std::vector<EvidenceChain> beam_extract(const TokenList& option_tokens, const Passage& passage,
                                        const ExtractorConfig& config, const EmbeddingTable& table,
                                        Scorer& scorer);

// Same beam with the query-append update regardless of config.mode.
std::vector<EvidenceChain> query_append_extract(const TokenList& option_tokens, const Passage& passage,
                                                const ExtractorConfig& config,
                                                const EmbeddingTable& table, Scorer& scorer);

// The k best sentences under the initial uniform query, in rank order.
EvidenceChain one_off_topk(const TokenList& option_tokens, const Passage& passage, std::size_t k,
                           Scorer& scorer);

// Dispatches on config.mode. OneOffTopK yields its single chain.
std::vector<EvidenceChain> extract_chains(const TokenList& option_tokens, const Passage& passage,
                                          const ExtractorConfig& config, const EmbeddingTable& table,
                                          Scorer& scorer);

}  // namespace eic
