#pragma once

#include <span>
#include <vector>

#include "eic/corpus.hpp"
#include "eic/extract.hpp"
#include "eic/scorers.hpp"

namespace eic {

// A chain rewritten in passage order: its sentences concatenated with
// kSeparatorToken between them.
struct IntegratedEvidence {
  EvidenceChain chain;
  std::vector<std::size_t> passage_order_indices;
  TokenList text_tokens;
  double rerank_score = 0.0;
};

IntegratedEvidence assemble(const EvidenceChain& chain, const Passage& passage);

// Collapses candidates with identical passage_order_indices (keeping the one
// with the best retrieval score), scores each remaining candidate with
// scorer(option, candidate) and returns the best. Ties go to the shorter
// chain, then to the lexicographically smaller index list.
IntegratedEvidence rerank_and_select(std::span<const IntegratedEvidence> candidates,
                                     std::span<const Token> option_tokens, Scorer& scorer);

// assemble + rerank_and_select over every chain the extractor produced.
IntegratedEvidence integrate(std::span<const EvidenceChain> chains, const Passage& passage,
                             std::span<const Token> option_tokens, Scorer& scorer);

// Ablation: the top-scoring chain among the longest chains, no reranking.
IntegratedEvidence select_without_integration(std::span<const EvidenceChain> chains,
                                              const Passage& passage);

}  // namespace eic
