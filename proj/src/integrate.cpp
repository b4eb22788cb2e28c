#include "eic/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "eic/error.hpp"

namespace eic {

IntegratedEvidence assemble(const EvidenceChain& chain, const Passage& passage) {
  if (chain.sentence_indices.empty()) throw Error("evidence", "cannot assemble an empty chain");
  IntegratedEvidence out;
  out.chain = chain;
  out.passage_order_indices = chain.sentence_indices;
  std::sort(out.passage_order_indices.begin(), out.passage_order_indices.end());
  for (std::size_t i = 0; i < out.passage_order_indices.size(); ++i) {
    const std::size_t idx = out.passage_order_indices[i];
    if (idx >= passage.size()) {
      throw Error("evidence", "sentence index " + std::to_string(idx) + " out of range for passage '" +
                                  passage.id + "'");
    }
    if (i > 0 && idx == out.passage_order_indices[i - 1]) {
      throw Error("evidence", "chain repeats sentence " + std::to_string(idx));
    }
    if (i > 0) out.text_tokens.emplace_back(kSeparatorToken);
    const auto& sentence = passage.sentences[idx];
    out.text_tokens.insert(out.text_tokens.end(), sentence.begin(), sentence.end());
  }
  return out;
}

namespace {

bool retrieval_before(const IntegratedEvidence& a, const IntegratedEvidence& b) {
  return chain_before(a.chain, b.chain);
}

bool rerank_before(const IntegratedEvidence& a, const IntegratedEvidence& b) {
  if (a.rerank_score != b.rerank_score) return a.rerank_score > b.rerank_score;
  if (a.passage_order_indices.size() != b.passage_order_indices.size()) {
    return a.passage_order_indices.size() < b.passage_order_indices.size();
  }
  return a.passage_order_indices < b.passage_order_indices;
}

}  // namespace

IntegratedEvidence rerank_and_select(std::span<const IntegratedEvidence> candidates,
                                     std::span<const Token> option_tokens, Scorer& scorer) {
  if (candidates.empty()) throw Error("evidence", "no candidate evidence chains to rerank");

  std::map<std::vector<std::size_t>, IntegratedEvidence> unique;
  for (const auto& candidate : candidates) {
    auto [it, inserted] = unique.try_emplace(candidate.passage_order_indices, candidate);
    if (!inserted && retrieval_before(candidate, it->second)) it->second = candidate;
  }

  std::vector<IntegratedEvidence> pool;
  std::vector<TokenList> texts;
  pool.reserve(unique.size());
  for (auto& [key, candidate] : unique) {
    texts.push_back(candidate.text_tokens);
    pool.push_back(std::move(candidate));
  }
  const auto scores = scorer.score_texts(option_tokens, texts);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (!std::isfinite(scores[i])) throw Error("scorer", "non-finite rerank score");
    pool[i].rerank_score = scores[i];
  }
  return *std::min_element(pool.begin(), pool.end(), rerank_before);
}

IntegratedEvidence integrate(std::span<const EvidenceChain> chains, const Passage& passage,
                             std::span<const Token> option_tokens, Scorer& scorer) {
  std::vector<IntegratedEvidence> candidates;
  candidates.reserve(chains.size());
  for (const auto& chain : chains) candidates.push_back(assemble(chain, passage));
  return rerank_and_select(candidates, option_tokens, scorer);
}

IntegratedEvidence select_without_integration(std::span<const EvidenceChain> chains,
                                              const Passage& passage) {
  if (chains.empty()) throw Error("evidence", "no candidate evidence chains");
  std::size_t longest = 0;
  for (const auto& chain : chains) longest = std::max(longest, chain.sentence_indices.size());
  const EvidenceChain* best = nullptr;
  for (const auto& chain : chains) {
    if (chain.sentence_indices.size() != longest) continue;
    if (best == nullptr || chain_before(chain, *best)) best = &chain;
  }
  IntegratedEvidence out = assemble(*best, passage);
  out.rerank_score = best->score;
  return out;
}

}  // namespace eic
