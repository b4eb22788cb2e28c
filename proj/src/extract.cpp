#include "eic/extract.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "eic/error.hpp"

namespace eic {

std::string_view to_string(ExtractMode mode) {
  switch (mode) {
    case ExtractMode::HardMask: return "hard_mask";
    case ExtractMode::SoftMask: return "soft_mask";
    case ExtractMode::OneOffTopK: return "top_k";
    case ExtractMode::QueryAppend: return "query_append";
  }
  return "unknown";
}

ExtractMode parse_extract_mode(std::string_view text) {
  if (text == "hard_mask" || text == "hard") return ExtractMode::HardMask;
  if (text == "soft_mask" || text == "soft") return ExtractMode::SoftMask;
  if (text == "top_k" || text == "topk") return ExtractMode::OneOffTopK;
  if (text == "query_append" || text == "append") return ExtractMode::QueryAppend;
  throw Error("config", "unknown extraction mode '" + std::string(text) +
                            "' (hard_mask|soft_mask|top_k|query_append)");
}

void ExtractorConfig::validate() const {
  if (max_steps < 1) throw Error("config", "max_steps must be >= 1");
  if (beam_width < 1) throw Error("config", "beam_width must be >= 1");
  if (!(lambda > 0.0)) throw Error("config", "lambda must be > 0");
  if (mode == ExtractMode::OneOffTopK && top_k < 1) throw Error("config", "top_k must be >= 1");
}

WeightedQuery hard_mask_update(const WeightedQuery& query, const std::set<Token>& evidence_tokens) {
  if (query.mode != WeightMode::Hard) throw Error("query", "hard masking needs a hard-mode query");
  WeightedQuery next = query;
  for (std::size_t i = 0; i < next.tokens.size(); ++i) {
    if (evidence_tokens.count(next.tokens[i])) next.alpha[i] = 0.0;
  }
  normalize_weights(next);
  ++next.step;
  return next;
}

WeightedQuery soft_mask_update(const WeightedQuery& query,
                               std::span<const std::span<const double>> evidence_vectors,
                               double lambda, const EmbeddingTable& table) {
  if (query.mode != WeightMode::Soft) throw Error("query", "soft masking needs a soft-mode query");
  if (evidence_vectors.empty()) throw Error("query", "soft masking needs non-empty evidence");
  if (!(lambda > 0.0)) throw Error("query", "lambda must be positive");
  WeightedQuery next = query;
  next.lambda = lambda;
  for (std::size_t i = 0; i < next.tokens.size(); ++i) {
    auto qi = table.lookup(next.tokens[i]);
    double best = -std::numeric_limits<double>::infinity();
    for (auto c : evidence_vectors) best = std::max(best, dot(qi, c));
    next.alpha[i] = -std::max(best, -query.alpha[i]);
  }
  normalize_weights(next);
  ++next.step;
  return next;
}

WeightedQuery soft_mask_update(const WeightedQuery& query, std::span<const Token> evidence,
                               double lambda, const EmbeddingTable& table) {
  std::vector<std::span<const double>> vectors;
  vectors.reserve(evidence.size());
  for (const auto& token : evidence) vectors.push_back(table.lookup(token));
  return soft_mask_update(query, vectors, lambda, table);
}

WeightedQuery append_update(const WeightedQuery& query, std::span<const Token> evidence) {
  WeightedQuery next;
  next.tokens = query.tokens;
  next.tokens.insert(next.tokens.end(), evidence.begin(), evidence.end());
  next.mode = WeightMode::Hard;
  next.lambda = query.lambda;
  next.alpha.assign(next.tokens.size(), 1.0);
  normalize_weights(next);
  next.step = query.step + 1;
  return next;
}

namespace {

std::vector<std::size_t> candidates_excluding(const Passage& passage,
                                              const std::set<std::size_t>& excluded) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < passage.size(); ++i) {
    if (!excluded.count(i)) out.push_back(i);
  }
  return out;
}

std::vector<RankedSentence> sort_ranked(const std::vector<std::size_t>& indices,
                                        const std::vector<double>& scores) {
  std::vector<RankedSentence> ranked;
  ranked.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (!std::isfinite(scores[i])) {
      throw Error("scorer", "non-finite score for sentence " + std::to_string(indices[i]));
    }
    ranked.push_back({indices[i], scores[i]});
  }
  std::sort(ranked.begin(), ranked.end(), [](const RankedSentence& a, const RankedSentence& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.index < b.index;
  });
  return ranked;
}

}  // namespace

std::vector<RankedSentence> rank_step(const WeightedQuery& query, const Passage& passage,
                                      const std::set<std::size_t>& excluded, Scorer& scorer) {
  auto indices = candidates_excluding(passage, excluded);
  if (indices.empty()) return {};
  return sort_ranked(indices, scorer.score_sentences(query, passage, indices));
}

std::vector<RankedSentence> rank_step(std::span<const double> query_vector, const Passage& passage,
                                      const std::set<std::size_t>& excluded,
                                      const EmbeddingTable& table) {
  auto indices = candidates_excluding(passage, excluded);
  std::vector<double> scores;
  scores.reserve(indices.size());
  for (std::size_t idx : indices) {
    scores.push_back(cosine(query_vector, sentence_vector(passage.sentences[idx], table)));
  }
  return sort_ranked(indices, scores);
}

bool chain_before(const EvidenceChain& a, const EvidenceChain& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.sentence_indices < b.sentence_indices;
}

namespace {

enum class Update { Hard, Soft, Append };

WeightedQuery apply_update(Update update, const WeightedQuery& query, const Sentence& evidence,
                           double lambda, const EmbeddingTable& table) {
  switch (update) {
    case Update::Hard:
      return hard_mask_update(query, std::set<Token>(evidence.begin(), evidence.end()));
    case Update::Soft:
      return soft_mask_update(query, evidence, lambda, table);
    case Update::Append:
      return append_update(query, evidence);
  }
  return query;
}

std::vector<EvidenceChain> run_beam(const TokenList& option_tokens, const Passage& passage,
                                    const ExtractorConfig& config, const EmbeddingTable& table,
                                    Scorer& scorer, Update update) {
  config.validate();
  if (option_tokens.empty()) throw Error("query", "option has no tokens");
  if (passage.sentences.empty()) throw Error("schema", "passage '" + passage.id + "' is empty");

  EvidenceChain root;
  root.query_state = init_query(option_tokens,
                                update == Update::Soft ? WeightMode::Soft : WeightMode::Hard,
                                config.lambda);

  std::vector<EvidenceChain> beam{root};
  std::vector<EvidenceChain> survivors;
  for (std::size_t step = 1; step <= config.max_steps; ++step) {
    std::vector<EvidenceChain> expansions;
    for (const auto& chain : beam) {
      if (chain.query_state.coverage_complete) continue;
      std::set<std::size_t> used(chain.sentence_indices.begin(), chain.sentence_indices.end());
      for (const auto& ranked : rank_step(chain.query_state, passage, used, scorer)) {
        EvidenceChain next;
        next.sentence_indices = chain.sentence_indices;
        next.sentence_indices.push_back(ranked.index);
        next.score = chain.score + ranked.score;
        next.query_state = chain.query_state;
        expansions.push_back(std::move(next));
      }
    }
    if (expansions.empty()) break;
    std::sort(expansions.begin(), expansions.end(), chain_before);
    if (expansions.size() > config.beam_width) expansions.resize(config.beam_width);

    // The query is only needed for a further step.
    if (step < config.max_steps) {
      for (auto& chain : expansions) {
        const Sentence& evidence = passage.sentences[chain.sentence_indices.back()];
        chain.query_state = apply_update(update, chain.query_state, evidence, config.lambda, table);
      }
    }
    survivors.insert(survivors.end(), expansions.begin(), expansions.end());
    beam = std::move(expansions);
  }
  return survivors;
}

}  // namespace

std::vector<EvidenceChain> beam_extract(const TokenList& option_tokens, const Passage& passage,
                                        const ExtractorConfig& config, const EmbeddingTable& table,
                                        Scorer& scorer) {
  switch (config.mode) {
    case ExtractMode::HardMask:
      return run_beam(option_tokens, passage, config, table, scorer, Update::Hard);
    case ExtractMode::SoftMask:
      return run_beam(option_tokens, passage, config, table, scorer, Update::Soft);
    case ExtractMode::QueryAppend:
      return run_beam(option_tokens, passage, config, table, scorer, Update::Append);
    case ExtractMode::OneOffTopK:
      break;
  }
  throw Error("config", "beam_extract does not run in top_k mode");
}

std::vector<EvidenceChain> query_append_extract(const TokenList& option_tokens, const Passage& passage,
                                                const ExtractorConfig& config,
                                                const EmbeddingTable& table, Scorer& scorer) {
  return run_beam(option_tokens, passage, config, table, scorer, Update::Append);
}

EvidenceChain one_off_topk(const TokenList& option_tokens, const Passage& passage, std::size_t k,
                           Scorer& scorer) {
  if (k < 1) throw Error("config", "top_k must be >= 1");
  if (option_tokens.empty()) throw Error("query", "option has no tokens");
  EvidenceChain chain;
  chain.query_state = init_query(option_tokens, WeightMode::Hard);
  auto ranked = rank_step(chain.query_state, passage, {}, scorer);
  if (ranked.size() > k) ranked.resize(k);
  for (const auto& r : ranked) {
    chain.sentence_indices.push_back(r.index);
    chain.score += r.score;
  }
  return chain;
}

std::vector<EvidenceChain> extract_chains(const TokenList& option_tokens, const Passage& passage,
                                          const ExtractorConfig& config, const EmbeddingTable& table,
                                          Scorer& scorer) {
  if (config.mode == ExtractMode::OneOffTopK) {
    config.validate();
    return {one_off_topk(option_tokens, passage, config.top_k, scorer)};
  }
  return beam_extract(option_tokens, passage, config, table, scorer);
}

}  // namespace eic
