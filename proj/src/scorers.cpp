#include "eic/scorers.hpp"

#include <cmath>
#include <cstdlib>
#include <iostream>

namespace eic {

std::string_view to_string(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::Cosine: return "cosine";
    case ScorerKind::Bm25: return "bm25";
    case ScorerKind::External: return "external";
  }
  return "unknown";
}

ScorerKind parse_scorer_kind(std::string_view text) {
  if (text == "cosine") return ScorerKind::Cosine;
  if (text == "bm25") return ScorerKind::Bm25;
  if (text == "external") return ScorerKind::External;
  throw Error("config", "unknown scorer '" + std::string(text) + "' (cosine|bm25|external)");
}

double cosine(std::span<const double> u, std::span<const double> v) {
  const double uv = dot(u, v);
  const double uu = dot(u, u);
  const double vv = dot(v, v);
  if (uu == 0.0 || vv == 0.0) return 0.0;
  double c = uv / (std::sqrt(uu) * std::sqrt(vv));
  // Rounding can push |c| a hair past 1.
  if (c > 1.0) c = 1.0;
  if (c < -1.0) c = -1.0;
  return c;
}

Bm25Index::Bm25Index(std::span<const Sentence> documents, Bm25Params params) : params_(params) {
  term_freqs_.reserve(documents.size());
  std::size_t total = 0;
  for (const auto& doc : documents) {
    std::unordered_map<std::string, std::size_t> tf;
    for (const auto& token : doc) ++tf[token];
    for (const auto& [term, count] : tf) ++doc_freqs_[term];
    lengths_.push_back(doc.size());
    total += doc.size();
    term_freqs_.push_back(std::move(tf));
  }
  if (!lengths_.empty()) avgdl_ = static_cast<double>(total) / static_cast<double>(lengths_.size());
}

std::size_t Bm25Index::df(std::string_view term) const {
  auto it = doc_freqs_.find(std::string(term));
  return it == doc_freqs_.end() ? 0 : it->second;
}

std::size_t Bm25Index::tf(std::size_t doc, std::string_view term) const {
  const auto& freqs = term_freqs_.at(doc);
  auto it = freqs.find(std::string(term));
  return it == freqs.end() ? 0 : it->second;
}

double Bm25Index::idf(std::string_view term) const {
  const double n = static_cast<double>(size());
  const double d = static_cast<double>(df(term));
  return std::log((n - d + 0.5) / (d + 0.5) + 1.0);
}

double Bm25Index::term_score(std::string_view term, std::size_t tf, std::size_t doc_length) const {
  if (tf == 0) return 0.0;
  const double f = static_cast<double>(tf);
  const double len_norm = avgdl_ > 0.0 ? static_cast<double>(doc_length) / avgdl_ : 1.0;
  const double denom = f + params_.k1 * (1.0 - params_.b + params_.b * len_norm);
  return idf(term) * f * (params_.k1 + 1.0) / denom;
}

double Bm25Index::score(std::span<const Token> query, std::size_t doc) const {
  double s = 0.0;
  for (const auto& term : query) s += term_score(term, tf(doc, term), lengths_.at(doc));
  return s;
}

double Bm25Index::score_weighted(std::span<const Token> query, std::span<const double> weights,
                                 std::size_t doc) const {
  if (weights.size() != query.size()) {
    throw Error("dimension", "BM25 query weights do not match query length");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < query.size(); ++i) {
    if (weights[i] == 0.0) continue;
    s += weights[i] * term_score(query[i], tf(doc, query[i]), lengths_.at(doc));
  }
  return s;
}

double Bm25Index::score_text(std::span<const Token> query, std::span<const Token> document) const {
  std::unordered_map<std::string_view, std::size_t> freqs;
  for (const auto& token : document) ++freqs[token];
  double s = 0.0;
  for (const auto& term : query) {
    auto it = freqs.find(term);
    if (it != freqs.end()) s += term_score(term, it->second, document.size());
  }
  return s;
}

double bm25_score(const Bm25Index& index, std::span<const Token> query, std::size_t sentence_idx) {
  return index.score(query, sentence_idx);
}

std::vector<double> CosineScorer::score_sentences(const WeightedQuery& query, const Passage& passage,
                                                  std::span<const std::size_t> indices) {
  const Vector q = compose_query(query, table_);
  std::vector<double> scores;
  scores.reserve(indices.size());
  for (std::size_t idx : indices) {
    scores.push_back(cosine(q, sentence_vector(passage.sentences.at(idx), table_)));
  }
  return scores;
}

namespace {

Vector text_vector(std::span<const Token> text, const EmbeddingTable& table) {
  TokenList content = without_separators(text);
  if (content.empty()) return Vector(table.dim(), 0.0);
  return sentence_vector(content, table);
}

}  // namespace

std::vector<double> CosineScorer::score_texts(std::span<const Token> query,
                                              std::span<const TokenList> candidates) {
  const Vector q = text_vector(query, table_);
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (const auto& candidate : candidates) scores.push_back(cosine(q, text_vector(candidate, table_)));
  return scores;
}

std::vector<double> Bm25Scorer::score_sentences(const WeightedQuery& query, const Passage& passage,
                                                std::span<const std::size_t> indices) {
  if (query.coverage_complete) {
    throw Error("coverage_complete", "every query token is already covered; extraction should stop");
  }
  Bm25Index index(passage.sentences, params_);
  // beta * n makes a uniform query score exactly like plain BM25.
  std::vector<double> weights(query.beta);
  const double n = static_cast<double>(weights.size());
  for (double& w : weights) w *= n;
  std::vector<double> scores;
  scores.reserve(indices.size());
  for (std::size_t idx : indices) scores.push_back(index.score_weighted(query.tokens, weights, idx));
  return scores;
}

std::vector<double> Bm25Scorer::score_texts(std::span<const Token> query,
                                            std::span<const TokenList> candidates) {
  std::vector<Sentence> docs;
  docs.reserve(candidates.size());
  for (const auto& candidate : candidates) docs.push_back(without_separators(candidate));
  Bm25Index index(docs, params_);
  const TokenList q = without_separators(query);
  std::vector<double> scores;
  scores.reserve(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) scores.push_back(index.score(q, i));
  return scores;
}

FallbackScorer::FallbackScorer(std::unique_ptr<Scorer> primary, std::unique_ptr<Scorer> fallback)
    : primary_(std::move(primary)), fallback_(std::move(fallback)) {}

void FallbackScorer::fail(const ScorerError& error) {
  failed_ = true;
  std::cerr << "warning: external scorer failed (" << error.what()
            << "); falling back to " << to_string(fallback_->kind()) << "\n";
}

std::vector<double> FallbackScorer::score_sentences(const WeightedQuery& query, const Passage& passage,
                                                    std::span<const std::size_t> indices) {
  if (!failed_) {
    try {
      return primary_->score_sentences(query, passage, indices);
    } catch (const ScorerError& e) {
      fail(e);
    }
  }
  return fallback_->score_sentences(query, passage, indices);
}

std::vector<double> FallbackScorer::score_texts(std::span<const Token> query,
                                                std::span<const TokenList> candidates) {
  if (!failed_) {
    try {
      return primary_->score_texts(query, candidates);
    } catch (const ScorerError& e) {
      fail(e);
    }
  }
  return fallback_->score_texts(query, candidates);
}

std::string join_tokens(std::span<const Token> tokens) {
  std::string out;
  for (const auto& token : tokens) {
    if (token == kSeparatorToken) continue;
    if (!out.empty()) out.push_back(' ');
    out += token;
  }
  return out;
}

std::unique_ptr<Scorer> make_scorer(const ScorerConfig& config, const EmbeddingTable& table) {
  switch (config.kind) {
    case ScorerKind::Cosine:
      return std::make_unique<CosineScorer>(table);
    case ScorerKind::Bm25:
      return std::make_unique<Bm25Scorer>(config.bm25);
    case ScorerKind::External: {
      std::string command = config.command;
      if (const char* env = std::getenv(kScorerCommandEnv); env != nullptr && *env != '\0') {
        command = env;
      }
      if (command.empty()) {
        throw Error("config", std::string("external scorer needs a command (set ") + kScorerCommandEnv +
                                  " or --scorer-cmd)");
      }
      if (!config.fallback_to_cosine) return std::make_unique<ExternalScorer>(command, config.timeout);
      std::unique_ptr<Scorer> primary;
      try {
        primary = std::make_unique<ExternalScorer>(command, config.timeout);
      } catch (const ScorerError& e) {
        std::cerr << "warning: external scorer unavailable (" << e.what() << "); using cosine\n";
        return std::make_unique<CosineScorer>(table);
      }
      return std::make_unique<FallbackScorer>(std::move(primary), std::make_unique<CosineScorer>(table));
    }
  }
  throw Error("config", "unknown scorer kind");
}

}  // namespace eic
