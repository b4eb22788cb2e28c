#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "eic/corpus.hpp"
#include "eic/embed.hpp"
#include "eic/error.hpp"

namespace eic {

enum class ScorerKind { Cosine, Bm25, External };

std::string_view to_string(ScorerKind kind);
ScorerKind parse_scorer_kind(std::string_view text);

// u.v / (|u||v|), or 0 when either vector has zero norm.
double cosine(std::span<const double> u, std::span<const double> v);

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

// Okapi BM25 statistics over a small document collection (the sentences of
// one passage). IDF(t) = ln((N - df + 0.5) / (df + 0.5) + 1).
class Bm25Index {
 public:
  explicit Bm25Index(std::span<const Sentence> documents, Bm25Params params = {});

  std::size_t size() const { return lengths_.size(); }
  double avgdl() const { return avgdl_; }
  const Bm25Params& params() const { return params_; }
  std::size_t df(std::string_view term) const;
  std::size_t tf(std::size_t doc, std::string_view term) const;
  std::size_t length(std::size_t doc) const { return lengths_.at(doc); }
  double idf(std::string_view term) const;

  // Contribution of one query term occurring `tf` times in a document of
  // `doc_length` tokens.
  double term_score(std::string_view term, std::size_t tf, std::size_t doc_length) const;

  // Per-query-token weights scale each token's contribution; a weight of 1
  // everywhere gives plain BM25. Duplicate query tokens contribute once each.
  double score(std::span<const Token> query, std::size_t doc) const;
  double score_weighted(std::span<const Token> query, std::span<const double> weights,
                        std::size_t doc) const;

  // Scores a document outside the collection against the collection's IDF and
  // average length.
  double score_text(std::span<const Token> query, std::span<const Token> document) const;

 private:
  Bm25Params params_;
  std::vector<std::unordered_map<std::string, std::size_t>> term_freqs_;
  std::vector<std::size_t> lengths_;
  std::unordered_map<std::string, std::size_t> doc_freqs_;
  double avgdl_ = 0.0;
};

double bm25_score(const Bm25Index& index, std::span<const Token> query, std::size_t sentence_idx);

// f(query, candidate). Two entry points: weighted-query relevance of passage
// sentences (extraction) and plain text-to-text relevance (integration
// reranking and verifier features). Implementations are not thread-safe;
// give each worker its own instance.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual ScorerKind kind() const = 0;
  virtual std::vector<double> score_sentences(const WeightedQuery& query, const Passage& passage,
                                              std::span<const std::size_t> indices) = 0;
  virtual std::vector<double> score_texts(std::span<const Token> query,
                                          std::span<const TokenList> candidates) = 0;
};

class CosineScorer final : public Scorer {
 public:
  explicit CosineScorer(const EmbeddingTable& table) : table_(table) {}
  ScorerKind kind() const override { return ScorerKind::Cosine; }
  std::vector<double> score_sentences(const WeightedQuery& query, const Passage& passage,
                                      std::span<const std::size_t> indices) override;
  std::vector<double> score_texts(std::span<const Token> query,
                                  std::span<const TokenList> candidates) override;

 private:
  const EmbeddingTable& table_;
};

class Bm25Scorer final : public Scorer {
 public:
  explicit Bm25Scorer(Bm25Params params = {}) : params_(params) {}
  ScorerKind kind() const override { return ScorerKind::Bm25; }
  std::vector<double> score_sentences(const WeightedQuery& query, const Passage& passage,
                                      std::span<const std::size_t> indices) override;
  std::vector<double> score_texts(std::span<const Token> query,
                                  std::span<const TokenList> candidates) override;

 private:
  Bm25Params params_;
};

// Raised for any external-process failure. `raw_reply` holds whatever the
// sidecar sent back (possibly empty).
class ScorerError : public Error {
 public:
  ScorerError(const std::string& message, std::string raw_reply)
      : Error("scorer", message), raw_reply_(std::move(raw_reply)) {}
  const std::string& raw_reply() const noexcept { return raw_reply_; }

 private:
  std::string raw_reply_;
};

// Scorer hosted by a child process speaking JSON lines over stdio:
//   request  {"id":int,"query":str,"candidates":[str,...]}
//   response {"id":int,"scores":[float,...]}
// Text fields are whitespace-joined tokens. The child is started with
// /bin/sh -c <command> and terminated on destruction.
class ExternalScorer final : public Scorer {
 public:
  explicit ExternalScorer(std::string command,
                          std::chrono::milliseconds timeout = std::chrono::seconds(30));
  ~ExternalScorer() override;
  ExternalScorer(const ExternalScorer&) = delete;
  ExternalScorer& operator=(const ExternalScorer&) = delete;

  ScorerKind kind() const override { return ScorerKind::External; }

  std::vector<double> score(std::string_view query, std::span<const std::string> candidates);

  // The weighted query is sent as the tokens with non-zero weight.
  std::vector<double> score_sentences(const WeightedQuery& query, const Passage& passage,
                                      std::span<const std::size_t> indices) override;
  std::vector<double> score_texts(std::span<const Token> query,
                                  std::span<const TokenList> candidates) override;

  const std::string& command() const { return command_; }
  bool alive() const { return pid_ > 0 && fd_ >= 0; }

 private:
  void start();
  void stop();
  std::string read_line();

  std::string command_;
  std::chrono::milliseconds timeout_;
  int pid_ = -1;
  int fd_ = -1;
  long long next_id_ = 0;
  std::string pending_;
};

// Uses `primary` until it raises ScorerError, then switches to `fallback` for
// the rest of its lifetime.
class FallbackScorer final : public Scorer {
 public:
  FallbackScorer(std::unique_ptr<Scorer> primary, std::unique_ptr<Scorer> fallback);
  ScorerKind kind() const override { return active().kind(); }
  std::vector<double> score_sentences(const WeightedQuery& query, const Passage& passage,
                                      std::span<const std::size_t> indices) override;
  std::vector<double> score_texts(std::span<const Token> query,
                                  std::span<const TokenList> candidates) override;
  bool fell_back() const { return failed_; }

 private:
  Scorer& active() const { return failed_ ? *fallback_ : *primary_; }
  void fail(const ScorerError& error);

  std::unique_ptr<Scorer> primary_;
  std::unique_ptr<Scorer> fallback_;
  bool failed_ = false;
};

std::string join_tokens(std::span<const Token> tokens);

// Environment variable that overrides the configured sidecar command.
inline constexpr const char* kScorerCommandEnv = "EIC_SCORER_CMD";

struct ScorerConfig {
  ScorerKind kind = ScorerKind::Cosine;
  Bm25Params bm25;
  std::string command;
  std::chrono::milliseconds timeout = std::chrono::seconds(30);
  // External only: fall back to cosine when the sidecar fails.
  bool fallback_to_cosine = false;
};

std::unique_ptr<Scorer> make_scorer(const ScorerConfig& config, const EmbeddingTable& table);

}  // namespace eic
