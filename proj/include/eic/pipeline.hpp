#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "eic/compete.hpp"
#include "eic/corpus.hpp"
#include "eic/embed.hpp"
#include "eic/evaluate.hpp"
#include "eic/extract.hpp"
#include "eic/integrate.hpp"
#include "eic/scorers.hpp"

namespace eic {

// Stage-local ablations; any subset is valid.
struct Ablations {
  bool no_iterative = false;    // extraction runs a single step
  bool no_integration = false;  // keep the top beam chain of the last step
  bool no_competition = false;  // pointwise-trained verifier, options scored independently

  bool any() const { return no_iterative || no_integration || no_competition; }
};

Ablations parse_ablations(const std::vector<std::string>& names);
std::string ablation_suffix(const Ablations& ablations);

struct ExtractionSettings {
  ExtractorConfig extractor;
  ScorerConfig retriever;
  ScorerConfig integrator;
  Ablations ablations;
  std::size_t workers = 1;
};

// One selected evidence set per (question, option). sentence_indices are in
// passage order.
struct EvidenceRecord {
  std::string qid;
  std::size_t option_index = 0;
  std::vector<std::size_t> sentence_indices;
  double score = 0.0;
};

// Runs extraction + integration for every option. Records come back sorted by
// (qid, option_index) whatever the worker count.
std::vector<EvidenceRecord> run_extraction(const Dataset& dataset, const EmbeddingTable& table,
                                           const ExtractionSettings& settings);

// The per-option evidence selection used by run_extraction.
IntegratedEvidence select_evidence(const TokenList& option_tokens, const Passage& passage,
                                   const ExtractionSettings& settings, const EmbeddingTable& table,
                                   Scorer& retriever, Scorer& integrator);

void write_evidence(const std::vector<EvidenceRecord>& records, std::ostream& out);
void write_evidence(const std::vector<EvidenceRecord>& records, const std::filesystem::path& path);
std::vector<EvidenceRecord> read_evidence(std::istream& in);
std::vector<EvidenceRecord> read_evidence(const std::filesystem::path& path);

// Evidence looked up per (qid, option). Construction checks that every option
// of every dataset question is covered and that no record names an unknown
// qid or an out-of-range sentence.
class EvidenceIndex {
 public:
  EvidenceIndex(const Dataset& dataset, const std::vector<EvidenceRecord>& records);
  const EvidenceRecord& at(const std::string& qid, std::size_t option) const;
  TokenList text(const Dataset& dataset, const QuestionInstance& question, std::size_t option) const;

 private:
  std::map<std::pair<std::string, std::size_t>, const EvidenceRecord*> by_key_;
};

std::vector<CompetitionExample> build_examples(const Dataset& dataset, const EmbeddingTable& table,
                                               const std::vector<EvidenceRecord>& evidence,
                                               Bm25Params bm25 = {});

struct PredictionRecord {
  std::string qid;
  std::size_t option_index = 0;
  std::array<double, kOptionsPerQuestion> scores{};
};

struct AnswerSettings {
  // Linear verifier, or the external scorer when unset.
  std::optional<LinearVerifier> verifier;
  ScorerConfig external;
  bool independent = false;  // sigmoid(g) per option (no_competition)
  Bm25Params bm25;
  std::size_t workers = 1;
};

std::vector<PredictionRecord> run_answer(const Dataset& dataset, const EmbeddingTable& table,
                                         const std::vector<EvidenceRecord>& evidence,
                                         const AnswerSettings& settings);

void write_predictions(const std::vector<PredictionRecord>& records, std::ostream& out);
void write_predictions(const std::vector<PredictionRecord>& records, const std::filesystem::path& path);
std::vector<PredictionRecord> read_predictions(std::istream& in);
std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path);

struct MethodReport {
  std::string method;
  std::optional<EvidenceReport> evidence;  // nullopt when the dataset has no gold evidence
  QaReport qa;
};

MethodReport evaluate_run(std::string method, const Dataset& dataset,
                          const std::vector<PredictionRecord>& predictions,
                          const std::vector<EvidenceRecord>& evidence);

std::string report_to_json(const std::vector<MethodReport>& reports);
void write_report_csv(const std::vector<MethodReport>& reports, std::ostream& out);

// Named end-to-end configurations:
//   bm25_top1 bm25_top2 cosine_top1 cosine_top2 query_append hard_mask soft_mask
// optionally followed by "+no_iterative", "+no_integration", "+no_competition".
struct MethodSpec {
  std::string name;
  ExtractionSettings extraction;
  Objective objective = Objective::Pairwise;
};

MethodSpec method_spec(std::string_view name, const ExtractorConfig& defaults = {});
std::vector<std::string> known_methods();

struct MethodRun {
  std::vector<EvidenceRecord> evidence;
  std::vector<PredictionRecord> predictions;
  LinearVerifier verifier;
  MethodReport report;
};

// Extract on `train` and `test`, train a verifier on the train evidence, then
// answer and evaluate on test.
MethodRun run_method(const MethodSpec& spec, const Dataset& train, const Dataset& test,
                     const EmbeddingTable& table, const CompetitionConfig& competition,
                     std::size_t workers = 1);

}  // namespace eic
