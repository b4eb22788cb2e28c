#include "eic/evaluate.hpp"

#include <algorithm>
#include <set>

#include "eic/error.hpp"

namespace eic {

namespace {

Prf prf_from_counts(std::size_t hits, std::size_t predicted, std::size_t gold) {
  Prf out;
  out.empty_prediction = predicted == 0;
  out.precision = predicted == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(predicted);
  out.recall = gold == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(gold);
  const double sum = out.precision + out.recall;
  out.f1 = sum == 0.0 ? 0.0 : 2.0 * out.precision * out.recall / sum;
  return out;
}

}  // namespace

std::optional<Prf> evidence_prf(std::span<const std::size_t> predicted, std::span<const std::size_t> gold) {
  if (gold.empty()) return std::nullopt;
  const std::set<std::size_t> p(predicted.begin(), predicted.end());
  const std::set<std::size_t> g(gold.begin(), gold.end());
  std::size_t hits = 0;
  for (std::size_t idx : p) hits += g.count(idx);
  return prf_from_counts(hits, p.size(), g.size());
}

OptionEvidenceResult score_option(std::string qid, std::size_t option_index,
                                  std::span<const std::size_t> predicted,
                                  std::span<const std::size_t> gold) {
  auto prf = evidence_prf(predicted, gold);
  if (!prf) throw Error("evidence", "option " + qid + "#" + std::to_string(option_index) + " has no gold evidence");
  OptionEvidenceResult out;
  out.qid = std::move(qid);
  out.option_index = option_index;
  out.prf = *prf;
  const std::set<std::size_t> p(predicted.begin(), predicted.end());
  const std::set<std::size_t> g(gold.begin(), gold.end());
  for (std::size_t idx : p) out.hits += g.count(idx);
  out.predicted = p.size();
  out.gold = g.size();
  return out;
}

EvidenceReport aggregate(std::span<const OptionEvidenceResult> options) {
  EvidenceReport report;
  report.options.assign(options.begin(), options.end());
  std::sort(report.options.begin(), report.options.end(), [](const auto& a, const auto& b) {
    return a.qid != b.qid ? a.qid < b.qid : a.option_index < b.option_index;
  });
  report.evaluated = report.options.size();
  if (report.options.empty()) return report;

  std::size_t hits = 0, predicted = 0, gold = 0;
  for (const auto& option : report.options) {
    report.macro.precision += option.prf.precision;
    report.macro.recall += option.prf.recall;
    report.macro.f1 += option.prf.f1;
    report.empty_predictions += option.prf.empty_prediction ? 1 : 0;
    hits += option.hits;
    predicted += option.predicted;
    gold += option.gold;
  }
  const double n = static_cast<double>(report.options.size());
  report.macro.precision /= n;
  report.macro.recall /= n;
  report.macro.f1 /= n;
  report.macro.empty_prediction = report.empty_predictions > 0;
  report.micro = prf_from_counts(hits, predicted, gold);
  return report;
}

QaReport qa_accuracy(const std::unordered_map<std::string, std::size_t>& predictions,
                     std::span<const QuestionInstance> questions) {
  if (questions.empty()) throw Error("prediction", "no questions to evaluate");
  QaReport report;
  for (const auto& question : questions) {
    auto it = predictions.find(question.qid);
    if (it == predictions.end()) {
      throw Error("prediction", "missing prediction for qid '" + question.qid + "'");
    }
    const std::size_t gold = question.answer_index();
    report.questions.push_back({question.qid, it->second, gold});
    report.correct += it->second == gold ? 1 : 0;
  }
  report.total = questions.size();
  report.accuracy = static_cast<double>(report.correct) / static_cast<double>(report.total);
  return report;
}

}  // namespace eic
