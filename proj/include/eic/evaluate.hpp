#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "eic/corpus.hpp"

namespace eic {

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // Set when the prediction was empty; precision is then reported as 0.
  bool empty_prediction = false;
};

// Returns nullopt (skip the option) when gold is empty.
std::optional<Prf> evidence_prf(std::span<const std::size_t> predicted, std::span<const std::size_t> gold);

struct OptionEvidenceResult {
  std::string qid;
  std::size_t option_index = 0;
  Prf prf;
  // Raw counts for micro averaging.
  std::size_t hits = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;
};

struct EvidenceReport {
  std::vector<OptionEvidenceResult> options;
  Prf macro;
  Prf micro;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;
  std::size_t empty_predictions = 0;
};

OptionEvidenceResult score_option(std::string qid, std::size_t option_index,
                                  std::span<const std::size_t> predicted,
                                  std::span<const std::size_t> gold);

// Macro: mean of per-option P/R/F1. Micro: P/R/F1 from pooled counts.
EvidenceReport aggregate(std::span<const OptionEvidenceResult> options);

struct QaReport {
  double accuracy = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
  struct Entry {
    std::string qid;
    std::size_t predicted;
    std::size_t gold;
  };
  std::vector<Entry> questions;
};

// `predictions` maps qid to predicted option index.
QaReport qa_accuracy(const std::unordered_map<std::string, std::size_t>& predictions,
                     std::span<const QuestionInstance> questions);

}  // namespace eic
