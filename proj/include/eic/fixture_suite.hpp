#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "eic/corpus.hpp"
#include "eic/embed.hpp"

namespace eic {

// Generator for a multi-question synthetic corpus with its own embedding
// table. Each question gets a fresh passage:
//
//   * every option has 1 or 2 gold evidence sentences;
//   * gold sentences may have a "sibling" that repeats part of their content
//     (same topic, irrelevant to the option);
//   * filler sentences pad the passage;
//   * a shared pool of function words appears across sentences.
//
// Option text keeps most content tokens of its gold sentences, replaces a
// per-question fraction with synonyms (tokens absent from the passage whose
// vectors are close to the original), and distractors additionally swap some
// tokens for antonyms (also close in embedding space). In a consistent
// question the answer has no antonym swaps and every other option has at
// least one; in a contradictory question the answer has strictly more swaps
// than any other option.
//
// Vocabulary and vectors depend only on `vocab_seed`, so suites generated
// with different `seed`s share one embedding table.
struct SuiteSpec {
  std::size_t questions = 200;
  std::uint64_t seed = 1;
  std::uint64_t vocab_seed = 7;
  std::string id_prefix = "s";

  std::size_t dim = 50;
  std::size_t vocabulary_size = 4000;
  std::size_t function_words = 12;

  std::size_t min_content = 7;   // content tokens per sentence
  std::size_t max_content = 10;
  std::size_t function_per_sentence = 2;
  std::size_t min_fillers = 3;
  std::size_t max_fillers = 6;

  double two_evidence_fraction = 0.5;
  double sibling_probability = 0.7;
  double sibling_overlap = 0.6;      // share of the gold sentence's content a sibling repeats
  double option_keep = 0.8;          // share of gold content tokens kept in the option
  double max_paraphrase = 0.4;       // per-question synonym rate drawn from [0, max_paraphrase]
  double contradictory_fraction = 0.5;
  double min_similarity = 0.6;       // synonym/antonym cosine to the original token
  double max_similarity = 0.9;
};

struct FixtureSuite {
  Dataset dataset;
  EmbeddingTable embeddings;
};

FixtureSuite make_fixture_suite(const SuiteSpec& spec);

// Embedding table shared by all suites with the same vocabulary settings.
EmbeddingTable make_suite_embeddings(const SuiteSpec& spec);

}  // namespace eic
