#include "eic/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "eic/error.hpp"
#include "json.hpp"

namespace eic {

using nlohmann::json;

TokenList without_separators(std::span<const Token> tokens) {
  TokenList out;
  out.reserve(tokens.size());
  for (const auto& token : tokens) {
    if (token != kSeparatorToken) out.push_back(token);
  }
  return out;
}

std::string_view to_string(Polarity polarity) {
  return polarity == Polarity::MostConsistent ? "consistent" : "contradictory";
}

Polarity parse_polarity(std::string_view text) {
  if (text == "consistent") return Polarity::MostConsistent;
  if (text == "contradictory") return Polarity::MostContradictory;
  throw Error("schema", "unknown polarity '" + std::string(text) + "'");
}

std::size_t QuestionInstance::answer_index() const {
  for (std::size_t i = 0; i < options.size(); ++i) {
    if (options[i].is_answer) return i;
  }
  throw Error("schema", "question '" + qid + "' has no answer option");
}

Dataset::Dataset(std::vector<Passage> passages, std::vector<QuestionInstance> questions)
    : passages_(std::move(passages)), questions_(std::move(questions)) {
  for (std::size_t i = 0; i < passages_.size(); ++i) {
    validate_passage(passages_[i]);
    if (!by_id_.emplace(passages_[i].id, i).second) {
      throw Error("schema", "duplicate passage id '" + passages_[i].id + "'");
    }
  }
  std::set<std::string> qids;
  for (const auto& question : questions_) {
    if (!qids.insert(question.qid).second) {
      throw Error("schema", "duplicate qid '" + question.qid + "'");
    }
    auto it = by_id_.find(question.passage_id);
    if (it == by_id_.end()) {
      throw Error("reference", "question '" + question.qid + "' references unknown passage_id '" +
                                   question.passage_id + "'");
    }
    validate_question(question, passages_[it->second]);
  }
}

const Passage& Dataset::passage(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) {
    throw Error("reference", "unknown passage_id '" + std::string(id) + "'");
  }
  return passages_[it->second];
}

bool Dataset::has_gold_evidence() const {
  for (const auto& question : questions_) {
    for (const auto& option : question.options) {
      if (option.gold_evidence) return true;
    }
  }
  return false;
}

void validate_passage(const Passage& passage) {
  if (passage.sentences.empty()) {
    throw Error("schema", "passage '" + passage.id + "': sentences must be non-empty");
  }
  for (std::size_t i = 0; i < passage.sentences.size(); ++i) {
    if (passage.sentences[i].empty()) {
      throw Error("schema", "passage '" + passage.id + "': sentence " + std::to_string(i) +
                                " has no tokens");
    }
  }
}

void validate_question(const QuestionInstance& question, const Passage& passage) {
  std::size_t answers = 0;
  for (std::size_t i = 0; i < question.options.size(); ++i) {
    const Option& option = question.options[i];
    if (option.is_answer) ++answers;
    if (option.text_tokens.empty()) {
      throw Error("schema", "question '" + question.qid + "': option " + std::to_string(i) +
                                " has no tokens");
    }
    if (!option.gold_evidence) continue;
    const auto& gold = *option.gold_evidence;
    if (gold.empty()) {
      throw Error("schema", "question '" + question.qid + "': option " + std::to_string(i) +
                                " gold_evidence must be non-empty when present");
    }
    for (std::size_t idx : gold) {
      if (idx >= passage.size()) {
        throw Error("schema", "question '" + question.qid + "': option " + std::to_string(i) +
                                  " gold_evidence index " + std::to_string(idx) +
                                  " out of range for passage '" + passage.id + "'");
      }
    }
  }
  if (answers != 1) {
    throw Error("schema", "question '" + question.qid + "' must flag exactly one answer, found " +
                              std::to_string(answers));
  }
}

namespace {

[[noreturn]] void field_error(std::size_t line, std::string_view field, std::string_view what) {
  throw Error("schema", "line " + std::to_string(line) + ": field '" + std::string(field) +
                            "': " + std::string(what));
}

const json& require(const json& record, std::string_view field, std::size_t line) {
  auto it = record.find(field);
  if (it == record.end()) field_error(line, field, "missing");
  return *it;
}

std::string require_string(const json& record, std::string_view field, std::size_t line) {
  const json& value = require(record, field, line);
  if (!value.is_string()) field_error(line, field, "expected string");
  return value.get<std::string>();
}

TokenList parse_tokens(const json& value, std::string_view field, std::size_t line) {
  if (!value.is_array()) field_error(line, field, "expected array of strings");
  TokenList tokens;
  tokens.reserve(value.size());
  for (const auto& token : value) {
    if (!token.is_string()) field_error(line, field, "expected array of strings");
    tokens.push_back(token.get<std::string>());
  }
  return tokens;
}

Passage parse_passage(const json& record, std::size_t line) {
  Passage passage;
  passage.id = require_string(record, "id", line);
  const json& sentences = require(record, "sentences", line);
  if (!sentences.is_array() || sentences.empty()) {
    field_error(line, "sentences", "expected non-empty array of token arrays");
  }
  for (const auto& sentence : sentences) {
    TokenList tokens = parse_tokens(sentence, "sentences", line);
    if (tokens.empty()) field_error(line, "sentences", "every sentence needs at least one token");
    passage.sentences.push_back(std::move(tokens));
  }
  if (auto it = record.find("raw_text"); it != record.end() && !it->is_null()) {
    if (!it->is_string()) field_error(line, "raw_text", "expected string");
    passage.raw_text = it->get<std::string>();
  }
  return passage;
}

QuestionInstance parse_question(const json& record, std::size_t line) {
  QuestionInstance question;
  question.qid = require_string(record, "qid", line);
  question.passage_id = require_string(record, "passage_id", line);
  std::string polarity = require_string(record, "polarity", line);
  if (polarity == "consistent") {
    question.polarity = Polarity::MostConsistent;
  } else if (polarity == "contradictory") {
    question.polarity = Polarity::MostContradictory;
  } else {
    field_error(line, "polarity", "expected \"consistent\" or \"contradictory\"");
  }
  const json& options = require(record, "options", line);
  if (!options.is_array() || options.size() != kOptionsPerQuestion) {
    field_error(line, "options", "expected exactly 4 options");
  }
  std::size_t answers = 0;
  for (std::size_t i = 0; i < kOptionsPerQuestion; ++i) {
    const json& raw = options[i];
    if (!raw.is_object()) field_error(line, "options", "expected object");
    Option& option = question.options[i];
    option.text_tokens = parse_tokens(require(raw, "tokens", line), "options.tokens", line);
    if (option.text_tokens.empty()) field_error(line, "options.tokens", "must be non-empty");
    const json& is_answer = require(raw, "is_answer", line);
    if (!is_answer.is_boolean()) field_error(line, "options.is_answer", "expected bool");
    option.is_answer = is_answer.get<bool>();
    answers += option.is_answer ? 1 : 0;
    if (auto it = raw.find("gold_evidence"); it != raw.end() && !it->is_null()) {
      if (!it->is_array() || it->empty()) {
        field_error(line, "options.gold_evidence", "expected non-empty array of ints or null");
      }
      SentenceSet gold;
      for (const auto& idx : *it) {
        if (!idx.is_number_integer() || idx.get<long long>() < 0) {
          field_error(line, "options.gold_evidence", "expected non-negative integers");
        }
        gold.push_back(idx.get<std::size_t>());
      }
      std::sort(gold.begin(), gold.end());
      gold.erase(std::unique(gold.begin(), gold.end()), gold.end());
      option.gold_evidence = std::move(gold);
    }
  }
  if (answers != 1) field_error(line, "options.is_answer", "exactly one option must be the answer");
  return question;
}

}  // namespace

Dataset parse_dataset(std::istream& in) {
  std::vector<Passage> passages;
  std::vector<QuestionInstance> questions;
  std::vector<std::size_t> question_lines;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(text);
    } catch (const json::parse_error& e) {
      throw Error("schema", "line " + std::to_string(line) + ": malformed JSON: " + e.what());
    }
    if (!record.is_object()) field_error(line, "kind", "record must be a JSON object");
    std::string kind = require_string(record, "kind", line);
    if (kind == "passage") {
      passages.push_back(parse_passage(record, line));
    } else if (kind == "question") {
      questions.push_back(parse_question(record, line));
      question_lines.push_back(line);
    } else {
      field_error(line, "kind", "expected \"passage\" or \"question\"");
    }
  }

  // Cross-reference errors are reported against the question's line.
  std::set<std::string> ids;
  for (const auto& p : passages) ids.insert(p.id);
  for (std::size_t i = 0; i < questions.size(); ++i) {
    if (!ids.count(questions[i].passage_id)) {
      throw Error("reference", "line " + std::to_string(question_lines[i]) + ": question '" +
                                   questions[i].qid + "' references unknown passage_id '" +
                                   questions[i].passage_id + "'");
    }
  }
  return Dataset(std::move(passages), std::move(questions));
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open dataset file '" + path.string() + "'");
  return parse_dataset(in);
}

void write_dataset(const Dataset& dataset, std::ostream& out) {
  for (const auto& passage : dataset.passages()) {
    json record = {{"kind", "passage"}, {"id", passage.id}, {"sentences", passage.sentences}};
    if (passage.raw_text) record["raw_text"] = *passage.raw_text;
    out << record.dump() << '\n';
  }
  for (const auto& question : dataset.questions()) {
    json options = json::array();
    for (const auto& option : question.options) {
      json o = {{"tokens", option.text_tokens}, {"is_answer", option.is_answer}};
      o["gold_evidence"] = option.gold_evidence ? json(*option.gold_evidence) : json(nullptr);
      options.push_back(std::move(o));
    }
    json record = {{"kind", "question"},
                   {"qid", question.qid},
                   {"passage_id", question.passage_id},
                   {"polarity", std::string(to_string(question.polarity))},
                   {"options", std::move(options)}};
    out << record.dump() << '\n';
  }
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot write dataset file '" + path.string() + "'");
  write_dataset(dataset, out);
}

std::vector<Token> synthetic_vocabulary(std::size_t count, std::string_view prefix) {
  std::vector<Token> vocab;
  vocab.reserve(count);
  for (std::size_t i = 0; i < count; ++i) vocab.push_back(std::string(prefix) + std::to_string(i));
  return vocab;
}

Fixture make_fixture(const FixtureSpec& spec) {
  if (spec.sentences == 0 || spec.evidence_count == 0 || spec.tokens_per_sentence == 0) {
    throw Error("fixture", "sentences, evidence_count and tokens_per_sentence must be positive");
  }
  if (spec.evidence_count > 1) {
    if (spec.distance == 0) {
      throw Error("fixture", "distance must be positive when more than one evidence sentence");
    }
    if ((spec.evidence_count - 1) * spec.distance > spec.sentences - 1) {
      throw Error("fixture", "evidence_count " + std::to_string(spec.evidence_count) +
                                 " at distance " + std::to_string(spec.distance) +
                                 " does not fit in " + std::to_string(spec.sentences) +
                                 " sentences");
    }
  }
  const std::size_t corruption_tokens = kOptionsPerQuestion - 1;
  const std::size_t needed = spec.sentences * spec.tokens_per_sentence + corruption_tokens;
  if (spec.vocabulary.size() < needed) {
    throw Error("fixture", "vocabulary has " + std::to_string(spec.vocabulary.size()) +
                               " tokens, need " + std::to_string(needed));
  }

  Fixture fixture;
  fixture.passage.id = "fixture-p" + std::to_string(spec.seed);
  for (std::size_t s = 0; s < spec.sentences; ++s) {
    auto first = spec.vocabulary.begin() + static_cast<std::ptrdiff_t>(s * spec.tokens_per_sentence);
    fixture.passage.sentences.emplace_back(first,
                                           first + static_cast<std::ptrdiff_t>(spec.tokens_per_sentence));
  }

  SentenceSet gold;
  for (std::size_t e = 0; e < spec.evidence_count; ++e) gold.push_back(e * spec.distance);

  std::vector<std::size_t> others;
  for (std::size_t s = 0; s < spec.sentences; ++s) {
    if (!std::binary_search(gold.begin(), gold.end(), s)) others.push_back(s);
  }
  if (others.empty()) others = gold;

  std::mt19937_64 rng(spec.seed);
  const std::size_t answer = static_cast<std::size_t>(rng() % kOptionsPerQuestion);

  QuestionInstance& question = fixture.question;
  question.qid = "fixture-q" + std::to_string(spec.seed);
  question.passage_id = fixture.passage.id;
  question.polarity = Polarity::MostConsistent;
  std::size_t distractor = 0;
  for (std::size_t i = 0; i < kOptionsPerQuestion; ++i) {
    Option& option = question.options[i];
    if (i == answer) {
      option.is_answer = true;
      for (std::size_t s : gold) {
        const auto& sentence = fixture.passage.sentences[s];
        option.text_tokens.insert(option.text_tokens.end(), sentence.begin(), sentence.end());
      }
      option.gold_evidence = gold;
      continue;
    }
    // Distractors restate one other sentence with its last token swapped for
    // a token that never occurs in the passage.
    std::size_t source = others[distractor % others.size()];
    option.text_tokens = fixture.passage.sentences[source];
    option.text_tokens.back() = spec.vocabulary[spec.sentences * spec.tokens_per_sentence + distractor];
    option.gold_evidence = SentenceSet{source};
    ++distractor;
  }
  validate_question(question, fixture.passage);
  return fixture;
}

}  // namespace eic
