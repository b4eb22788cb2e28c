#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace eic {

using Token = std::string;
using TokenList = std::vector<Token>;
using Sentence = TokenList;
using SentenceSet = std::vector<std::size_t>;  // sorted, unique

inline constexpr std::size_t kOptionsPerQuestion = 4;

// Reserved token placed between concatenated evidence sentences. Scorers drop
// it before computing any similarity.
inline constexpr std::string_view kSeparatorToken = "[SEP]";

TokenList without_separators(std::span<const Token> tokens);

// A pre-tokenized passage. Sentence indices are 0-based and dense.
struct Passage {
  std::string id;
  std::vector<Sentence> sentences;
  std::optional<std::string> raw_text;

  std::size_t size() const { return sentences.size(); }
};

enum class Polarity { MostConsistent, MostContradictory };

std::string_view to_string(Polarity polarity);
Polarity parse_polarity(std::string_view text);

struct Option {
  TokenList text_tokens;
  bool is_answer = false;
  std::optional<SentenceSet> gold_evidence;
};

struct QuestionInstance {
  std::string qid;
  std::string passage_id;
  Polarity polarity = Polarity::MostConsistent;
  std::array<Option, kOptionsPerQuestion> options;

  std::size_t answer_index() const;
};

// Passages and questions loaded from one dataset file. Immutable once built;
// `passage()` resolves a question's passage_id.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<Passage> passages, std::vector<QuestionInstance> questions);

  const std::vector<Passage>& passages() const { return passages_; }
  const std::vector<QuestionInstance>& questions() const { return questions_; }
  const Passage& passage(std::string_view id) const;
  const Passage& passage_for(const QuestionInstance& question) const {
    return passage(question.passage_id);
  }
  bool has_gold_evidence() const;

 private:
  std::vector<Passage> passages_;
  std::vector<QuestionInstance> questions_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

// Validation shared by the loader and the fixture generators.
void validate_passage(const Passage& passage);
void validate_question(const QuestionInstance& question, const Passage& passage);

// JSON-lines dataset I/O. Errors carry the 1-based line number and the
// offending field.
Dataset load_dataset(const std::filesystem::path& path);
Dataset parse_dataset(std::istream& in);
void write_dataset(const Dataset& dataset, std::ostream& out);
void write_dataset(const Dataset& dataset, const std::filesystem::path& path);

// Single-question synthetic fixture. Sentence i is built from the i-th block
// of `tokens_per_sentence` vocabulary entries, so sentences never share
// tokens. Gold evidence of the correct option sits at 0, distance, 2*distance,
// ... and its tokens are the concatenation of those sentences.
struct FixtureSpec {
  std::size_t sentences = 5;
  std::size_t evidence_count = 2;
  std::size_t distance = 3;
  std::vector<Token> vocabulary;
  std::size_t tokens_per_sentence = 3;
  std::uint64_t seed = 0;
};

struct Fixture {
  Passage passage;
  QuestionInstance question;
};

Fixture make_fixture(const FixtureSpec& spec);

// Vocabulary of `count` distinct tokens "w0", "w1", ...
std::vector<Token> synthetic_vocabulary(std::size_t count, std::string_view prefix = "w");

}  // namespace eic
