#include "eic/fixture_suite.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>

#include "eic/error.hpp"

namespace eic {

namespace {

// Draws built directly on mt19937_64 output so fixtures are byte-identical
// across standard libraries.
class Draw {
 public:
  explicit Draw(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }
  std::size_t between(std::size_t lo, std::size_t hi) { return lo + below(hi - lo + 1); }
  bool chance(double p) { return uniform() < p; }
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

  // `count` distinct positions out of [0, n), ascending.
  std::vector<std::size_t> sample(std::size_t n, std::size_t count) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    shuffle(idx);
    idx.resize(std::min(count, n));
    std::sort(idx.begin(), idx.end());
    return idx;
  }

 private:
  std::mt19937_64 engine_;
};

Vector random_unit(Draw& draw, std::size_t dim) {
  Vector v(dim);
  double norm = 0.0;
  for (double& x : v) {
    x = draw.normal();
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

// Unit vector with cosine `rho` to the unit vector `base`.
Vector neighbour(Draw& draw, const Vector& base, double rho) {
  Vector noise = random_unit(draw, base.size());
  const double proj = dot(noise, base);
  double norm = 0.0;
  for (std::size_t d = 0; d < noise.size(); ++d) {
    noise[d] -= proj * base[d];
    norm += noise[d] * noise[d];
  }
  norm = std::sqrt(norm);
  const double ortho = std::sqrt(1.0 - rho * rho);
  Vector out(base.size());
  for (std::size_t d = 0; d < base.size(); ++d) out[d] = rho * base[d] + ortho * noise[d] / norm;
  return out;
}

std::string content_token(std::size_t i) { return "t" + std::to_string(i); }
std::string synonym_of(const std::string& token) { return token + "s"; }
std::string antonym_of(const std::string& token) { return token + "x"; }
std::string function_token(std::size_t i) { return "f" + std::to_string(i); }

std::string padded(std::size_t n) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04zu", n);
  return buf;
}

struct Draft {
  std::vector<std::size_t> content;  // vocabulary ids
};

class PassageBuilder {
 public:
  PassageBuilder(Draw& draw, const SuiteSpec& spec) : draw_(draw), spec_(spec) {}

  std::size_t fresh_sentence() {
    const std::size_t length = draw_.between(spec_.min_content, spec_.max_content);
    Draft draft;
    while (draft.content.size() < length) draft.content.push_back(fresh_token());
    drafts_.push_back(std::move(draft));
    return drafts_.size() - 1;
  }

  std::size_t sibling_of(std::size_t gold) {
    const auto& source = drafts_[gold].content;
    const std::size_t shared = static_cast<std::size_t>(
        std::lround(spec_.sibling_overlap * static_cast<double>(source.size())));
    Draft draft;
    for (std::size_t pos : draw_.sample(source.size(), shared)) draft.content.push_back(source[pos]);
    const std::size_t length = draw_.between(spec_.min_content, spec_.max_content);
    while (draft.content.size() < std::max(length, shared + 1)) draft.content.push_back(fresh_token());
    draw_.shuffle(draft.content);
    drafts_.push_back(std::move(draft));
    return drafts_.size() - 1;
  }

  const Draft& draft(std::size_t i) const { return drafts_[i]; }
  std::size_t size() const { return drafts_.size(); }

 private:
  std::size_t fresh_token() {
    for (;;) {
      const std::size_t id = draw_.below(spec_.vocabulary_size);
      if (used_.insert(id).second) return id;
    }
  }

  Draw& draw_;
  const SuiteSpec& spec_;
  std::vector<Draft> drafts_;
  std::set<std::size_t> used_;
};

void check_spec(const SuiteSpec& spec) {
  if (spec.questions == 0) throw Error("fixture", "suite needs at least one question");
  if (spec.dim == 0 || spec.vocabulary_size == 0) throw Error("fixture", "dim and vocabulary must be positive");
  if (spec.min_content < 3 || spec.max_content < spec.min_content) {
    throw Error("fixture", "content length range must satisfy 3 <= min <= max");
  }
  if (spec.max_fillers < spec.min_fillers) throw Error("fixture", "filler range is empty");
  if (spec.min_similarity <= 0.0 || spec.max_similarity >= 1.0 || spec.min_similarity > spec.max_similarity) {
    throw Error("fixture", "similarity range must lie inside (0, 1)");
  }
  // Worst case: 4 options x 2 gold x (gold + sibling) + fillers, all fresh.
  const std::size_t worst = (16 + spec.max_fillers) * spec.max_content;
  if (spec.vocabulary_size < 2 * worst) {
    throw Error("fixture", "vocabulary too small for the passage size");
  }
  if (spec.function_per_sentence > 0 && spec.function_words == 0) {
    throw Error("fixture", "function words requested but the pool is empty");
  }
}

}  // namespace

EmbeddingTable make_suite_embeddings(const SuiteSpec& spec) {
  check_spec(spec);
  Draw draw(spec.vocab_seed);
  EmbeddingTable table(spec.dim);
  const double span = spec.max_similarity - spec.min_similarity;
  for (std::size_t i = 0; i < spec.vocabulary_size; ++i) {
    const std::string token = content_token(i);
    const Vector base = random_unit(draw, spec.dim);
    table.add(token, base);
    table.add(synonym_of(token), neighbour(draw, base, spec.min_similarity + span * draw.uniform()));
    table.add(antonym_of(token), neighbour(draw, base, spec.min_similarity + span * draw.uniform()));
  }
  for (std::size_t i = 0; i < spec.function_words; ++i) table.add(function_token(i), random_unit(draw, spec.dim));
  return table;
}

FixtureSuite make_fixture_suite(const SuiteSpec& spec) {
  check_spec(spec);
  EmbeddingTable table = make_suite_embeddings(spec);
  Draw draw(spec.seed * 0x9E3779B97F4A7C15ULL + 1);

  std::vector<Passage> passages;
  std::vector<QuestionInstance> questions;
  for (std::size_t q = 0; q < spec.questions; ++q) {
    const Polarity polarity =
        draw.chance(spec.contradictory_fraction) ? Polarity::MostContradictory : Polarity::MostConsistent;
    const std::size_t answer = draw.below(kOptionsPerQuestion);
    const double paraphrase = draw.uniform() * spec.max_paraphrase;

    PassageBuilder builder(draw, spec);
    std::array<std::vector<std::size_t>, kOptionsPerQuestion> gold_drafts;
    for (std::size_t o = 0; o < kOptionsPerQuestion; ++o) {
      const std::size_t k = draw.chance(spec.two_evidence_fraction) ? 2 : 1;
      for (std::size_t e = 0; e < k; ++e) gold_drafts[o].push_back(builder.fresh_sentence());
    }
    for (std::size_t o = 0; o < kOptionsPerQuestion; ++o) {
      for (std::size_t g : gold_drafts[o]) {
        if (draw.chance(spec.sibling_probability)) builder.sibling_of(g);
      }
    }
    const std::size_t fillers = draw.between(spec.min_fillers, spec.max_fillers);
    for (std::size_t f = 0; f < fillers; ++f) builder.fresh_sentence();

    // Random sentence order; position_of maps draft index to passage index.
    std::vector<std::size_t> order(builder.size());
    std::iota(order.begin(), order.end(), 0);
    draw.shuffle(order);
    std::vector<std::size_t> position_of(order.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos) position_of[order[pos]] = pos;

    Passage passage;
    passage.id = spec.id_prefix + "-p" + padded(q);
    for (std::size_t d : order) {
      Sentence sentence;
      for (std::size_t id : builder.draft(d).content) sentence.push_back(content_token(id));
      for (std::size_t f = 0; f < spec.function_per_sentence; ++f) {
        const std::size_t at = draw.below(sentence.size() + 1);
        sentence.insert(sentence.begin() + static_cast<std::ptrdiff_t>(at),
                        function_token(draw.below(spec.function_words)));
      }
      passage.sentences.push_back(std::move(sentence));
    }

    QuestionInstance question;
    question.qid = spec.id_prefix + "-q" + padded(q);
    question.passage_id = passage.id;
    question.polarity = polarity;
    for (std::size_t o = 0; o < kOptionsPerQuestion; ++o) {
      Option& option = question.options[o];
      option.is_answer = o == answer;

      std::vector<std::size_t> golds = gold_drafts[o];
      std::sort(golds.begin(), golds.end(),
                [&](std::size_t a, std::size_t b) { return position_of[a] < position_of[b]; });
      SentenceSet gold_positions;
      TokenList tokens;
      for (std::size_t g : golds) {
        gold_positions.push_back(position_of[g]);
        const auto& content = builder.draft(g).content;
        const std::size_t keep = std::max<std::size_t>(
            3, static_cast<std::size_t>(std::lround(spec.option_keep * static_cast<double>(content.size()))));
        for (std::size_t pos : draw.sample(content.size(), keep)) tokens.push_back(content_token(content[pos]));
      }
      std::sort(gold_positions.begin(), gold_positions.end());
      option.gold_evidence = gold_positions;

      std::size_t swaps = 0;
      if (polarity == Polarity::MostConsistent) {
        swaps = option.is_answer ? 0 : draw.between(1, 2);
      } else {
        swaps = option.is_answer ? 3 : draw.between(0, 1);
      }
      std::size_t synonyms = static_cast<std::size_t>(std::lround(paraphrase * static_cast<double>(tokens.size())));
      synonyms = std::min(synonyms, tokens.size() - swaps);
      auto positions = draw.sample(tokens.size(), synonyms + swaps);
      draw.shuffle(positions);
      for (std::size_t i = 0; i < positions.size(); ++i) {
        Token& token = tokens[positions[i]];
        token = i < swaps ? antonym_of(token) : synonym_of(token);
      }
      option.text_tokens = std::move(tokens);
    }
    validate_question(question, passage);
    passages.push_back(std::move(passage));
    questions.push_back(std::move(question));
  }
  return FixtureSuite{Dataset(std::move(passages), std::move(questions)), std::move(table)};
}

}  // namespace eic
