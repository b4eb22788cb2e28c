#pragma once

// Test-side generators and reference implementations. The reference code
// below works on plain std::vector data and never calls into the library
// routine it is checking.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "eic/corpus.hpp"
#include "eic/embed.hpp"
#include "eic/error.hpp"

namespace eic::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    return lo + (hi - lo) * static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }
  std::size_t between(std::size_t lo, std::size_t hi) { return lo + below(hi - lo + 1); }
  bool coin(double p = 0.5) { return uniform() < p; }
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * uniform());
  }
  std::vector<double> vec(std::size_t dim, double scale = 1.0) {
    std::vector<double> v(dim);
    for (double& x : v) x = scale * normal();
    return v;
  }
  template <typename T>
  const T& pick(const std::vector<T>& items) {
    return items[below(items.size())];
  }

 private:
  std::mt19937_64 engine_;
};

// Code of the eic::Error thrown by f, or "" when it returns normally.
inline std::string error_code(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

inline std::string error_message(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

using Embeddings = std::map<std::string, std::vector<double>>;

inline EmbeddingTable to_table(const Embeddings& vectors, std::size_t dim) {
  EmbeddingTable table(dim);
  for (const auto& [token, v] : vectors) table.add(token, v);
  return table;
}

inline std::vector<double> ref_embed(const Embeddings& vectors, const std::string& token, std::size_t dim) {
  auto it = vectors.find(token);
  return it == vectors.end() ? std::vector<double>(dim, 0.0) : it->second;
}

inline double ref_dot(const std::vector<double>& u, const std::vector<double>& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

inline double ref_cosine(const std::vector<double>& u, const std::vector<double>& v) {
  const double nu = std::sqrt(ref_dot(u, u));
  const double nv = std::sqrt(ref_dot(v, v));
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return ref_dot(u, v) / (nu * nv);
}

inline double ref_hinge_consistent(double pos, const std::vector<double>& negs, double margin) {
  double s = 0.0;
  for (double n : negs) s += std::max(0.0, n - pos + margin);
  return s;
}

inline double ref_hinge_contradictory(double neg, const std::vector<double>& poss, double margin) {
  double s = 0.0;
  for (double p : poss) s += std::max(0.0, neg - p + margin);
  return s;
}

inline std::vector<double> ref_softmax(const std::vector<double>& alpha, double lambda) {
  std::vector<double> e(alpha.size());
  double z = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    e[i] = std::exp(lambda * alpha[i]);
    z += e[i];
  }
  for (double& x : e) x /= z;
  return e;
}

// Returns beta, or an empty vector when every alpha is zero.
inline std::vector<double> ref_hard_beta(const std::vector<double>& alpha) {
  double z = 0.0;
  for (double a : alpha) z += a;
  if (z == 0.0) return {};
  std::vector<double> beta;
  for (double a : alpha) beta.push_back(a / z);
  return beta;
}

inline std::vector<double> ref_hard_alpha(const std::vector<std::string>& tokens, std::vector<double> alpha,
                                          const std::set<std::string>& evidence) {
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (evidence.count(tokens[i]) > 0) alpha[i] = 0.0;
  }
  return alpha;
}

inline std::vector<double> ref_soft_alpha(const std::vector<std::vector<double>>& query_vectors,
                                          const std::vector<double>& alpha,
                                          const std::vector<std::vector<double>>& evidence_vectors) {
  std::vector<double> out(alpha.size());
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    double best = ref_dot(query_vectors[i], evidence_vectors[0]);
    for (const auto& c : evidence_vectors) best = std::max(best, ref_dot(query_vectors[i], c));
    out[i] = -std::max(best, -alpha[i]);
  }
  return out;
}

inline std::vector<double> ref_compose(const std::vector<std::vector<double>>& vectors,
                                       const std::vector<double>& beta, std::size_t dim) {
  std::vector<double> q(dim, 0.0);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    for (std::size_t d = 0; d < dim; ++d) q[d] += beta[i] * vectors[i][d];
  }
  return q;
}

inline std::vector<double> ref_mean(const Embeddings& vectors, const std::vector<std::string>& tokens,
                                    std::size_t dim) {
  std::vector<double> m(dim, 0.0);
  for (const auto& t : tokens) {
    const auto v = ref_embed(vectors, t, dim);
    for (std::size_t d = 0; d < dim; ++d) m[d] += v[d];
  }
  for (double& x : m) x /= static_cast<double>(tokens.size());
  return m;
}

enum class RefUpdate { Hard, Soft, Append };

struct RefChain {
  std::vector<std::size_t> indices;
  double score = 0.0;
};

// Every ordered chain of distinct sentences up to `max_steps` long, scored as
// the sum of per-step cosines between the current weighted query and the
// sentence mean. Hard-masked chains whose query has no weight left are not
// extended. Result: grouped by length, then score descending, then indices.
inline std::vector<RefChain> enumerate_chains(const std::vector<std::string>& option,
                                              const std::vector<std::vector<std::string>>& sentences,
                                              const Embeddings& vectors, std::size_t dim,
                                              RefUpdate update, std::size_t max_steps, double lambda) {
  struct State {
    std::vector<std::string> tokens;
    std::vector<double> alpha;
  };
  auto beta_of = [&](const State& s) {
    return update == RefUpdate::Soft ? ref_softmax(s.alpha, lambda) : ref_hard_beta(s.alpha);
  };
  auto step_score = [&](const State& s, std::size_t idx) {
    std::vector<std::vector<double>> qv;
    for (const auto& t : s.tokens) qv.push_back(ref_embed(vectors, t, dim));
    return ref_cosine(ref_compose(qv, beta_of(s), dim), ref_mean(vectors, sentences[idx], dim));
  };
  auto next_state = [&](const State& s, std::size_t idx) {
    State n = s;
    const auto& sent = sentences[idx];
    if (update == RefUpdate::Hard) {
      n.alpha = ref_hard_alpha(s.tokens, s.alpha, std::set<std::string>(sent.begin(), sent.end()));
    } else if (update == RefUpdate::Soft) {
      std::vector<std::vector<double>> qv, cv;
      for (const auto& t : s.tokens) qv.push_back(ref_embed(vectors, t, dim));
      for (const auto& t : sent) cv.push_back(ref_embed(vectors, t, dim));
      n.alpha = ref_soft_alpha(qv, s.alpha, cv);
    } else {
      n.tokens.insert(n.tokens.end(), sent.begin(), sent.end());
      n.alpha.assign(n.tokens.size(), 1.0);
    }
    return n;
  };

  std::vector<std::vector<RefChain>> by_length(max_steps + 1);
  struct Frame {
    RefChain chain;
    State state;
  };
  State root{option, std::vector<double>(option.size(), update == RefUpdate::Soft ? 0.0 : 1.0)};
  std::vector<Frame> frontier{{RefChain{}, root}};
  for (std::size_t len = 1; len <= max_steps; ++len) {
    std::vector<Frame> next;
    for (const auto& f : frontier) {
      if (update == RefUpdate::Hard && ref_hard_beta(f.state.alpha).empty()) continue;
      for (std::size_t idx = 0; idx < sentences.size(); ++idx) {
        if (std::find(f.chain.indices.begin(), f.chain.indices.end(), idx) != f.chain.indices.end()) continue;
        Frame g;
        g.chain = f.chain;
        g.chain.indices.push_back(idx);
        g.chain.score = f.chain.score + step_score(f.state, idx);
        g.state = next_state(f.state, idx);
        by_length[len].push_back(g.chain);
        next.push_back(std::move(g));
      }
    }
    frontier = std::move(next);
  }
  std::vector<RefChain> out;
  for (auto& group : by_length) {
    std::sort(group.begin(), group.end(), [](const RefChain& a, const RefChain& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.indices < b.indices;
    });
    out.insert(out.end(), group.begin(), group.end());
  }
  return out;
}

// True when `got` lists the same chains as `want` position by position, except
// that chains whose reference scores agree within `tie` may appear in any
// order inside their block. Scores must match within `tol`.
template <typename Chains>
bool same_ranking(const Chains& got, const std::vector<RefChain>& want, double tol = 1e-9, double tie = 1e-12) {
  if (got.size() != want.size()) return false;
  for (std::size_t start = 0; start < want.size();) {
    std::size_t end = start + 1;
    while (end < want.size() && want[end].indices.size() == want[start].indices.size() &&
           std::abs(want[end].score - want[start].score) <= tie) {
      ++end;
    }
    std::vector<std::vector<std::size_t>> a, b;
    for (std::size_t i = start; i < end; ++i) {
      if (std::abs(got[i].score - want[i].score) > tol) return false;
      a.push_back(got[i].sentence_indices);
      b.push_back(want[i].indices);
    }
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b) return false;
    start = end;
  }
  return true;
}

// Number of ordered chains of length 1..max_steps over n sentences.
inline std::size_t ordered_chain_count(std::size_t n, std::size_t max_steps) {
  std::size_t total = 0, run = 1;
  for (std::size_t len = 1; len <= max_steps && len <= n; ++len) {
    run *= n - len + 1;
    total += run;
  }
  return total;
}

// Small random passage and option over a shared vocabulary with a few
// out-of-vocabulary tokens mixed in.
struct RandomCase {
  std::vector<std::string> option;
  std::vector<std::vector<std::string>> sentences;
  Embeddings vectors;
  std::size_t dim = 0;
};

inline RandomCase random_case(Gen& gen, std::size_t max_sentences = 6) {
  RandomCase c;
  c.dim = gen.between(2, 6);
  const std::size_t vocab = gen.between(4, 12);
  std::vector<std::string> words;
  for (std::size_t i = 0; i < vocab; ++i) {
    words.push_back("v" + std::to_string(i));
    c.vectors[words.back()] = gen.vec(c.dim);
  }
  words.push_back("oov");
  const std::size_t n = gen.between(1, max_sentences);
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<std::string> sentence;
    const std::size_t len = gen.between(1, 4);
    for (std::size_t t = 0; t < len; ++t) sentence.push_back(gen.pick(words));
    c.sentences.push_back(std::move(sentence));
  }
  const std::size_t olen = gen.between(1, 5);
  for (std::size_t t = 0; t < olen; ++t) c.option.push_back(gen.pick(words));
  return c;
}

inline Passage to_passage(const RandomCase& c, std::string id = "p") {
  Passage p;
  p.id = std::move(id);
  p.sentences = c.sentences;
  return p;
}

}  // namespace eic::testing
