#include "eic/embed.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "eic/error.hpp"

namespace eic {

EmbeddingTable::EmbeddingTable(std::size_t dim) : dim_(dim), zero_(dim, 0.0) {
  if (dim == 0) throw Error("embedding", "embedding dimension must be positive");
}

bool EmbeddingTable::contains(std::string_view token) const {
  return index_.count(std::string(token)) > 0;
}

std::span<const double> EmbeddingTable::lookup(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return zero_;
  return std::span<const double>(data_).subspan(it->second * dim_, dim_);
}

void EmbeddingTable::add(const Token& token, std::span<const double> vector) {
  if (vector.size() != dim_) {
    throw Error("embedding", "vector for '" + token + "' has length " +
                                 std::to_string(vector.size()) + ", expected " +
                                 std::to_string(dim_));
  }
  if (!index_.emplace(token, tokens_.size()).second) {
    throw Error("embedding", "duplicate embedding for token '" + token + "'");
  }
  tokens_.push_back(token);
  data_.insert(data_.end(), vector.begin(), vector.end());
}

namespace {

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r')) ++pos;
    std::size_t end = pos;
    while (end < line.size() && line[end] != ' ' && line[end] != '\t' && line[end] != '\r') ++end;
    if (end > pos) fields.push_back(line.substr(pos, end - pos));
    pos = end;
  }
  return fields;
}

bool parse_size(std::string_view text, std::size_t& out) {
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

double parse_component(std::string_view text, std::size_t line) {
  std::string buffer(text);
  char* end = nullptr;
  double value = std::strtod(buffer.c_str(), &end);
  if (end != buffer.c_str() + buffer.size() || !std::isfinite(value)) {
    throw Error("embedding", "line " + std::to_string(line) + ": bad vector component '" + buffer + "'");
  }
  return value;
}

}  // namespace

EmbeddingTable parse_embeddings(std::istream& in) {
  std::string text;
  std::size_t line = 0;
  std::size_t declared_count = 0;
  bool has_header = false;
  std::vector<std::pair<std::string, std::vector<double>>> rows;
  std::size_t dim = 0;

  while (std::getline(in, text)) {
    ++line;
    auto fields = split_spaces(text);
    if (fields.empty()) continue;
    if (line == 1 && fields.size() == 2) {
      std::size_t count = 0, header_dim = 0;
      if (parse_size(fields[0], count) && parse_size(fields[1], header_dim) && header_dim > 0) {
        has_header = true;
        declared_count = count;
        dim = header_dim;
        continue;
      }
    }
    if (fields.size() < 2) {
      throw Error("embedding", "line " + std::to_string(line) + ": expected token followed by vector");
    }
    if (dim == 0) dim = fields.size() - 1;
    if (fields.size() - 1 != dim) {
      throw Error("embedding", "line " + std::to_string(line) + ": expected " + std::to_string(dim) +
                                   " components, found " + std::to_string(fields.size() - 1));
    }
    std::vector<double> vec;
    vec.reserve(dim);
    for (std::size_t i = 1; i < fields.size(); ++i) vec.push_back(parse_component(fields[i], line));
    rows.emplace_back(std::string(fields[0]), std::move(vec));
  }
  if (has_header && declared_count != rows.size()) {
    throw Error("embedding", "header declares " + std::to_string(declared_count) + " vectors, found " +
                                 std::to_string(rows.size()));
  }
  if (dim == 0) throw Error("embedding", "embedding file has no vectors and no header");
  EmbeddingTable table(dim);
  for (const auto& [token, vec] : rows) table.add(token, vec);
  return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open embeddings file '" + path.string() + "'");
  return parse_embeddings(in);
}

void write_embeddings(const EmbeddingTable& table, std::ostream& out) {
  out << table.size() << ' ' << table.dim() << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& token : table.tokens()) {
    out << token;
    for (double v : table.lookup(token)) out << ' ' << v;
    out << '\n';
  }
}

void write_embeddings(const EmbeddingTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot write embeddings file '" + path.string() + "'");
  write_embeddings(table, out);
}

WeightedQuery init_query(const TokenList& tokens, WeightMode mode, double lambda) {
  if (tokens.empty()) throw Error("query", "query needs at least one token");
  if (!(lambda > 0.0)) throw Error("query", "lambda must be positive");
  WeightedQuery query;
  query.tokens = tokens;
  query.mode = mode;
  query.lambda = lambda;
  query.alpha.assign(tokens.size(), mode == WeightMode::Hard ? 1.0 : 0.0);
  normalize_weights(query);
  return query;
}

void normalize_weights(WeightedQuery& query) {
  const std::size_t n = query.alpha.size();
  query.beta.assign(n, 0.0);
  query.coverage_complete = false;
  if (query.mode == WeightMode::Hard) {
    double total = 0.0;
    for (double a : query.alpha) total += a;
    if (total <= 0.0) {
      query.coverage_complete = true;
      return;
    }
    for (std::size_t i = 0; i < n; ++i) query.beta[i] = query.alpha[i] / total;
    return;
  }
  double peak = -std::numeric_limits<double>::infinity();
  for (double a : query.alpha) peak = std::max(peak, query.lambda * a);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    query.beta[i] = std::exp(query.lambda * query.alpha[i] - peak);
    total += query.beta[i];
  }
  for (double& b : query.beta) b /= total;
}

Vector compose_query(const WeightedQuery& query, const EmbeddingTable& table) {
  if (query.coverage_complete) {
    throw Error("coverage_complete", "every query token is already covered; extraction should stop");
  }
  Vector out(table.dim(), 0.0);
  for (std::size_t i = 0; i < query.tokens.size(); ++i) {
    if (query.beta[i] == 0.0) continue;
    auto v = table.lookup(query.tokens[i]);
    for (std::size_t d = 0; d < out.size(); ++d) out[d] += query.beta[i] * v[d];
  }
  return out;
}

Vector sentence_vector(std::span<const Token> sentence, const EmbeddingTable& table) {
  if (sentence.empty()) throw Error("query", "cannot embed an empty sentence");
  Vector out(table.dim(), 0.0);
  for (const auto& token : sentence) {
    auto v = table.lookup(token);
    for (std::size_t d = 0; d < out.size(); ++d) out[d] += v[d];
  }
  const double n = static_cast<double>(sentence.size());
  for (double& x : out) x /= n;
  return out;
}

double dot(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw Error("dimension", "vector length mismatch: " + std::to_string(u.size()) + " vs " +
                                 std::to_string(v.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

}  // namespace eic
