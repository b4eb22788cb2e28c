// Model-free scorer sidecar for tests. Speaks the JSON-lines protocol on
// stdin/stdout.
//
//   stub_scorer overlap        |query ∩ candidate| / |query| over distinct tokens
//   stub_scorer count          |query ∩ candidate|
//   stub_scorer crash-after N  answers N requests, then exits without replying
//   stub_scorer garbage        replies with a non-JSON line
//   stub_scorer wrong-id       replies with id + 1
//   stub_scorer short          drops the last score
//   stub_scorer hang           never replies

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include "json.hpp"

namespace {

std::set<std::string> token_set(const std::string& text) {
  std::istringstream in(text);
  std::set<std::string> out;
  for (std::string t; in >> t;) out.insert(t);
  return out;
}

double overlap(const std::set<std::string>& q, const std::set<std::string>& c) {
  double hits = 0;
  for (const auto& t : q) hits += c.count(t) ? 1 : 0;
  return hits;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "overlap";
  long remaining = mode == "crash-after" && argc > 2 ? std::atol(argv[2]) : -1;

  std::string line;
  while (std::getline(std::cin, line)) {
    nlohmann::json request;
    try {
      request = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      std::cout << nlohmann::json{{"id", nullptr}, {"error", e.what()}}.dump() << std::endl;
      continue;
    }
    if (remaining == 0) return 3;
    if (remaining > 0) --remaining;
    if (mode == "hang") {
      std::this_thread::sleep_for(std::chrono::hours(1));
    }
    if (mode == "garbage") {
      std::cout << "not json at all" << std::endl;
      continue;
    }

    const auto id = request.value("id", 0LL);
    const auto query = token_set(request.value("query", std::string()));
    nlohmann::json scores = nlohmann::json::array();
    for (const auto& candidate : request.value("candidates", nlohmann::json::array())) {
      const double hits = overlap(query, token_set(candidate.get<std::string>()));
      if (mode == "count") {
        scores.push_back(hits);
      } else {
        scores.push_back(query.empty() ? 0.0 : hits / static_cast<double>(query.size()));
      }
    }
    if (mode == "short" && !scores.empty()) scores.erase(scores.size() - 1);
    const long long reply_id = mode == "wrong-id" ? id + 1 : id;
    std::cout << nlohmann::json{{"id", reply_id}, {"scores", scores}}.dump() << std::endl;
  }
  return 0;
}
