#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>

#include "eic/scorers.hpp"
#include "json.hpp"

namespace eic {

using nlohmann::json;

ExternalScorer::ExternalScorer(std::string command, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout) {
  start();
}

ExternalScorer::~ExternalScorer() { stop(); }

void ExternalScorer::start() {
  int sv[2];
  if (socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0) {
    throw ScorerError(std::string("socketpair failed: ") + std::strerror(errno), "");
  }
  pid_t pid = fork();
  if (pid < 0) {
    close(sv[0]);
    close(sv[1]);
    throw ScorerError(std::string("fork failed: ") + std::strerror(errno), "");
  }
  if (pid == 0) {
    // Child: the socket becomes both stdin and stdout. Its own process group
    // lets stop() reach anything the shell spawns.
    setpgid(0, 0);
    dup2(sv[1], STDIN_FILENO);
    dup2(sv[1], STDOUT_FILENO);
    execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  setpgid(pid, pid);
  close(sv[1]);
  pid_ = pid;
  fd_ = sv[0];
}

void ExternalScorer::stop() {
  if (fd_ >= 0) {
    close(fd_);
    fd_ = -1;
  }
  if (pid_ > 0) {
    kill(-pid_, SIGTERM);
    int status = 0;
    while (waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
    }
    pid_ = -1;
  }
  pending_.clear();
}

std::string ExternalScorer::read_line() {
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  for (;;) {
    if (auto nl = pending_.find('\n'); nl != std::string::npos) {
      std::string line = pending_.substr(0, nl);
      pending_.erase(0, nl + 1);
      return line;
    }
    auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) {
      std::string partial = pending_;
      stop();
      throw ScorerError("timed out waiting for sidecar reply", partial);
    }
    pollfd pfd{fd_, POLLIN, 0};
    int ready = poll(&pfd, 1, static_cast<int>(remaining.count()));
    if (ready < 0) {
      if (errno == EINTR) continue;
      std::string partial = pending_;
      stop();
      throw ScorerError(std::string("poll failed: ") + std::strerror(errno), partial);
    }
    if (ready == 0) continue;
    char buf[4096];
    ssize_t n = recv(fd_, buf, sizeof(buf), 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      std::string partial = pending_;
      stop();
      throw ScorerError("sidecar closed the connection", partial);
    }
    pending_.append(buf, static_cast<std::size_t>(n));
  }
}

std::vector<double> ExternalScorer::score(std::string_view query,
                                          std::span<const std::string> candidates) {
  if (!alive()) throw ScorerError("sidecar is not running", "");
  const long long id = next_id_++;
  json request = {{"id", id}, {"query", std::string(query)}, {"candidates", json::array()}};
  for (const auto& c : candidates) request["candidates"].push_back(c);
  std::string line = request.dump() + "\n";

  std::size_t sent = 0;
  while (sent < line.size()) {
    ssize_t n = send(fd_, line.data() + sent, line.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      stop();
      throw ScorerError(std::string("cannot write to sidecar: ") + std::strerror(errno), "");
    }
    sent += static_cast<std::size_t>(n);
  }

  std::string reply = read_line();
  json response;
  try {
    response = json::parse(reply);
  } catch (const json::parse_error&) {
    stop();
    throw ScorerError("malformed sidecar reply", reply);
  }
  if (!response.is_object()) {
    stop();
    throw ScorerError("malformed sidecar reply", reply);
  }
  if (auto err = response.find("error"); err != response.end()) {
    throw ScorerError("sidecar reported an error: " + err->dump(), reply);
  }
  auto rid = response.find("id");
  if (rid == response.end() || !rid->is_number_integer() || rid->get<long long>() != id) {
    stop();
    throw ScorerError("sidecar reply id does not match request " + std::to_string(id), reply);
  }
  auto scores = response.find("scores");
  if (scores == response.end() || !scores->is_array() || scores->size() != candidates.size()) {
    throw ScorerError("sidecar reply must carry one score per candidate", reply);
  }
  std::vector<double> out;
  out.reserve(scores->size());
  for (const auto& s : *scores) {
    if (!s.is_number() || !std::isfinite(s.get<double>())) {
      throw ScorerError("sidecar returned a non-finite score", reply);
    }
    out.push_back(s.get<double>());
  }
  return out;
}

std::vector<double> ExternalScorer::score_sentences(const WeightedQuery& query, const Passage& passage,
                                                    std::span<const std::size_t> indices) {
  if (query.coverage_complete) {
    throw Error("coverage_complete", "every query token is already covered; extraction should stop");
  }
  TokenList active;
  for (std::size_t i = 0; i < query.tokens.size(); ++i) {
    if (query.beta[i] > 0.0) active.push_back(query.tokens[i]);
  }
  std::vector<std::string> texts;
  texts.reserve(indices.size());
  for (std::size_t idx : indices) texts.push_back(join_tokens(passage.sentences.at(idx)));
  return score(join_tokens(active), texts);
}

std::vector<double> ExternalScorer::score_texts(std::span<const Token> query,
                                                std::span<const TokenList> candidates) {
  std::vector<std::string> texts;
  texts.reserve(candidates.size());
  for (const auto& c : candidates) texts.push_back(join_tokens(c));
  return score(join_tokens(query), texts);
}

}  // namespace eic
