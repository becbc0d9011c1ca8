// Copyright 2026 The stoktok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <memory>
#include <mutex>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <netdb.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "json.hpp"
#include "stoktok/error.hpp"
#include "stoktok/random.hpp"
#include "stoktok/vocab.hpp"

namespace stoktok {

// Log-probability of a continuation given a context. Implementations must be
// deterministic and return finite values <= 0. Those that cannot take
// concurrent calls report single_flight() and the harness serialises them.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual double score(std::span<const TokenId> context, std::span<const TokenId> continuation) const = 0;
  virtual bool single_flight() const { return false; }
};

class ConstantScorer : public Scorer {
 public:
  explicit ConstantScorer(double value = -1.0) : value_(value) {}
  double score(std::span<const TokenId>, std::span<const TokenId>) const override { return value_; }

 private:
  double value_;
};

// Favoured continuations score -lambda * |context|; every other continuation
// scores -lambda * threshold. The favoured answer therefore wins exactly while
// the context has fewer than `threshold` tokens.
class LengthPenaltyScorer : public Scorer {
 public:
  LengthPenaltyScorer(std::set<std::vector<TokenId>> favoured, double lambda, double threshold)
      : favoured_(std::move(favoured)), lambda_(lambda), threshold_(threshold) {}

  double score(std::span<const TokenId> context, std::span<const TokenId> continuation) const override {
    const std::vector<TokenId> key(continuation.begin(), continuation.end());
    if (favoured_.contains(key)) return -lambda_ * static_cast<double>(context.size());
    return -lambda_ * threshold_;
  }

 private:
  std::set<std::vector<TokenId>> favoured_;
  double lambda_;
  double threshold_;
};

// Mean of seeded hashes over context bigrams, keyed by the continuation. Gives
// a rugged but reproducible landscape over tokenisations.
class HashNgramScorer : public Scorer {
 public:
  explicit HashNgramScorer(std::uint64_t seed) : seed_(seed) {}

  double score(std::span<const TokenId> context, std::span<const TokenId> continuation) const override {
    std::uint64_t ch = splitmix64(seed_ ^ 0xC0FFEEULL);
    for (TokenId t : continuation) ch = splitmix64(ch ^ t);
    double sum = 0.0;
    TokenId prev = 0xFFFFFFFFu;
    for (TokenId t : context) {
      const std::uint64_t h = splitmix64(ch ^ (static_cast<std::uint64_t>(prev) << 32 | t));
      sum += static_cast<double>(h >> 11) * 0x1.0p-53;
      prev = t;
    }
    return -sum / static_cast<double>(context.size() + 1);
  }

 private:
  std::uint64_t seed_;
};

enum class ToyScorerKind { constant, length_penalty, hash_ngram };

struct ToyScorerOptions {
  std::set<std::vector<TokenId>> favoured;  // length-penalty only
  double lambda = 1.0;
  double threshold = 16.0;
};

inline std::unique_ptr<Scorer> toy_scorer(ToyScorerKind kind, std::uint64_t seed,
                                          const ToyScorerOptions& opts = {}) {
  switch (kind) {
    case ToyScorerKind::constant: return std::make_unique<ConstantScorer>(-1.0);
    case ToyScorerKind::length_penalty:
      return std::make_unique<LengthPenaltyScorer>(opts.favoured, opts.lambda, opts.threshold);
    case ToyScorerKind::hash_ngram: return std::make_unique<HashNgramScorer>(seed);
  }
  throw InputError("unknown toy scorer");
}

inline ToyScorerKind parse_toy_kind(std::string_view s) {
  if (s == "constant") return ToyScorerKind::constant;
  if (s == "length-penalty") return ToyScorerKind::length_penalty;
  if (s == "hash-ngram") return ToyScorerKind::hash_ngram;
  throw InputError("unknown toy scorer '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Line protocol: request {"context": [ids], "continuation": [ids]}\n,
// response {"logprob": float}\n.
// ---------------------------------------------------------------------------

inline std::string encode_score_request(std::span<const TokenId> context, std::span<const TokenId> continuation) {
  nlohmann::json j;
  j["context"] = std::vector<TokenId>(context.begin(), context.end());
  j["continuation"] = std::vector<TokenId>(continuation.begin(), continuation.end());
  return j.dump();
}

inline double decode_score_response(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    throw TransportError("scorer response is not JSON: " + std::string(line));
  }
  if (!j.is_object() || !j.contains("logprob") || !j["logprob"].is_number()) {
    throw TransportError("scorer response lacks numeric 'logprob': " + std::string(line));
  }
  const double v = j["logprob"].get<double>();
  if (!std::isfinite(v)) throw TransportError("scorer returned a non-finite logprob");
  return v;
}

namespace detail {

// Request/response over a pair of file descriptors. Not thread-safe; callers
// lock.
class LineChannel {
 public:
  LineChannel() = default;
  LineChannel(int read_fd, int write_fd) : read_fd_(read_fd), write_fd_(write_fd) {}

  std::string roundtrip(const std::string& request) {
    std::string msg = request + '\n';
    std::size_t off = 0;
    while (off < msg.size()) {
      const ssize_t n = ::write(write_fd_, msg.data() + off, msg.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError(std::string("scorer write failed: ") + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
    for (;;) {
      if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      char chunk[4096];
      const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) throw TransportError("scorer closed the connection");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  int read_fd_ = -1;
  int write_fd_ = -1;
  std::string buffer_;
};

}  // namespace detail

// Spawns `/bin/sh -c command` and talks to it over stdin/stdout. SIGPIPE is
// ignored process-wide so a dead child surfaces as a TransportError.
class ProcessScorer : public Scorer {
 public:
  explicit ProcessScorer(const std::string& command) {
    std::signal(SIGPIPE, SIG_IGN);
    int to_child[2];
    int from_child[2];
    if (::pipe(to_child) != 0 || ::pipe(from_child) != 0) throw TransportError("pipe() failed");
    pid_ = ::fork();
    if (pid_ < 0) throw TransportError("fork() failed");
    if (pid_ == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
    channel_ = detail::LineChannel(read_fd_, write_fd_);
  }

  ProcessScorer(const ProcessScorer&) = delete;
  ProcessScorer& operator=(const ProcessScorer&) = delete;

  ~ProcessScorer() override {
    if (write_fd_ >= 0) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    if (pid_ > 0) {
      int status = 0;
      ::waitpid(pid_, &status, 0);
    }
  }

  double score(std::span<const TokenId> context, std::span<const TokenId> continuation) const override {
    std::lock_guard lock(mu_);
    return decode_score_response(channel_.roundtrip(encode_score_request(context, continuation)));
  }

  bool single_flight() const override { return true; }

 private:
  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  mutable std::mutex mu_;
  mutable detail::LineChannel channel_;
};

// Same protocol over a TCP connection to host:port.
class TcpScorer : public Scorer {
 public:
  TcpScorer(const std::string& host, const std::string& port) {
    std::signal(SIGPIPE, SIG_IGN);
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), port.c_str(), &hints, &res) != 0) {
      throw TransportError("cannot resolve scorer address " + host + ":" + port);
    }
    for (addrinfo* p = res; p; p = p->ai_next) {
      fd_ = ::socket(p->ai_family, p->ai_socktype, p->ai_protocol);
      if (fd_ < 0) continue;
      if (::connect(fd_, p->ai_addr, p->ai_addrlen) == 0) break;
      ::close(fd_);
      fd_ = -1;
    }
    ::freeaddrinfo(res);
    if (fd_ < 0) throw TransportError("cannot connect to scorer at " + host + ":" + port);
    channel_ = detail::LineChannel(fd_, fd_);
  }

  TcpScorer(const TcpScorer&) = delete;
  TcpScorer& operator=(const TcpScorer&) = delete;

  ~TcpScorer() override {
    if (fd_ >= 0) ::close(fd_);
  }

  double score(std::span<const TokenId> context, std::span<const TokenId> continuation) const override {
    std::lock_guard lock(mu_);
    return decode_score_response(channel_.roundtrip(encode_score_request(context, continuation)));
  }

  bool single_flight() const override { return true; }

 private:
  int fd_ = -1;
  mutable std::mutex mu_;
  mutable detail::LineChannel channel_;
};

// "tcp://host:port" connects over TCP; anything else is a shell command.
inline std::unique_ptr<Scorer> connect_scorer(std::string_view target) {
  constexpr std::string_view tcp = "tcp://";
  if (target.substr(0, tcp.size()) == tcp) {
    const std::string rest(target.substr(tcp.size()));
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos) throw InputError("tcp scorer address needs host:port");
    return std::make_unique<TcpScorer>(rest.substr(0, colon), rest.substr(colon + 1));
  }
  return std::make_unique<ProcessScorer>(std::string(target));
}

}  // namespace stoktok
