#pragma once

// Client for an external model process speaking newline-delimited JSON over
// its standard input/output.
//
//   -> {"op":"hello","version":1}
//   <- {"op":"hello","version":1,"scorer_id":"..."}
//   -> {"op":"score","id":7,"text":"..."}
//   <- {"op":"score","id":7,"nll_per_token":2.31,"num_tokens":9}
//   -> {"op":"detect","id":8,"text":"..."}
//   <- {"op":"detect","id":8,"spans":[{"start_token":3,"end_token":4,"conf":0.97}]}
//   -> {"op":"correct","id":9,"text":"... <ocr> tlie </ocr> ..."}
//   <- {"op":"correct","id":9,"replacement":"the","score":0.998}
//
// Responses may arrive in any order; they are matched by id. The client
// serialises concurrent callers internally.

#include <chrono>
#include <cstdint>
#include <mutex>
#include <span>
#include <string>
#include <sys/types.h>
#include <vector>

#include "json.hpp"

namespace scanalign {

class ExternalClient {
 public:
  /// Spawns `command` via /bin/sh -c and performs the handshake.
  explicit ExternalClient(const std::string& command,
                          std::chrono::milliseconds timeout = std::chrono::seconds(60));
  ~ExternalClient();
  ExternalClient(const ExternalClient&) = delete;
  ExternalClient& operator=(const ExternalClient&) = delete;

  const std::string& scorer_id() const { return scorer_id_; }

  /// Sends one request per text with the given op and returns the response
  /// objects in input order. The whole batch must finish within the timeout.
  /// Throws ExternalScorerDied, ProtocolError or ExternalTimeout.
  std::vector<nlohmann::json> request(const std::string& op, std::span<const std::string> texts);

 private:
  void send_line(const std::string& line);
  std::string read_line(std::chrono::steady_clock::time_point deadline);

  pid_t pid_ = -1;
  int fd_ = -1;
  std::chrono::milliseconds timeout_;
  std::string buffer_;
  std::string scorer_id_;
  std::uint64_t next_id_ = 1;
  std::mutex mu_;
};

}  // namespace scanalign
