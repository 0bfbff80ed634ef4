#include "scanalign/external.hpp"

#include <cerrno>
#include <cstring>
#include <map>

#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include "scanalign/errors.hpp"

namespace scanalign {

using nlohmann::json;

ExternalClient::ExternalClient(const std::string& command, std::chrono::milliseconds timeout) : timeout_(timeout) {
  int sv[2];
  if (socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0)
    throw ExternalScorerDied(std::string("socketpair failed: ") + std::strerror(errno));
  pid_ = fork();
  if (pid_ < 0) {
    close(sv[0]);
    close(sv[1]);
    throw ExternalScorerDied(std::string("fork failed: ") + std::strerror(errno));
  }
  if (pid_ == 0) {
    dup2(sv[1], STDIN_FILENO);
    dup2(sv[1], STDOUT_FILENO);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(sv[1]);
  fd_ = sv[0];

  try {
    send_line(json{{"op", "hello"}, {"version", 1}}.dump());
    const std::string line = read_line(std::chrono::steady_clock::now() + timeout_);
    json reply;
    try {
      reply = json::parse(line);
    } catch (const json::exception&) {
      throw ProtocolError("malformed handshake reply: " + line);
    }
    if (!reply.is_object() || reply.value("op", "") != "hello" || reply.value("version", 0) != 1)
      throw ProtocolError("unexpected handshake reply: " + line);
    scorer_id_ = reply.value("scorer_id", "external");
  } catch (...) {
    close(fd_);
    fd_ = -1;
    kill(pid_, SIGKILL);
    waitpid(pid_, nullptr, 0);
    pid_ = -1;
    throw;
  }
}

ExternalClient::~ExternalClient() {
  if (fd_ >= 0) {
    shutdown(fd_, SHUT_WR);
    close(fd_);
  }
  if (pid_ > 0) {
    // Give the child a moment to exit on EOF before killing it.
    for (int i = 0; i < 50; ++i) {
      if (waitpid(pid_, nullptr, WNOHANG) == pid_) return;
      usleep(10000);
    }
    kill(pid_, SIGKILL);
    waitpid(pid_, nullptr, 0);
  }
}

void ExternalClient::send_line(const std::string& line) {
  std::string data = line;
  data.push_back('\n');
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = send(fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ExternalScorerDied("external model process closed its input");
    }
    off += static_cast<std::size_t>(n);
  }
}

std::string ExternalClient::read_line(std::chrono::steady_clock::time_point deadline) {
  while (true) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) throw ExternalTimeout("external model process timed out");
    pollfd pfd{fd_, POLLIN, 0};
    const int rc = poll(&pfd, 1, static_cast<int>(left.count()));
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw ExternalScorerDied(std::string("poll failed: ") + std::strerror(errno));
    }
    if (rc == 0) throw ExternalTimeout("external model process timed out");
    char chunk[4096];
    const ssize_t n = recv(fd_, chunk, sizeof chunk, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ExternalScorerDied(std::string("read failed: ") + std::strerror(errno));
    }
    if (n == 0) throw ExternalScorerDied("external model process exited");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

std::vector<json> ExternalClient::request(const std::string& op, std::span<const std::string> texts) {
  std::lock_guard lock(mu_);
  // Bounded pipelining keeps both socket buffers from filling up.
  constexpr std::size_t kWindow = 32;
  std::map<std::uint64_t, std::size_t> pending;
  std::vector<json> out(texts.size());
  std::size_t sent = 0;
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  while (sent < texts.size() || !pending.empty()) {
    while (sent < texts.size() && pending.size() < kWindow) {
      const std::uint64_t id = next_id_++;
      pending.emplace(id, sent);
      send_line(json{{"op", op}, {"id", id}, {"text", texts[sent]}}.dump());
      ++sent;
    }
    const std::string line = read_line(deadline);
    json reply;
    try {
      reply = json::parse(line);
    } catch (const json::exception&) {
      throw ProtocolError("malformed response line: " + line);
    }
    if (!reply.is_object() || !reply.contains("id") || !reply["id"].is_number_unsigned())
      throw ProtocolError("response without id: " + line);
    const auto id = reply["id"].get<std::uint64_t>();
    const std::string rop = reply.value("op", "");
    if (rop == "error") throw ProtocolError("external model reported an error: " + reply.value("message", line));
    if (rop != op) throw ProtocolError("response op mismatch: " + line);
    auto it = pending.find(id);
    if (it == pending.end()) throw ProtocolError("response for unknown id: " + line);
    out[it->second] = std::move(reply);
    pending.erase(it);
  }
  return out;
}

}  // namespace scanalign
