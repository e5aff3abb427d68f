#include "mfals/adapter.hpp"

#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <thread>

#include <nlohmann/json.hpp>

#include "mfals/error.hpp"
#include "mfals/log.hpp"

namespace mfals {

namespace {

using Clock = std::chrono::steady_clock;

std::string describe_status(int status) {
  if (WIFEXITED(status)) return "exited with status " + std::to_string(WEXITSTATUS(status));
  if (WIFSIGNALED(status)) return "killed by signal " + std::to_string(WTERMSIG(status));
  return "stopped";
}

}  // namespace

AdapterProcess::AdapterProcess(const std::string& command, double timeout_seconds)
    : timeout_(static_cast<long long>(timeout_seconds * 1000.0)) {
  if (!(timeout_seconds > 0.0)) throw ValidationError("adapter timeout must be positive");
  int fds[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0) {
    throw AdapterCrashError(std::string("socketpair failed: ") + std::strerror(errno));
  }
  pid_ = ::fork();
  if (pid_ < 0) {
    ::close(fds[0]);
    ::close(fds[1]);
    throw AdapterCrashError(std::string("fork failed: ") + std::strerror(errno));
  }
  if (pid_ == 0) {
    ::dup2(fds[1], STDIN_FILENO);
    ::dup2(fds[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(fds[1]);
  fd_ = fds[0];

  nlohmann::json hello;
  const std::string line = read_line();
  try {
    hello = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    shutdown();
    throw ProtocolError("adapter handshake is not JSON: " + line);
  }
  if (!hello.is_object() || !hello.contains("ready") || hello["ready"] != true ||
      !hello.contains("inputs") || !hello["inputs"].is_array()) {
    shutdown();
    throw ProtocolError("adapter handshake must be {\"ready\":true,\"inputs\":[...]}, got " + line);
  }
  for (const auto& name : hello["inputs"]) {
    if (!name.is_string()) {
      shutdown();
      throw ProtocolError("adapter handshake inputs must be strings");
    }
    inputs_.push_back(name.get<std::string>());
  }
  logging::logger()->debug("adapter '{}' ready (pid {})", command, pid_);
}

AdapterProcess::~AdapterProcess() { shutdown(); }

void AdapterProcess::shutdown() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
  if (pid_ > 0) {
    int status = 0;
    const auto deadline = Clock::now() + std::chrono::seconds(2);
    while (::waitpid(pid_, &status, WNOHANG) == 0) {
      if (Clock::now() > deadline) {
        ::kill(pid_, SIGKILL);
        ::waitpid(pid_, &status, 0);
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    pid_ = -1;
  }
}

void AdapterProcess::crashed(const std::string& context) {
  std::string how = "closed its output";
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
  if (pid_ > 0) {
    int status = 0;
    const auto deadline = Clock::now() + std::chrono::seconds(2);
    pid_t r = 0;
    while ((r = ::waitpid(pid_, &status, WNOHANG)) == 0 && Clock::now() < deadline) {
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    if (r == 0) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, &status, 0);
      how = "stopped responding and was killed";
    } else if (r > 0) {
      how = describe_status(status);
    }
    pid_ = -1;
  }
  throw AdapterCrashError("adapter " + how + " (" + context + ")");
}

std::string AdapterProcess::read_line() {
  if (fd_ < 0) throw AdapterCrashError("adapter is not running");
  const auto deadline = Clock::now() + timeout_;
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      return line;
    }
    const auto left =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    if (left <= 0) {
      shutdown();
      throw EvaluationError("adapter timed out after " +
                            std::to_string(timeout_.count() / 1000.0) + " s");
    }
    pollfd pfd{fd_, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(left, 1 << 30)));
    if (rc < 0) {
      if (errno == EINTR) continue;
      crashed(std::string("poll failed: ") + std::strerror(errno));
    }
    if (rc == 0) continue;
    char chunk[4096];
    const ssize_t got = ::read(fd_, chunk, sizeof chunk);
    if (got < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      crashed(std::string("read failed: ") + std::strerror(errno));
    }
    if (got == 0) crashed("end of output");
    buffer_.append(chunk, static_cast<std::size_t>(got));
  }
}

void AdapterProcess::write_line(const std::string& line) {
  if (fd_ < 0) throw AdapterCrashError("adapter is not running");
  std::string data = line + "\n";
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t put = ::send(fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (put < 0) {
      if (errno == EINTR) continue;
      crashed(std::string("write failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(put);
  }
}

double AdapterProcess::request(std::span<const std::string> names, std::span<const double> values) {
  if (names.size() != values.size()) throw ValidationError("adapter request names/values differ");
  const std::uint64_t id = next_id_++;
  nlohmann::json req;
  req["id"] = id;
  req["params"] = nlohmann::json::object();
  for (std::size_t i = 0; i < names.size(); ++i) req["params"][names[i]] = values[i];
  write_line(req.dump());

  const std::string line = read_line();
  nlohmann::json resp;
  try {
    resp = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    throw ProtocolError("adapter response is not JSON: " + line);
  }
  if (!resp.is_object() || !resp.contains("id") || !resp["id"].is_number_unsigned()) {
    throw ProtocolError("adapter response lacks an unsigned id: " + line);
  }
  const auto got = resp["id"].get<std::uint64_t>();
  if (got != id) {
    throw ProtocolError("adapter response id " + std::to_string(got) + " does not match request " +
                        std::to_string(id));
  }
  if (resp.contains("error")) {
    const auto& e = resp["error"];
    throw EvaluationError(e.is_string() ? e.get<std::string>() : e.dump());
  }
  if (!resp.contains("value") || !resp["value"].is_number()) {
    throw ProtocolError("adapter response has neither a numeric value nor an error: " + line);
  }
  const double v = resp["value"].get<double>();
  if (!std::isfinite(v)) throw EvaluationError("adapter returned a non-finite value");
  return v;
}

ExternalEvaluator::ExternalEvaluator(const std::string& command, std::vector<std::string> inputs,
                                     AdapterOptions options)
    : ModelEvaluator(std::move(inputs)),
      process_(command, options.timeout_seconds),
      options_(options) {
  const auto& announced = process_.inputs();
  for (const auto& name : this->inputs()) {
    if (std::find(announced.begin(), announced.end(), name) == announced.end()) {
      throw ProtocolError("adapter does not declare input '" + name + "'");
    }
  }
}

double ExternalEvaluator::do_evaluate(std::span<const double> x) {
  const double v = process_.request(inputs(), x);
  ++requests_;
  if (options_.audit_every > 0 && requests_ % options_.audit_every == 0) {
    const double again = process_.request(inputs(), x);
    if (std::abs(again - v) > options_.audit_tolerance) {
      throw DeterminismError("adapter returned " + std::to_string(v) + " then " +
                             std::to_string(again) + " for identical inputs");
    }
  }
  return v;
}

}  // namespace mfals
