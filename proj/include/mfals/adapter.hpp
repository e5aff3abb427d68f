#pragma once

#include <sys/types.h>

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mfals/models.hpp"

namespace mfals {

struct AdapterOptions {
  double timeout_seconds = 3600.0;
  /// Re-evaluate every n-th request and compare outputs; 0 disables.
  std::size_t audit_every = 0;
  double audit_tolerance = 0.0;
};

/// Child process speaking line-delimited JSON on its stdin/stdout.
///
///   adapter -> {"ready":true,"inputs":["x1","x2"]}
///   host    -> {"id":1,"params":{"x1":0.0,"x2":0.0}}
///   adapter -> {"id":1,"value":3.0}   or   {"id":1,"error":"diverged"}
///
/// `command` runs through /bin/sh -c. One request is in flight at a time.
class AdapterProcess {
 public:
  AdapterProcess(const std::string& command, double timeout_seconds = 3600.0);
  ~AdapterProcess();
  AdapterProcess(const AdapterProcess&) = delete;
  AdapterProcess& operator=(const AdapterProcess&) = delete;

  /// Names announced in the handshake.
  const std::vector<std::string>& inputs() const { return inputs_; }

  /// Sends one request and waits for the matching response.
  double request(std::span<const std::string> names, std::span<const double> values);

  std::uint64_t last_id() const { return next_id_ - 1; }
  pid_t pid() const { return pid_; }

 private:
  std::string read_line();
  void write_line(const std::string& line);
  [[noreturn]] void crashed(const std::string& context);
  void shutdown();

  pid_t pid_ = -1;
  int fd_ = -1;
  std::string buffer_;
  std::chrono::milliseconds timeout_;
  std::vector<std::string> inputs_;
  std::uint64_t next_id_ = 1;
};

/// Model evaluated by an external adapter. The declared inputs must all be
/// announced by the adapter's handshake.
class ExternalEvaluator final : public ModelEvaluator {
 public:
  ExternalEvaluator(const std::string& command, std::vector<std::string> inputs,
                    AdapterOptions options = {});

  AdapterProcess& process() { return process_; }

 protected:
  double do_evaluate(std::span<const double> x) override;

 private:
  AdapterProcess process_;
  AdapterOptions options_;
  std::size_t requests_ = 0;
};

}  // namespace mfals
