#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mfp {

// Process exit codes used by the command-line driver.
enum class ExitCode : int {
  ok = 0,
  config = 1,
  no_cycle = 2,
  statistics = 3,
  truncation = 4,
  failure = 5,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept { return ExitCode::failure; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::config; }
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

// Non-finite particle state; carries the step index at which it was detected.
class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, long long step)
      : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  long long step() const noexcept { return step_; }

 private:
  long long step_;
};

class NoCycleError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::no_cycle; }
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> history)
      : Error(what), history_(std::move(history)) {}
  const std::vector<double>& residual_history() const noexcept { return history_; }
  ExitCode exit_code() const noexcept override { return ExitCode::no_cycle; }

 private:
  std::vector<double> history_;
};

class OutOfBasinError : public Error {
 public:
  using Error::Error;
};

class ResolutionError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::truncation; }
};

class TruncationError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::truncation; }
};

class StatisticsError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::statistics; }
};

}  // namespace mfp
