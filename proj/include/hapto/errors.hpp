#pragma once

#include <cstddef>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace hapto {

/// Short human-readable number for messages.
inline std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape mismatch between fields, bad grid dimensions, malformed input files.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Parameters or rate specifications outside their admissible range.
class ModelError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values produced by a time step.
class IntegrationFault : public Error {
 public:
  IntegrationFault(const std::string& what, std::size_t step_index, double time)
      : Error(what + " (step " + std::to_string(step_index) + ", t=" + format_number(time) + ")"),
        step_index_(step_index),
        time_(time) {}

  std::size_t step_index() const noexcept { return step_index_; }
  double time() const noexcept { return time_; }

 private:
  std::size_t step_index_;
  double time_;
};

/// The stability-limited step fell below the underflow floor.
class StiffnessFault : public IntegrationFault {
 public:
  using IntegrationFault::IntegrationFault;
};

/// A hard monitor violation in strict mode.
class MonitorViolation : public Error {
 public:
  MonitorViolation(const std::string& what, double time)
      : Error(what + " at t=" + format_number(time)), time_(time) {}

  double time() const noexcept { return time_; }

 private:
  double time_;
};

class IoError : public Error {
 public:
  IoError(const std::string& what, std::string path) : Error(what + ": " + path), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Aggregated configuration problems, each with line/key context.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> problems)
      : Error(join(problems)), problems_(std::move(problems)) {}

  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& problems) {
    std::string out = "invalid configuration";
    for (const auto& p : problems) {
      out += "\n  ";
      out += p;
    }
    return out;
  }

  std::vector<std::string> problems_;
};

}  // namespace hapto
