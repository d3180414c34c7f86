#pragma once

#include <stdexcept>
#include <string>

namespace peh {

// Configuration / input validation failure. Carries the offending field so the
// CLI can point at the right line of a config file.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field.empty() ? message : field + ": " + message),
        field_(std::move(field)) {}
  explicit ConfigError(const std::string& message) : ConfigError("", message) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Adaptive integrator gave up (step size underflow or non-finite state).
// Reports the simulated time at which integration failed.
class IntegratorError : public std::runtime_error {
 public:
  IntegratorError(const std::string& message, double time)
      : std::runtime_error(message + " at t=" + std::to_string(time) + " s"),
        time_(time) {}

  double time() const noexcept { return time_; }

 private:
  double time_;
};

// Malformed, truncated, or unsupported MAT-file content.
class MatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace peh
