#pragma once

#include <stdexcept>
#include <string>

namespace ccr {

/// J J^T + lambda^2 I could not be inverted (only reachable with lambda == 0).
class RankDeficiencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Calibration data does not excite the named parameter.
class IdentifiabilityError : public std::runtime_error {
 public:
  explicit IdentifiabilityError(std::string parameter)
      : std::runtime_error("insufficient excitation: parameter '" + parameter + "' is not identifiable"),
        parameter_(std::move(parameter)) {}
  const std::string& parameter() const noexcept { return parameter_; }

 private:
  std::string parameter_;
};

/// The robot (simulated or real) refused a command or stopped responding.
class PlantFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-range configuration; field() names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace ccr
