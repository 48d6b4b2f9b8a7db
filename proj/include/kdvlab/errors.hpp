#pragma once

#include <stdexcept>
#include <string>

namespace kdvlab {

/// Bad user-supplied configuration (grid sizes, flags, file contents).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// The energy -kappa^2 is not below the spectrum of -d^2/dx^2 + q.
struct SpectrumIntersectionError : std::runtime_error {
  explicit SpectrumIntersectionError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A computation could not reach its requested accuracy.
struct AccuracyError : std::runtime_error {
  explicit AccuracyError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Two routes that must agree disagree beyond tolerance.
struct InconsistencyError : std::runtime_error {
  explicit InconsistencyError(const std::string& msg) : std::runtime_error(msg) {}
};

/// An operation was invoked on inputs it is not defined for.
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Time integration blew up or hit an inadmissible state.
struct IntegrationError : std::runtime_error {
  explicit IntegrationError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace kdvlab
