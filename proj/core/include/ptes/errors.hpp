#pragma once

#include <stdexcept>
#include <string>

namespace ptes {

// Thermodynamically invalid temperature set (COP denominator <= 0).
struct DegenerateCycle : std::runtime_error {
  explicit DegenerateCycle(const std::string& msg) : std::runtime_error(msg) {}
};

// Argument outside the documented domain of a capability function.
struct DomainError : std::invalid_argument {
  explicit DomainError(const std::string& msg) : std::invalid_argument(msg) {}
};

struct InvalidBreakpoints : std::invalid_argument {
  explicit InvalidBreakpoints(const std::string& msg) : std::invalid_argument(msg) {}
};

struct FitDiverged : std::runtime_error {
  explicit FitDiverged(const std::string& msg) : std::runtime_error(msg) {}
};

struct UnsupportedSpec : std::invalid_argument {
  explicit UnsupportedSpec(const std::string& msg) : std::invalid_argument(msg) {}
};

struct LengthMismatch : std::invalid_argument {
  explicit LengthMismatch(const std::string& msg) : std::invalid_argument(msg) {}
};

// Discharge exceeds FIFO ledger content beyond tolerance.
struct LedgerUnderflow : std::runtime_error {
  explicit LedgerUnderflow(const std::string& msg) : std::runtime_error(msg) {}
};

struct InconsistentNetwork : std::invalid_argument {
  explicit InconsistentNetwork(const std::string& msg) : std::invalid_argument(msg) {}
};

struct EmptyCluster : std::runtime_error {
  explicit EmptyCluster(const std::string& msg) : std::runtime_error(msg) {}
};

// CSV ingestion errors; messages name the first offending row.
struct MissingHours : std::runtime_error {
  explicit MissingHours(const std::string& msg) : std::runtime_error(msg) {}
};

struct NonMonotonicTimestamps : std::runtime_error {
  explicit NonMonotonicTimestamps(const std::string& msg) : std::runtime_error(msg) {}
};

struct NonNumericPrice : std::runtime_error {
  explicit NonNumericPrice(const std::string& msg) : std::runtime_error(msg) {}
};

struct InputError : std::runtime_error {
  explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ptes
