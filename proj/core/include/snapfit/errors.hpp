#pragma once

#include <stdexcept>
#include <string>

namespace snapfit {

// Error taxonomy mirrors the CLI exit codes: data/config problems map to
// exit code 2, training/evaluation failures to exit code 3.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input values, files, shape/grid mismatches.
struct DataError : Error {
  using Error::Error;
};

// Invalid parameters or out-of-range settings.
struct ConfigError : Error {
  using Error::Error;
};

// Degenerate training inputs or failed solver convergence.
struct TrainingError : Error {
  using Error::Error;
};

// Model/dataset incompatibilities discovered at evaluation time.
struct EvalError : Error {
  using Error::Error;
};

// Operation invoked on an object in the wrong state (e.g. uncalibrated model).
struct StateError : Error {
  using Error::Error;
};

}  // namespace snapfit
