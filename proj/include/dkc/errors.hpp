#pragma once

#include <stdexcept>

namespace dkc {

// Error taxonomy. The CLI maps each type onto a distinct exit code, so
// keep the categories coarse and stable.

// Shape or contract violation at an operation boundary.
struct DimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// API used out of order (e.g. reading gradients before backward()).
struct StateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Optimization produced NaN/Inf or otherwise diverged.
struct TrainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Simulation or rollout blew up (non-finite state).
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// On-disk data is not in the expected format.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A referenced file is missing or unreadable.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid experiment configuration.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Requested operation is not defined for the given model variant.
struct UnsupportedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A condition the library guarantees internally was violated.
struct InternalError : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace dkc
