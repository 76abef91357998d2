#pragma once

#include <stdexcept>
#include <string>

namespace ising {

struct InvalidInputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Brute-force / kernel / grid size guards.
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Annealing estimator gave up (majority of trials failed).
struct EstimatorError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tempering trial budget exhausted without an accepted sample.
struct SamplerFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An internal consistency check tripped (e.g. rejection ratio above its
// certified bound), signalling bad upstream estimates.
struct ConsistencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ising
