#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gpsel {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad caller input: mismatched dimensions, unknown parameter names, invalid config.
struct InvalidArgument : Error {
  using Error::Error;
};

// A matrix failed Cholesky factorization even after jitter escalation.
struct IllConditioned : Error {
  using Error::Error;
};

// Rank-deficient design matrix in the linear projection.
struct SingularDesign : Error {
  using Error::Error;
};

// Submodel optimization could not be started or finished for a given subset.
struct ProjectionFailure : Error {
  ProjectionFailure(const std::string& msg, std::vector<int> subset_in)
      : Error(msg), subset(std::move(subset_in)) {}
  std::vector<int> subset;
};

// Sampler finished in a state that should not be trusted. Carries the
// acceptance statistics so callers can report them.
struct SamplerError : Error {
  SamplerError(const std::string& msg, double acceptance_rate_in, double step_size_in)
      : Error(msg), acceptance_rate(acceptance_rate_in), step_size(step_size_in) {}
  double acceptance_rate = 0.0;
  double step_size = 0.0;
};

// Too many per-sample posterior computations failed while combining samples.
struct IntegrationError : Error {
  using Error::Error;
};

struct SearchError : Error {
  using Error::Error;
};

struct ExperimentError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

struct SchemaError : Error {
  using Error::Error;
};

}  // namespace gpsel
