#pragma once
// Error taxonomy shared by the library and the CLI exit-code mapping:
// DataError -> 2, FitError -> 3, InferenceError -> 4.

#include <stdexcept>
#include <string>

namespace placebo {

enum class errc {
  // data / validation
  missing_column,
  non_binary_value,
  non_numeric_cell,
  empty_file,
  empty_cell,
  non_finite_value,
  bad_weight,
  shape_mismatch,
  negative_outcome,
  invalid_argument,
  // model fitting
  invalid_term,
  duplicate_term,
  rank_deficient,
  not_converged,
  degenerate_weight,
  // inference
  bootstrap_unstable,
  singular_bread,
};

class Error : public std::runtime_error {
public:
  Error(errc code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  errc code() const { return code_; }

private:
  errc code_;
};

// Invalid inputs: malformed CSV, broken invariants, bad configuration.
class DataError : public Error {
public:
  using Error::Error;
};

// Model-fitting failures: rank deficiency, non-convergence, degenerate weights.
class FitError : public Error {
public:
  using Error::Error;
};

// Variance/CI machinery failures: unstable bootstrap, singular bread matrix.
class InferenceError : public Error {
public:
  using Error::Error;
};

}  // namespace placebo
