#pragma once

#include <stdexcept>
#include <string>

namespace oamcv {

// A covariance matrix whose off-standard-form entries are too large to ignore.
struct ShapeViolationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Phase scan does not cover the full 2*pi range (or leaves bins empty).
struct InsufficientCoverageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Singular design matrix in a variance fit.
struct FitDegenerateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The two independent estimates of a cross-block CM entry disagree.
struct ReconstructionInconsistencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A required mode/trace is missing from the input set.
struct IncompleteInputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An operation was called before its gate passed.
struct PreconditionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Monte Carlo distribution with zero spread cannot yield a significance.
struct DegenerateDistributionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input outside the supported class (e.g. mixed state where pure is required).
struct UnsupportedInputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Estimation target cannot be resolved from the data (e.g. no squeezing).
struct UnresolvableError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed file content (JSON, CSV or key=value configuration).
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Filesystem failure: file missing, unreadable or unwritable.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace oamcv
