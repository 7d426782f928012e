#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace ggreg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonFiniteInput : Error {
  using Error::Error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

struct EmptyGrid : Error {
  using Error::Error;
};

/// Every BIC candidate had zero residual loss (exact interpolation).
struct AllFitsDegenerate : Error {
  using Error::Error;
};

/// Support size ŝ reached or exceeded n; the residual-variance estimator
/// is undefined there.
struct SupportTooLarge : Error {
  using Error::Error;
};

struct InvalidSparsity : Error {
  using Error::Error;
};

struct ZeroScale : Error {
  using Error::Error;
};

/// Cholesky failure; carries the covariate vector at which it happened.
struct NotPositiveDefinite : Error {
  NotPositiveDefinite(const std::string& msg, Vector u)
      : Error(msg), offending_u(std::move(u)) {}
  Vector offending_u;
};

struct PipelineAbort : Error {
  using Error::Error;
};

struct DegenerateRow : Error {
  using Error::Error;
};

inline void require_finite(const Matrix& m, const char* name) {
  if (!m.allFinite()) {
    throw NonFiniteInput(std::string(name) + " contains non-finite values");
  }
}

inline void require_finite(const Vector& v, const char* name) {
  if (!v.allFinite()) {
    throw NonFiniteInput(std::string(name) + " contains non-finite values");
  }
}

}  // namespace ggreg
