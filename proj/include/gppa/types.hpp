#pragma once

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gppa {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad parameter, bad shape, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// The operation does not support the requested parameter value.
class UnsupportedParameter : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Non-finite values or a failed linear solve.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Too little usable data to compute a statistic.
class InsufficientData : public Error {
 public:
  using Error::Error;
};

/// Distances below this are treated as converged when forming ratios.
inline double distance_floor(double reference_norm) {
  return 100.0 * std::numeric_limits<double>::epsilon() * (1.0 + reference_norm);
}

inline bool all_finite(const Vector& v) { return v.allFinite(); }

inline void require_finite(const Vector& v, std::string_view what) {
  if (!v.allFinite()) {
    throw NumericalError(std::string(what) + ": non-finite entry");
  }
}

inline void require_dim(const Vector& v, Index dim, std::string_view what) {
  if (v.size() != dim) {
    throw DimensionMismatch(std::string(what) + ": expected dimension " + std::to_string(dim) +
                            ", got " + std::to_string(v.size()));
  }
}

}  // namespace gppa
