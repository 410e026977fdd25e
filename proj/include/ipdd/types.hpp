#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <string>

namespace ipdd {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Singular values below kRankRtol * sigma_max count as zero in rank tests.
inline constexpr double kRankRtol = 1e-10;

// Threshold between the damped and the full Newton step: 2 - sqrt(3).
template <typename Scalar = double>
Scalar delta_star() {
  using std::sqrt;
  return Scalar(2) - sqrt(Scalar(3));
}

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

// Evaluation outside the open domain of a barrier or a delay objective.
struct DomainViolation : Error {
  using Error::Error;
};

struct BadSlackBounds : Error {
  using Error::Error;
};

struct Infeasible : Error {
  using Error::Error;
};

struct MaxIterExceeded : Error {
  using Error::Error;
};

// A matrix required to be positive definite failed its Cholesky
// factorization; for the dual Hessian this signals a rank-condition
// violation or excessive subproblem inexactness.
struct HessianNotPd : Error {
  using Error::Error;
};

struct UnsupportedObjective : Error {
  using Error::Error;
};

struct GenInfeasible : Error {
  using Error::Error;
};

struct ParseError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

// Closed axis-aligned box {x : lower <= x <= upper}; the associated barrier
// is defined on its interior, so lower < upper is required coordinatewise.
template <typename Scalar>
struct Box {
  Vector<Scalar> lower;
  Vector<Scalar> upper;

  Index dim() const { return lower.size(); }

  void validate() const {
    if (lower.size() != upper.size())
      throw DimensionMismatch("box: lower and upper sizes differ");
    for (Index i = 0; i < lower.size(); ++i) {
      if (!std::isfinite(double(lower[i])) || !std::isfinite(double(upper[i])))
        throw Error("box: bounds must be finite");
      if (!(lower[i] < upper[i]))
        throw Error("box: lower < upper violated at coordinate " +
                    std::to_string(i));
    }
  }

  Vector<Scalar> center() const { return (lower + upper) / Scalar(2); }

  Vector<Scalar> width() const { return upper - lower; }

  // Strict interior test with a margin relative to the coordinate width.
  bool contains_strictly(const Vector<Scalar>& x, Scalar rel_margin = 0) const {
    if (x.size() != dim()) return false;
    for (Index i = 0; i < dim(); ++i) {
      const Scalar m = rel_margin * (upper[i] - lower[i]);
      if (!(x[i] > lower[i] + m) || !(x[i] < upper[i] - m)) return false;
    }
    return true;
  }
};

}  // namespace ipdd
