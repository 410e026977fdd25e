#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>

#include "ipdd/rng.hpp"
#include "ipdd/types.hpp"

namespace ipdd {

enum class ObjectiveKind { kLinear, kQuadratic, kTotalDelay };

inline const char* to_string(ObjectiveKind k) {
  switch (k) {
    case ObjectiveKind::kLinear: return "linear";
    case ObjectiveKind::kQuadratic: return "quadratic";
    case ObjectiveKind::kTotalDelay: return "total_delay";
  }
  return "unknown";
}

/// Convex block objective. Three kinds are supported:
///  - linear:      c'x
///  - quadratic:   x'Qx/2 + c'x with Q symmetric positive semidefinite
///  - total_delay: sum_j y_j / (d_j - y_j) on {y : y_j < d_j}
/// Construction goes through the factories, which validate the data.
template <typename Scalar>
class ObjectiveFn {
 public:
  static ObjectiveFn linear(Vector<Scalar> c) {
    ObjectiveFn f;
    f.kind_ = ObjectiveKind::kLinear;
    f.dim_ = c.size();
    f.c_ = std::move(c);
    return f;
  }

  static ObjectiveFn zero(Index n) { return linear(Vector<Scalar>::Zero(n)); }

  static ObjectiveFn quadratic(Matrix<Scalar> Q, Vector<Scalar> c) {
    if (Q.rows() != Q.cols() || Q.rows() != c.size())
      throw DimensionMismatch("quadratic objective: Q must be square and match c");
    const Scalar nrm = Q.template lpNorm<Eigen::Infinity>();
    if ((Q - Q.transpose()).template lpNorm<Eigen::Infinity>() >
        Scalar(1e-12) * (Scalar(1) + nrm))
      throw Error("quadratic objective: Q must be symmetric");
    Matrix<Scalar> sym = (Q + Q.transpose()) / Scalar(2);
    if (sym.rows() > 0) {
      Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(sym,
                                                       Eigen::EigenvaluesOnly);
      const Scalar lo = es.eigenvalues().minCoeff();
      const Scalar hi = es.eigenvalues().cwiseAbs().maxCoeff();
      if (lo < -Scalar(1e-10) * (Scalar(1) + hi))
        throw Error("quadratic objective: Q must be positive semidefinite");
    }
    ObjectiveFn f;
    f.kind_ = ObjectiveKind::kQuadratic;
    f.dim_ = c.size();
    f.Q_ = std::move(sym);
    f.c_ = std::move(c);
    return f;
  }

  static ObjectiveFn total_delay(Vector<Scalar> capacities) {
    for (Index j = 0; j < capacities.size(); ++j)
      if (!(capacities[j] > Scalar(0)))
        throw Error("total_delay objective: capacities must be positive");
    ObjectiveFn f;
    f.kind_ = ObjectiveKind::kTotalDelay;
    f.dim_ = capacities.size();
    f.d_ = std::move(capacities);
    return f;
  }

  ObjectiveKind kind() const { return kind_; }
  Index dim() const { return dim_; }
  const Matrix<Scalar>& hessian_matrix() const { return Q_; }
  const Vector<Scalar>& linear_term() const { return c_; }
  const Vector<Scalar>& capacities() const { return d_; }

 private:
  ObjectiveFn() = default;
  ObjectiveKind kind_ = ObjectiveKind::kLinear;
  Index dim_ = 0;
  Matrix<Scalar> Q_;
  Vector<Scalar> c_;
  Vector<Scalar> d_;
};

/// Logarithmic barrier for the interior of a box:
///   phi(x) = -sum_i [ log(u_i - x_i) + log(x_i - l_i) ].
/// Finite exactly on the open box; complexity value is 2 * dim.
template <typename Scalar>
struct BoxLogBarrier {
  Box<Scalar> box;

  Index dim() const { return box.dim(); }
};

template <typename Scalar>
Scalar barrier_complexity(const BoxLogBarrier<Scalar>& b) {
  return Scalar(2) * Scalar(b.dim());
}

template <typename Scalar>
struct Evaluation {
  Scalar value;
  Vector<Scalar> grad;
  Matrix<Scalar> hess;
};

namespace detail {

template <typename Scalar>
void check_delay_domain(const Vector<Scalar>& d, const Vector<Scalar>& y) {
  if (y.size() != d.size())
    throw DimensionMismatch("total_delay: argument size mismatch");
  for (Index j = 0; j < y.size(); ++j)
    if (!(y[j] < d[j]))
      throw DomainViolation("total_delay: y >= capacity at coordinate " +
                            std::to_string(j));
}

template <typename Scalar>
void check_box_domain(const Box<Scalar>& box, const Vector<Scalar>& x) {
  if (x.size() != box.dim())
    throw DimensionMismatch("barrier: argument size mismatch");
  if (!box.contains_strictly(x))
    throw DomainViolation("barrier: point not strictly inside the box");
}

}  // namespace detail

template <typename Scalar>
Scalar value(const ObjectiveFn<Scalar>& f, const Vector<Scalar>& x) {
  if (x.size() != f.dim())
    throw DimensionMismatch("objective: argument size mismatch");
  switch (f.kind()) {
    case ObjectiveKind::kLinear:
      return f.linear_term().dot(x);
    case ObjectiveKind::kQuadratic:
      return Scalar(0.5) * x.dot(f.hessian_matrix() * x) +
             f.linear_term().dot(x);
    case ObjectiveKind::kTotalDelay: {
      detail::check_delay_domain(f.capacities(), x);
      return (x.array() / (f.capacities() - x).array()).sum();
    }
  }
  throw UnsupportedObjective("objective: unknown kind");
}

template <typename Scalar>
Evaluation<Scalar> eval(const ObjectiveFn<Scalar>& f, const Vector<Scalar>& x) {
  if (x.size() != f.dim())
    throw DimensionMismatch("objective: argument size mismatch");
  Evaluation<Scalar> e;
  const Index n = x.size();
  switch (f.kind()) {
    case ObjectiveKind::kLinear:
      e.value = f.linear_term().dot(x);
      e.grad = f.linear_term();
      e.hess = Matrix<Scalar>::Zero(n, n);
      return e;
    case ObjectiveKind::kQuadratic: {
      Vector<Scalar> Qx = f.hessian_matrix() * x;
      e.value = Scalar(0.5) * x.dot(Qx) + f.linear_term().dot(x);
      e.grad = Qx + f.linear_term();
      e.hess = f.hessian_matrix();
      return e;
    }
    case ObjectiveKind::kTotalDelay: {
      detail::check_delay_domain(f.capacities(), x);
      const auto& d = f.capacities();
      Vector<Scalar> gap = d - x;
      e.value = (x.array() / gap.array()).sum();
      e.grad = d.array() / gap.array().square();
      e.hess = Matrix<Scalar>::Zero(n, n);
      e.hess.diagonal() =
          Scalar(2) * d.array() / (gap.array() * gap.array().square());
      return e;
    }
  }
  throw UnsupportedObjective("objective: unknown kind");
}

/// Third directional derivative D^3 f(x)[h, h, h]; exact zero for linear and
/// quadratic kinds.
template <typename Scalar>
Scalar third_directional(const ObjectiveFn<Scalar>& f, const Vector<Scalar>& x,
                         const Vector<Scalar>& h) {
  if (x.size() != f.dim() || h.size() != f.dim())
    throw DimensionMismatch("objective: argument size mismatch");
  if (f.kind() != ObjectiveKind::kTotalDelay) return Scalar(0);
  detail::check_delay_domain(f.capacities(), x);
  const auto& d = f.capacities();
  Vector<Scalar> gap = d - x;
  return (Scalar(6) * d.array() * h.array().cube() /
          gap.array().square().square())
      .sum();
}

template <typename Scalar>
Scalar value(const BoxLogBarrier<Scalar>& phi, const Vector<Scalar>& x) {
  detail::check_box_domain(phi.box, x);
  return -((phi.box.upper - x).array().log().sum() +
           (x - phi.box.lower).array().log().sum());
}

template <typename Scalar>
Evaluation<Scalar> eval(const BoxLogBarrier<Scalar>& phi,
                        const Vector<Scalar>& x) {
  detail::check_box_domain(phi.box, x);
  Evaluation<Scalar> e;
  const Index n = x.size();
  Vector<Scalar> up = phi.box.upper - x;
  Vector<Scalar> lo = x - phi.box.lower;
  e.value = -(up.array().log().sum() + lo.array().log().sum());
  e.grad = up.cwiseInverse() - lo.cwiseInverse();
  e.hess = Matrix<Scalar>::Zero(n, n);
  e.hess.diagonal() =
      up.array().square().inverse() + lo.array().square().inverse();
  return e;
}

template <typename Scalar>
Scalar third_directional(const BoxLogBarrier<Scalar>& phi,
                         const Vector<Scalar>& x, const Vector<Scalar>& h) {
  detail::check_box_domain(phi.box, x);
  if (h.size() != x.size())
    throw DimensionMismatch("barrier: direction size mismatch");
  Vector<Scalar> up = phi.box.upper - x;
  Vector<Scalar> lo = x - phi.box.lower;
  return (Scalar(2) * h.array().cube() *
          (up.array().cube().inverse() - lo.array().cube().inverse()))
      .sum();
}

/// Per-kind constant alpha_i such that f_i + t*phi_i is (alpha_i/sqrt(t))-
/// self-concordant on the box interior: 2 for linear and quadratic kinds,
/// 2(1+beta) with beta = 3 for total_delay.
template <typename Scalar>
Scalar sc_alpha(const ObjectiveFn<Scalar>& f) {
  return f.kind() == ObjectiveKind::kTotalDelay ? Scalar(8) : Scalar(2);
}

template <typename Scalar>
Scalar compatibility_beta(const ObjectiveFn<Scalar>& f) {
  return f.kind() == ObjectiveKind::kTotalDelay ? Scalar(3) : Scalar(0);
}

/// Constants of the smoothed dual family. With N_max the largest per-block
/// barrier complexity: xi = alpha * sqrt(N_max), eta = alpha/2 * sqrt(N_max)
/// + 1/2; the t-dependent forms scale as xi(t) = xi/t, eta(t) = eta/t,
/// alpha(t) = M(t) = alpha/sqrt(t).
template <typename Scalar>
struct ScConstants {
  Scalar alpha = 2;
  Scalar xi = 0;
  Scalar eta = 0;
  Scalar beta = 0;

  Scalar alpha_of_t(Scalar t) const {
    using std::sqrt;
    return alpha / sqrt(t);
  }
  Scalar M_of_t(Scalar t) const { return alpha_of_t(t); }
  Scalar xi_of_t(Scalar t) const { return xi / t; }
  Scalar eta_of_t(Scalar t) const { return eta / t; }
};

/// Self-concordance spot check: draws interior points (biased toward the
/// boundary, where the ratio peaks) and random directions, and tests
///   |D^3[h,h,h]| <= M * (h'Hh)^{3/2} * (1 + 1e-8).
/// worst_ratio reports the largest observed |D^3| / (M * (h'Hh)^{3/2}),
/// so values <= 1 mean the bound holds with slack.
template <typename Scalar>
struct CheckReport {
  bool passed = true;
  Scalar worst_ratio = 0;
  Index violations = 0;
  Index samples = 0;
};

namespace detail {

template <typename Scalar>
Vector<Scalar> sample_interior(Rng& rng, const Box<Scalar>& box) {
  const Index n = box.dim();
  Vector<Scalar> x(n);
  for (Index i = 0; i < n; ++i) {
    double rel;
    if (rng.uniform() < 0.5) {
      rel = rng.uniform(0.02, 0.98);
    } else {
      // push toward one face: distance 10^-u, u in [1, 8]
      const double dist = std::pow(10.0, -rng.uniform(1.0, 8.0));
      rel = rng.uniform() < 0.5 ? dist : 1.0 - dist;
    }
    x[i] = box.lower[i] + Scalar(rel) * (box.upper[i] - box.lower[i]);
  }
  return x;
}

template <typename Scalar>
Vector<Scalar> sample_direction(Rng& rng, Index n) {
  if (rng.uniform() < 0.7) {
    Vector<Scalar> h = rng.normal_vector<Scalar>(n);
    const Scalar nrm = h.norm();
    return nrm > Scalar(0) ? Vector<Scalar>(h / nrm) : Vector<Scalar>::Unit(n, 0);
  }
  Vector<Scalar> h = Vector<Scalar>::Zero(n);
  h[rng.uniform_int(0, n - 1)] = rng.uniform() < 0.5 ? Scalar(1) : Scalar(-1);
  return h;
}

// Shared core: fn must expose hess(x) and third(x, h).
template <typename Scalar, typename HessFn, typename ThirdFn>
CheckReport<Scalar> check_sc_core(HessFn&& hess, ThirdFn&& third,
                                  const Box<Scalar>& domain, Scalar M,
                                  Index samples, std::uint64_t seed) {
  using std::abs;
  using std::pow;
  using std::sqrt;
  Rng rng(seed);
  CheckReport<Scalar> rep;
  rep.samples = samples;
  for (Index s = 0; s < samples; ++s) {
    Vector<Scalar> x = sample_interior(rng, domain);
    Vector<Scalar> h = sample_direction<Scalar>(rng, domain.dim());
    const Matrix<Scalar> H = hess(x);
    const Scalar quad = h.dot(H * h);
    const Scalar lhs = abs(third(x, h));
    const Scalar rhs = M * pow(std::max(quad, Scalar(0)), Scalar(1.5));
    if (lhs > rhs * (Scalar(1) + Scalar(1e-8))) {
      rep.passed = false;
      ++rep.violations;
    }
    const Scalar ratio = rhs > Scalar(0) ? lhs / rhs
                         : (lhs > Scalar(0) ? std::numeric_limits<Scalar>::infinity()
                                            : Scalar(0));
    rep.worst_ratio = std::max(rep.worst_ratio, ratio);
  }
  return rep;
}

}  // namespace detail

template <typename Scalar>
CheckReport<Scalar> check_self_concordance(const BoxLogBarrier<Scalar>& phi,
                                           Scalar M, Index samples,
                                           std::uint64_t seed) {
  return detail::check_sc_core<Scalar>(
      [&](const Vector<Scalar>& x) { return eval(phi, x).hess; },
      [&](const Vector<Scalar>& x, const Vector<Scalar>& h) {
        return third_directional(phi, x, h);
      },
      phi.box, M, samples, seed);
}

/// For total_delay the natural domain [0, d) is sampled; linear and
/// quadratic kinds have zero third derivative everywhere, checked on a unit
/// cube around the origin.
template <typename Scalar>
CheckReport<Scalar> check_self_concordance(const ObjectiveFn<Scalar>& f,
                                           Scalar M, Index samples,
                                           std::uint64_t seed) {
  Box<Scalar> domain;
  if (f.kind() == ObjectiveKind::kTotalDelay) {
    domain.lower = Vector<Scalar>::Zero(f.dim());
    domain.upper = f.capacities();
  } else {
    domain.lower = Vector<Scalar>::Constant(f.dim(), Scalar(-1));
    domain.upper = Vector<Scalar>::Constant(f.dim(), Scalar(1));
  }
  return detail::check_sc_core<Scalar>(
      [&](const Vector<Scalar>& x) { return eval(f, x).hess; },
      [&](const Vector<Scalar>& x, const Vector<Scalar>& h) {
        return third_directional(f, x, h);
      },
      domain, M, samples, seed);
}

/// Checks the barrier-smoothed combination f + t*phi_box against M.
template <typename Scalar>
CheckReport<Scalar> check_self_concordance(const ObjectiveFn<Scalar>& f,
                                           Scalar t, const Box<Scalar>& box,
                                           Scalar M, Index samples,
                                           std::uint64_t seed) {
  if (f.dim() != box.dim())
    throw DimensionMismatch("check_self_concordance: dimensions differ");
  BoxLogBarrier<Scalar> phi{box};
  Box<Scalar> domain = box;
  if (f.kind() == ObjectiveKind::kTotalDelay)
    domain.upper = domain.upper.cwiseMin(f.capacities());
  return detail::check_sc_core<Scalar>(
      [&](const Vector<Scalar>& x) {
        return Matrix<Scalar>(eval(f, x).hess + t * eval(phi, x).hess);
      },
      [&](const Vector<Scalar>& x, const Vector<Scalar>& h) {
        return third_directional(f, x, h) + t * third_directional(phi, x, h);
      },
      domain, M, samples, seed);
}

/// Compatibility spot check of an objective with the box barrier:
///   |D^3 f[h,h,h]| <= beta * (h'(D^2 f)h) * sqrt(h'(D^2 phi)h).
/// worst_ratio here is the unnormalized constant sup |D^3| / ((h'D^2f h) *
/// sqrt(h'D^2phi h)), which approaches beta for total_delay as y -> d.
/// Requires box = [0, d] so the barrier matches the delay domain.
template <typename Scalar>
CheckReport<Scalar> check_compatibility(const ObjectiveFn<Scalar>& f,
                                        const Box<Scalar>& box, Scalar beta,
                                        Index samples, std::uint64_t seed) {
  using std::abs;
  using std::sqrt;
  if (f.dim() != box.dim())
    throw DimensionMismatch("check_compatibility: dimensions differ");
  if (f.kind() == ObjectiveKind::kTotalDelay) {
    if ((box.lower.array() != Scalar(0)).any() ||
        ((box.upper - f.capacities()).template lpNorm<Eigen::Infinity>() >
         Scalar(0)))
      throw Error("check_compatibility: total_delay expects box [0, d]");
  }
  BoxLogBarrier<Scalar> phi{box};
  Rng rng(seed);
  CheckReport<Scalar> rep;
  rep.samples = samples;
  for (Index s = 0; s < samples; ++s) {
    Vector<Scalar> x = detail::sample_interior(rng, box);
    Vector<Scalar> h = detail::sample_direction<Scalar>(rng, box.dim());
    const Scalar quad_f = h.dot(eval(f, x).hess * h);
    const Scalar quad_phi = h.dot(eval(phi, x).hess * h);
    const Scalar lhs = abs(third_directional(f, x, h));
    const Scalar base = quad_f * sqrt(std::max(quad_phi, Scalar(0)));
    if (lhs > beta * base * (Scalar(1) + Scalar(1e-8))) {
      rep.passed = false;
      ++rep.violations;
    }
    const Scalar ratio =
        base > Scalar(0)
            ? lhs / base
            : (lhs > Scalar(0) ? std::numeric_limits<Scalar>::infinity()
                               : Scalar(0));
    rep.worst_ratio = std::max(rep.worst_ratio, ratio);
  }
  return rep;
}

}  // namespace ipdd
