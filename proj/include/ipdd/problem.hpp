#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "ipdd/functions.hpp"
#include "ipdd/types.hpp"

namespace ipdd {

/// One block of a separable program:
///   minimize f(x) over x in box, subject to A x = a (local) where the block
///   contributes B x to the coupling rows. A is empty (0 x n) when the block
///   has no local equalities; otherwise it must have full row rank with
///   fewer rows than columns. The barrier is the box log barrier.
template <typename Scalar>
struct Block {
  ObjectiveFn<Scalar> objective;
  Box<Scalar> box;
  Matrix<Scalar> A;
  Vector<Scalar> a;
  Matrix<Scalar> B;

  Index dim() const { return box.dim(); }
  Index local_rows() const { return A.rows(); }
  Index coupling_rows() const { return B.rows(); }

  void validate() const {
    box.validate();
    const Index n = box.dim();
    if (objective.dim() != n)
      throw DimensionMismatch("block: objective dimension != box dimension");
    if (A.rows() > 0 && A.cols() != n)
      throw DimensionMismatch("block: A column count != box dimension");
    if (a.size() != A.rows())
      throw DimensionMismatch("block: a size != A row count");
    if (B.cols() != n)
      throw DimensionMismatch("block: B column count != box dimension");
    if (objective.kind() == ObjectiveKind::kTotalDelay) {
      // delay domain must contain the box interior
      for (Index j = 0; j < n; ++j)
        if (box.upper[j] > objective.capacities()[j])
          throw Error("block: box exceeds total_delay capacity at coordinate " +
                      std::to_string(j));
    }
  }
};

template <typename Scalar>
BoxLogBarrier<Scalar> barrier(const Block<Scalar>& blk) {
  return BoxLogBarrier<Scalar>{blk.box};
}

/// Separable convex program with linear coupling sum_i B_i x_i = b.
template <typename Scalar>
struct SeparableProblem {
  std::vector<Block<Scalar>> blocks;
  Vector<Scalar> b;

  Index num_blocks() const { return Index(blocks.size()); }
  Index coupling_rows() const { return b.size(); }
  Index total_dim() const {
    Index n = 0;
    for (const auto& blk : blocks) n += blk.dim();
    return n;
  }

  void validate() const {
    if (blocks.empty()) throw DimensionMismatch("problem: no blocks");
    for (const auto& blk : blocks) {
      blk.validate();
      if (blk.B.rows() != b.size())
        throw DimensionMismatch("problem: B row count != coupling dimension");
    }
  }
};

/// Total barrier complexity N_phi = sum_i 2 n_i.
template <typename Scalar>
Scalar barrier_complexity(const SeparableProblem<Scalar>& p) {
  Scalar n = 0;
  for (const auto& blk : p.blocks) n += barrier_complexity(barrier(blk));
  return n;
}

template <typename Scalar>
Scalar objective_value(const SeparableProblem<Scalar>& p,
                       const std::vector<Vector<Scalar>>& xs) {
  if (xs.size() != p.blocks.size())
    throw DimensionMismatch("objective_value: block count mismatch");
  Scalar f = 0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    f += value(p.blocks[i].objective, xs[i]);
  return f;
}

template <typename Scalar>
Vector<Scalar> coupling_residual(const SeparableProblem<Scalar>& p,
                                 const std::vector<Vector<Scalar>>& xs) {
  if (xs.size() != p.blocks.size())
    throw DimensionMismatch("coupling_residual: block count mismatch");
  Vector<Scalar> r = p.b;
  for (std::size_t i = 0; i < xs.size(); ++i) r -= p.blocks[i].B * xs[i];
  return r;
}

template <typename Scalar>
ScConstants<Scalar> derive_sc_constants(const SeparableProblem<Scalar>& p) {
  using std::sqrt;
  if (p.blocks.empty()) throw DimensionMismatch("derive_sc_constants: no blocks");
  ScConstants<Scalar> sc;
  Scalar n_max = 0;
  for (const auto& blk : p.blocks) {
    sc.alpha = std::max(sc.alpha, sc_alpha(blk.objective));
    sc.beta = std::max(sc.beta, compatibility_beta(blk.objective));
    n_max = std::max(n_max, barrier_complexity(barrier(blk)));
  }
  sc.xi = sc.alpha * sqrt(n_max);
  sc.eta = sc.alpha / Scalar(2) * sqrt(n_max) + Scalar(0.5);
  return sc;
}

struct ValidationReport {
  bool pass = false;
  std::vector<bool> block_full_rank;
  bool coupling_full_rank = false;
  std::string message;
};

/// Checks the rank assumption behind a positive definite dual Hessian:
/// every A_i has full row rank, and with U_i a null-space basis of A_i
/// (identity when A_i is empty) the stacked [B_1 U_1 ... B_N U_N] has full
/// row rank. Together these are equivalent to full row rank of the complete
/// constraint matrix.
template <typename Scalar>
ValidationReport validate_rank(const SeparableProblem<Scalar>& p) {
  p.validate();
  ValidationReport rep;
  std::ostringstream msg;

  Index null_cols = 0;
  std::vector<Matrix<Scalar>> bases(p.blocks.size());
  rep.block_full_rank.resize(p.blocks.size(), true);
  for (std::size_t i = 0; i < p.blocks.size(); ++i) {
    const auto& blk = p.blocks[i];
    const Index n = blk.dim();
    const Index mi = blk.local_rows();
    if (mi == 0) {
      bases[i] = Matrix<Scalar>::Identity(n, n);
      null_cols += n;
      continue;
    }
    if (mi > n) {
      rep.block_full_rank[i] = false;
      msg << "block " << i << ": more local rows than variables; ";
      continue;
    }
    Eigen::JacobiSVD<Matrix<Scalar>> svd(blk.A, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const Scalar tol = Scalar(kRankRtol) * sv[0];
    Index rank = 0;
    for (Index k = 0; k < sv.size(); ++k)
      if (sv[k] > tol) ++rank;
    if (rank != mi) {
      rep.block_full_rank[i] = false;
      msg << "block " << i << ": A rank " << rank << " < rows " << mi << "; ";
      continue;
    }
    bases[i] = svd.matrixV().rightCols(n - mi);
    null_cols += n - mi;
  }

  bool blocks_ok = true;
  for (bool ok : rep.block_full_rank) blocks_ok = blocks_ok && ok;

  const Index m = p.coupling_rows();
  if (!blocks_ok) {
    rep.coupling_full_rank = false;
  } else if (m == 0) {
    rep.coupling_full_rank = true;
  } else {
    Matrix<Scalar> BU(m, null_cols);
    Index col = 0;
    for (std::size_t i = 0; i < p.blocks.size(); ++i) {
      const Index c = bases[i].cols();
      BU.middleCols(col, c) = p.blocks[i].B * bases[i];
      col += c;
    }
    if (null_cols < m) {
      rep.coupling_full_rank = false;
    } else {
      Eigen::JacobiSVD<Matrix<Scalar>> svd(BU);
      const auto& sv = svd.singularValues();
      const Scalar tol = Scalar(kRankRtol) * sv[0];
      Index rank = 0;
      for (Index k = 0; k < sv.size(); ++k)
        if (sv[k] > tol) ++rank;
      rep.coupling_full_rank = (rank == m);
    }
    if (!rep.coupling_full_rank)
      msg << "coupling matrix restricted to local null spaces is row-rank "
             "deficient; ";
  }

  rep.pass = blocks_ok && rep.coupling_full_rank;
  rep.message = rep.pass ? "ok" : msg.str();
  return rep;
}

/// Appends a slack block (zero objective, box [0, s], B = identity) that
/// absorbs coupling infeasibility. Slack lower bounds must be exactly zero.
template <typename Scalar>
SeparableProblem<Scalar> add_slack_block(const SeparableProblem<Scalar>& p,
                                         const Box<Scalar>& slack_bounds) {
  const Index m = p.coupling_rows();
  if (slack_bounds.dim() != m)
    throw DimensionMismatch("add_slack_block: bounds dimension != coupling rows");
  for (Index i = 0; i < m; ++i) {
    if (slack_bounds.lower[i] != Scalar(0))
      throw BadSlackBounds("add_slack_block: lower bounds must be zero");
    if (!(slack_bounds.upper[i] > Scalar(0)) ||
        !std::isfinite(double(slack_bounds.upper[i])))
      throw BadSlackBounds("add_slack_block: upper bounds must be positive and finite");
  }
  SeparableProblem<Scalar> out = p;
  Block<Scalar> slack{ObjectiveFn<Scalar>::zero(m), slack_bounds,
                      Matrix<Scalar>(0, m), Vector<Scalar>(0),
                      Matrix<Scalar>(Matrix<Scalar>::Identity(m, m))};
  out.blocks.push_back(std::move(slack));
  return out;
}

namespace detail {

// Largest sigma with x + sigma*dx still inside the box, times `fraction`.
template <typename Scalar>
Scalar boundary_step(const Box<Scalar>& box, const Vector<Scalar>& x,
                     const Vector<Scalar>& dx, Scalar fraction) {
  Scalar sigma = std::numeric_limits<Scalar>::infinity();
  for (Index i = 0; i < x.size(); ++i) {
    if (dx[i] > Scalar(0))
      sigma = std::min(sigma, (box.upper[i] - x[i]) / dx[i]);
    else if (dx[i] < Scalar(0))
      sigma = std::min(sigma, (box.lower[i] - x[i]) / dx[i]);
  }
  return fraction * sigma;
}

}  // namespace detail

/// Finds a strictly interior point of {x in int(box) : A x = a} by centering
/// the box log barrier over the affine set. Starts from the box center
/// projected onto the affine set when that projection stays interior,
/// otherwise runs infeasible-start Newton from the center. Declares
/// Infeasible when the residual cannot be closed, a barrier value passes
/// 1e12, steps collapse, or the certified relative interior margin after
/// centering stays below 1e-8 (boundary-only "feasibility").
template <typename Scalar>
Vector<Scalar> equality_interior_point(const Matrix<Scalar>& A,
                                       const Vector<Scalar>& a,
                                       const Box<Scalar>& box) {
  using std::sqrt;
  box.validate();
  const Index n = box.dim();
  const Index m = A.rows();
  if (m == 0) return box.center();
  if (A.cols() != n || a.size() != m)
    throw DimensionMismatch("equality_interior_point: shape mismatch");

  const BoxLogBarrier<Scalar> phi{box};
  const Scalar pri_tol = Scalar(1e-10) * (Scalar(1) + a.norm());
  const Scalar barrier_cap = Scalar(1e12);
  const int budget = 500;

  Vector<Scalar> x = box.center();
  {
    // projection of the center onto {Ax = a}
    Eigen::LLT<Matrix<Scalar>> gram((A * A.transpose()).eval());
    if (gram.info() != Eigen::Success)
      throw Error("equality_interior_point: A is row-rank deficient");
    Vector<Scalar> proj =
        box.center() + A.transpose() * gram.solve(a - A * box.center());
    if (box.contains_strictly(proj, Scalar(1e-12))) x = proj;
  }

  Vector<Scalar> nu = Vector<Scalar>::Zero(m);
  auto residual_norm = [&](const Vector<Scalar>& xx, const Vector<Scalar>& nn) {
    Vector<Scalar> g = eval(phi, xx).grad;
    const Scalar rd = (g + A.transpose() * nn).norm();
    const Scalar rp = (A * xx - a).norm();
    return sqrt(rd * rd + rp * rp);
  };

  int iter = 0;
  // Phase A: close the equality residual (no-op when already feasible).
  while ((A * x - a).norm() > pri_tol) {
    if (++iter > budget)
      throw Infeasible("no strictly interior point: residual not closed");
    Evaluation<Scalar> e = eval(phi, x);
    if (e.value > barrier_cap)
      throw Infeasible("no strictly interior point: barrier diverged");
    Vector<Scalar> hinv_g = e.grad.cwiseQuotient(e.hess.diagonal());
    Matrix<Scalar> W = e.hess.diagonal().cwiseInverse().asDiagonal() *
                       A.transpose();  // H^-1 A'
    Eigen::LLT<Matrix<Scalar>> schur((A * W).eval());
    if (schur.info() != Eigen::Success)
      throw Error("equality_interior_point: Schur factorization failed");
    Vector<Scalar> r_pri = A * x - a;
    Vector<Scalar> w = schur.solve(r_pri - A * hinv_g);
    Vector<Scalar> dx = -(hinv_g + W * w);
    Vector<Scalar> dnu = w - nu;

    const Scalar res0 = residual_norm(x, nu);
    Scalar sigma = std::min(Scalar(1),
                            detail::boundary_step(box, x, dx, Scalar(0.99)));
    bool accepted = false;
    while (sigma > Scalar(1e-13)) {
      Vector<Scalar> xt = x + sigma * dx;
      if (box.contains_strictly(xt) &&
          residual_norm(xt, nu + sigma * dnu) <=
              (Scalar(1) - Scalar(0.2) * sigma) * res0) {
        x = xt;
        nu += sigma * dnu;
        accepted = true;
        break;
      }
      sigma /= Scalar(2);
    }
    if (!accepted)
      throw Infeasible("no strictly interior point: step collapsed");
  }

  // Phase B: center within the affine slice (damped Newton on the barrier).
  const Scalar dstar = delta_star<Scalar>();
  for (; iter <= budget; ++iter) {
    Evaluation<Scalar> e = eval(phi, x);
    if (e.value > barrier_cap)
      throw Infeasible("no strictly interior point: barrier diverged");
    Vector<Scalar> hinv_g = e.grad.cwiseQuotient(e.hess.diagonal());
    Matrix<Scalar> W =
        e.hess.diagonal().cwiseInverse().asDiagonal() * A.transpose();
    Eigen::LLT<Matrix<Scalar>> schur((A * W).eval());
    if (schur.info() != Eigen::Success)
      throw Error("equality_interior_point: Schur factorization failed");
    Vector<Scalar> w = -schur.solve(A * hinv_g);
    Vector<Scalar> dx = -(hinv_g + W * w);
    const Scalar delta = sqrt(std::max(Scalar(0), dx.dot(e.hess * dx)));
    if (delta <= Scalar(1e-6)) break;
    Scalar sigma = delta > dstar ? Scalar(1) / (Scalar(1) + delta) : Scalar(1);
    sigma = std::min(sigma, detail::boundary_step(box, x, dx, Scalar(0.99)));
    x += sigma * dx;
  }

  if (!box.contains_strictly(x, Scalar(1e-8)))
    throw Infeasible("no strictly interior point: margin below 1e-8 of width");
  return x;
}

template <typename Scalar>
Vector<Scalar> find_interior_point(const Block<Scalar>& blk) {
  blk.validate();
  Vector<Scalar> x = equality_interior_point(blk.A, blk.a, blk.box);
  if (blk.objective.kind() == ObjectiveKind::kTotalDelay)
    detail::check_delay_domain(blk.objective.capacities(), x);
  return x;
}

}  // namespace ipdd
