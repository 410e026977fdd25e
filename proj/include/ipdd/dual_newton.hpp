#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "ipdd/block_solver.hpp"
#include "ipdd/problem.hpp"

namespace ipdd {

/// Snapshot of the smoothed dual d(t, .) at one multiplier: value, gradient
/// b - sum B_i x_i, curvature sum G_i, and the Newton data derived from
/// them. Immutable once assembled; `decrement` is stamped by the driver.
template <typename Scalar>
struct DualState {
  Scalar t = 1;
  Vector<Scalar> lambda;
  Scalar value = 0;
  Vector<Scalar> grad;
  Matrix<Scalar> hess;
  Vector<Scalar> newton_dir;
  Scalar decrement = 0;
  long fct_evals = 0;
  Eigen::LLT<Matrix<Scalar>> hess_llt;
};

/// Curvature contribution of one block, reusing the subproblem factors:
///   G_i = B [H^-1 - H^-1 A' (A H^-1 A')^-1 A H^-1] B'.
template <typename Scalar>
Matrix<Scalar> dual_block_term(const Block<Scalar>& blk,
                               const BlockSolution<Scalar>& sol) {
  Matrix<Scalar> Y = sol.chol_H.solve(Matrix<Scalar>(blk.B.transpose()));
  Matrix<Scalar> G = blk.B * Y;
  if (sol.chol_S) {
    Matrix<Scalar> V = blk.A * Y;
    G.noalias() -= V.transpose() * sol.chol_S->solve(V);
  }
  return Matrix<Scalar>((G + G.transpose()) / Scalar(2));
}

/// Builds the dual state from one sweep of block solutions. Block terms are
/// accumulated in block order, so the result does not depend on which
/// thread finished first. Throws HessianNotPd when the curvature fails its
/// factorization, which signals a rank-condition violation or excessive
/// subproblem inexactness.
template <typename Scalar>
DualState<Scalar> assemble(const SeparableProblem<Scalar>& p, Scalar t,
                           const Vector<Scalar>& lambda,
                           const std::vector<BlockSolution<Scalar>>& sols) {
  const Index m = p.coupling_rows();
  if (lambda.size() != m)
    throw DimensionMismatch("assemble: lambda size mismatch");
  if (Index(sols.size()) != p.num_blocks())
    throw DimensionMismatch("assemble: solution count mismatch");

  DualState<Scalar> st;
  st.t = t;
  st.lambda = lambda;
  st.grad = p.b;
  st.hess = Matrix<Scalar>::Zero(m, m);
  st.value = lambda.dot(p.b);
  for (Index i = 0; i < p.num_blocks(); ++i) {
    const auto& blk = p.blocks[size_t(i)];
    const auto& sol = sols[size_t(i)];
    if (sol.x.size() != blk.dim())
      throw DimensionMismatch("assemble: solution dimension mismatch");
    st.grad -= blk.B * sol.x;
    st.hess += dual_block_term(blk, sol);
    st.value += dual_value_contribution(sol, blk, t, lambda);
  }

  st.hess_llt.compute(st.hess);
  if (m > 0 && (st.hess_llt.info() != Eigen::Success ||
                !(st.hess.diagonal().minCoeff() > Scalar(0))))
    throw HessianNotPd("assemble: dual curvature is not positive definite");

  // Newton direction with one iterative-refinement pass; keeps the solve
  // residual far below the gradient scale even for ill-conditioned stages.
  st.newton_dir = -st.hess_llt.solve(st.grad);
  if (m > 0) {
    Vector<Scalar> resid = st.hess * st.newton_dir + st.grad;
    st.newton_dir -= st.hess_llt.solve(resid);
  }
  return st;
}

template <typename Scalar>
const Vector<Scalar>& newton_direction(const DualState<Scalar>& st) {
  return st.newton_dir;
}

/// delta(t, lambda) = alpha(t)/2 * sqrt(grad' hess^-1 grad), evaluated from
/// the assembled direction so the two agree numerically.
template <typename Scalar>
Scalar newton_decrement(const DualState<Scalar>& st,
                        const ScConstants<Scalar>& sc) {
  using std::sqrt;
  if (st.grad.size() == 0) return Scalar(0);
  const Scalar quad = std::max(Scalar(0), -st.grad.dot(st.newton_dir));
  return sc.alpha_of_t(st.t) / Scalar(2) * sqrt(quad);
}

}  // namespace ipdd
