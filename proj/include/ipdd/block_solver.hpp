#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <vector>

#include "ipdd/problem.hpp"

namespace ipdd {

template <typename Scalar>
struct BlockIterRecord {
  Scalar kkt_residual;    // ||grad + A' nu|| before the step
  Scalar sigma;           // applied step length (0 on the final check)
  Scalar local_residual;  // ||A x - a||
};

template <typename Scalar>
struct SolveBlockOptions {
  /// Inexactness target: iterate until ||grad + A'nu|| <= t * eps_x.
  /// At very small t this target can drop below what double precision can
  /// attain, so the solver also accepts once full Newton steps stop
  /// improving the residual (a roundoff-floor stagnation rule).
  Scalar eps_x = Scalar(1e-8);
  int max_iter = 200;
  Scalar boundary_fraction = Scalar(0.99);
  std::vector<BlockIterRecord<Scalar>>* iterate_log = nullptr;
};

/// Result of one block subproblem min f + t*phi + <q, x> over {Ax = a} in
/// the box interior. Keeps the final Hessian factorization and the Schur
/// complement factor (A H^-1 A'), which the dual assembly reuses.
template <typename Scalar>
struct BlockSolution {
  Vector<Scalar> x;
  Vector<Scalar> nu;  // local equality multipliers, empty when A is empty
  Matrix<Scalar> H;   // Hessian of f + t*phi (+ shift) at x
  Eigen::LLT<Matrix<Scalar>> chol_H;
  std::optional<Eigen::LLT<Matrix<Scalar>>> chol_S;
  Scalar kkt_residual = 0;
  int inner_iters = 0;
};

/// Solves min f(x) + t*phi(x) + shift_lin'x + x'shift_quad x / 2 over
/// {x : Ax = a} in the box interior by damped Newton with a
/// fraction-to-boundary cap. The shift generalization serves both the dual
/// subproblem (shift_lin = B'lambda) and penalty-linearized variants.
template <typename Scalar>
BlockSolution<Scalar> solve_block_shifted(
    const Block<Scalar>& blk, Scalar t, const Vector<Scalar>& shift_lin,
    const Matrix<Scalar>* shift_quad, const Vector<Scalar>* warm_start,
    const SolveBlockOptions<Scalar>& opts = {}) {
  using std::sqrt;
  if (!(t > Scalar(0))) throw Error("solve_block: t must be positive");
  const Index n = blk.dim();
  const Index mi = blk.local_rows();
  if (shift_lin.size() != n)
    throw DimensionMismatch("solve_block: shift size mismatch");
  if (shift_quad && (shift_quad->rows() != n || shift_quad->cols() != n))
    throw DimensionMismatch("solve_block: shift_quad shape mismatch");

  const BoxLogBarrier<Scalar> phi = barrier(blk);
  const Scalar alpha_i = sc_alpha(blk.objective);
  const Scalar dstar = delta_star<Scalar>();
  const Scalar eps_mach = std::numeric_limits<Scalar>::epsilon();
  const Scalar a_scale = Scalar(1) + blk.a.norm();

  Vector<Scalar> x;
  if (warm_start && warm_start->size() == n &&
      blk.box.contains_strictly(*warm_start) &&
      (mi == 0 ||
       (blk.A * *warm_start - blk.a).norm() <= Scalar(1e-8) * a_scale)) {
    x = *warm_start;
  } else {
    x = find_interior_point(blk);
  }

  BlockSolution<Scalar> sol;
  Scalar best_res = std::numeric_limits<Scalar>::max();
  int stall = 0;
  Scalar prev_sigma = 0;
  for (int iter = 0; iter <= opts.max_iter; ++iter) {
    Evaluation<Scalar> fe = eval(blk.objective, x);
    Evaluation<Scalar> be = eval(phi, x);
    Vector<Scalar> g = fe.grad + t * be.grad + shift_lin;
    Matrix<Scalar> H = fe.hess + t * be.hess;
    Scalar g_scale = fe.grad.norm() + t * be.grad.norm() + shift_lin.norm();
    if (shift_quad) {
      Vector<Scalar> qx = *shift_quad * x;
      g += qx;
      H += *shift_quad;
      g_scale += qx.norm();
    }

    Eigen::LLT<Matrix<Scalar>> chol_H(H);
    if (chol_H.info() != Eigen::Success)
      throw HessianNotPd("solve_block: Hessian factorization failed");

    Vector<Scalar> hg = chol_H.solve(g);
    Vector<Scalar> r = g;
    Vector<Scalar> dx;
    std::optional<Eigen::LLT<Matrix<Scalar>>> chol_S;
    Vector<Scalar> nu(0);
    if (mi > 0) {
      Matrix<Scalar> HinvAt = chol_H.solve(Matrix<Scalar>(blk.A.transpose()));
      Eigen::LLT<Matrix<Scalar>> schur((blk.A * HinvAt).eval());
      if (schur.info() != Eigen::Success)
        throw HessianNotPd("solve_block: Schur factorization failed");
      // residual-corrected step: A dx = -(Ax - a) keeps local feasibility
      // pinned instead of letting roundoff drift accumulate
      nu = schur.solve(blk.A * x - blk.a - blk.A * hg);
      dx = -(hg + HinvAt * nu);
      // one refinement pass on the KKT solve; near-boundary states push
      // kappa(H) high enough that the raw solve floors orders of magnitude
      // above what the factors can actually deliver
      {
        Vector<Scalar> r1 = g + H * dx + blk.A.transpose() * nu;
        Vector<Scalar> r2 = blk.A * (x + dx) - blk.a;
        Vector<Scalar> h1 = chol_H.solve(r1);
        Vector<Scalar> dnu = schur.solve(r2 - blk.A * h1);
        dx -= h1 + HinvAt * dnu;
        nu += dnu;
      }
      r = g + blk.A.transpose() * nu;
      g_scale += (blk.A.transpose() * nu).norm();
      chol_S.emplace(std::move(schur));
    } else {
      dx = -hg;
      dx -= chol_H.solve(Vector<Scalar>(g + H * dx));
    }

    const Scalar res = r.norm();
    const Scalar floor = Scalar(50) * eps_mach * g_scale;
    // Full Newton steps contract the residual geometrically anywhere above
    // the floating-point floor, so a run of full steps without real
    // progress means no smaller residual is attainable in this arithmetic;
    // accept instead of burning the budget. The floor itself shifts with
    // kappa(H) (near-boundary states chatter orders of magnitude above
    // eps), which is why this is a progress test and not a magnitude test.
    // Damped or boundary-capped steps never count toward the stall.
    if (res < Scalar(0.9) * best_res)
      stall = 0;
    else if (prev_sigma >= Scalar(0.9))
      ++stall;
    best_res = std::min(best_res, res);
    const bool at_floor = stall >= 8;
    if (res <= std::max(t * opts.eps_x, floor) || at_floor) {
      if (opts.iterate_log)
        opts.iterate_log->push_back(
            {res, Scalar(0), mi > 0 ? (blk.A * x - blk.a).norm() : Scalar(0)});
      sol.x = std::move(x);
      sol.nu = std::move(nu);
      sol.H = std::move(H);
      sol.chol_H = std::move(chol_H);
      sol.chol_S = std::move(chol_S);
      sol.kkt_residual = res;
      sol.inner_iters = iter;
      return sol;
    }

    const Scalar delta =
        alpha_i / sqrt(t) / Scalar(2) *
        sqrt(std::max(Scalar(0), Scalar(dx.dot(H * dx))));
    const Scalar cap =
        detail::boundary_step(blk.box, x, dx, opts.boundary_fraction);
    Scalar sigma;
    if (delta <= dstar) {
      sigma = std::min(Scalar(1), cap);
    } else {
      // Damped phase with certified long steps. The guaranteed step
      // 1/(1+delta) shrinks with t and would crawl on cold starts at small
      // t, so try the boundary-capped full step and backtrack, keeping a
      // candidate only when it beats the decrease the damped step
      // guarantees. A plain slope test is not enough here; near the
      // boundary it accepts nearly-flat steps that un-contract the
      // decrement and cycle.
      using std::log1p;
      const Scalar guaranteed =
          std::min(Scalar(1) / (Scalar(1) + delta), cap);
      const Scalar need = Scalar(4) * t / (alpha_i * alpha_i) *
                          (delta - log1p(delta));
      auto merit = [&](const Vector<Scalar>& z) {
        Scalar v = value(blk.objective, z) + t * value(phi, z) +
                   shift_lin.dot(z);
        if (shift_quad) v += z.dot(*shift_quad * z) / Scalar(2);
        return v;
      };
      const Scalar f0 = merit(x);
      sigma = std::min(Scalar(1), cap);
      while (sigma > guaranteed) {
        if (merit(x + sigma * dx) <= f0 - need) break;
        sigma /= Scalar(2);
      }
      sigma = std::max(sigma, guaranteed);
    }
    if (opts.iterate_log)
      opts.iterate_log->push_back(
          {res, sigma, mi > 0 ? (blk.A * x - blk.a).norm() : Scalar(0)});
    x += sigma * dx;
    prev_sigma = sigma;
  }
  throw MaxIterExceeded("solve_block: iteration budget exhausted");
}

/// Dual subproblem of one block at multiplier lambda:
///   min f(x) + t*phi(x) + <B'lambda, x>  over  {Ax = a} in the box interior.
template <typename Scalar>
BlockSolution<Scalar> solve_block(const Block<Scalar>& blk, Scalar t,
                                  const Vector<Scalar>& lambda,
                                  const Vector<Scalar>* warm_start = nullptr,
                                  const SolveBlockOptions<Scalar>& opts = {}) {
  if (lambda.size() != blk.coupling_rows())
    throw DimensionMismatch("solve_block: lambda size mismatch");
  return solve_block_shifted<Scalar>(blk, t,
                                     Vector<Scalar>(blk.B.transpose() * lambda),
                                     nullptr, warm_start, opts);
}

/// Block contribution to the smoothed dual value:
///   d_i(t, lambda) = -f(x) - t*phi(x) - <lambda, B x>  at the minimizer x.
template <typename Scalar>
Scalar dual_value_contribution(const BlockSolution<Scalar>& sol,
                               const Block<Scalar>& blk, Scalar t,
                               const Vector<Scalar>& lambda) {
  return -value(blk.objective, sol.x) - t * value(barrier(blk), sol.x) -
         lambda.dot(blk.B * sol.x);
}

}  // namespace ipdd
