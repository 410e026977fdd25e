#pragma once

#include <chrono>
#include <cmath>
#include <vector>

#include "ipdd/block_solver.hpp"
#include "ipdd/path_following.hpp"
#include "ipdd/problem.hpp"

namespace ipdd {

template <typename Scalar>
struct AdiConfig {
  Scalar penalty = 1;      // rho
  Scalar ascent_step = 1;  // multiplier step scale (times penalty)
  Scalar tol = Scalar(1e-4);  // stop: ||Bx-b|| <= tol and |f change| <= tol
  Scalar barrier_t = Scalar(1e-6);  // micro-barrier keeping iterates interior
  long max_sweeps = 100000;
  SolveBlockOptions<Scalar> block;
};

template <typename Scalar>
struct AdiReport {
  std::vector<Vector<Scalar>> x_final;
  Vector<Scalar> lambda_final;
  Scalar objective = 0;
  Scalar primal_residual = 0;
  long sweeps = 0;
  long fct_evals = 0;  // one per Gauss-Seidel sweep
  std::vector<Scalar> residual_trace;
  std::vector<Scalar> objective_trace;
  double wall_time_s = 0;
  SolveStatus status = SolveStatus::kSuccess;
};

/// Alternating-direction baseline: cyclic Gauss-Seidel over the blocks on
/// the augmented Lagrangian
///   sum_i f_i + <lambda, Bx - b> + rho/2 ||Bx - b||^2
/// (each block solve carries the micro-barrier barrier_t to stay interior),
/// followed by the multiplier ascent lambda += ascent*rho*(Bx - b) per
/// sweep. The block pass is inherently sequential, so only the inner block
/// solves could parallelize; this implementation runs them in order.
template <typename Scalar>
AdiReport<Scalar> try_adi_solve(const SeparableProblem<Scalar>& p,
                                const AdiConfig<Scalar>& cfg = {}) {
  using clock = std::chrono::steady_clock;
  const auto t_start = clock::now();
  p.validate();
  if (!(cfg.penalty > Scalar(0))) throw Error("adi: penalty must be positive");
  if (!(cfg.barrier_t > Scalar(0)))
    throw Error("adi: barrier_t must be positive");

  const Index N = p.num_blocks();
  const Index m = p.coupling_rows();
  AdiReport<Scalar> rep;

  std::vector<Vector<Scalar>> x(static_cast<size_t>(N));
  std::vector<Matrix<Scalar>> quad(static_cast<size_t>(N));
  Vector<Scalar> bx = Vector<Scalar>::Zero(m);  // running sum B_i x_i
  for (Index i = 0; i < N; ++i) {
    const auto& blk = p.blocks[size_t(i)];
    x[size_t(i)] = find_interior_point(blk);
    quad[size_t(i)] = cfg.penalty * (blk.B.transpose() * blk.B);
    bx += blk.B * x[size_t(i)];
  }
  Vector<Scalar> lambda = Vector<Scalar>::Zero(m);

  Scalar f_prev = objective_value(p, x);
  rep.status = SolveStatus::kMaxOuter;
  for (long sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
    for (Index i = 0; i < N; ++i) {
      const auto& blk = p.blocks[size_t(i)];
      // penalty linearization against the other blocks' current iterates
      Vector<Scalar> r_other = bx - blk.B * x[size_t(i)] - p.b;
      Vector<Scalar> lin = blk.B.transpose() * (lambda + cfg.penalty * r_other);
      BlockSolution<Scalar> sol = solve_block_shifted(
          blk, cfg.barrier_t, lin, &quad[size_t(i)], &x[size_t(i)], cfg.block);
      bx += blk.B * (sol.x - x[size_t(i)]);
      x[size_t(i)] = sol.x;
    }
    ++rep.sweeps;
    ++rep.fct_evals;
    lambda += cfg.ascent_step * cfg.penalty * (bx - p.b);

    const Scalar resid = (bx - p.b).norm();
    const Scalar f_cur = objective_value(p, x);
    rep.residual_trace.push_back(resid);
    rep.objective_trace.push_back(f_cur);
    const Scalar df = std::abs(f_cur - f_prev);
    f_prev = f_cur;
    if (resid <= cfg.tol && df <= cfg.tol) {
      rep.status = SolveStatus::kSuccess;
      break;
    }
  }

  rep.x_final = std::move(x);
  rep.lambda_final = std::move(lambda);
  rep.objective = f_prev;
  rep.primal_residual = (bx - p.b).norm();
  rep.wall_time_s =
      std::chrono::duration<double>(clock::now() - t_start).count();
  return rep;
}

template <typename Scalar>
AdiReport<Scalar> adi_solve(const SeparableProblem<Scalar>& p,
                            const AdiConfig<Scalar>& cfg = {}) {
  AdiReport<Scalar> rep = try_adi_solve(p, cfg);
  if (rep.status != SolveStatus::kSuccess)
    throw MaxIterExceeded("adi: sweep budget exhausted");
  return rep;
}

}  // namespace ipdd
