#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "ipdd/problem.hpp"

namespace ipdd {

template <typename Scalar>
struct OracleOptions {
  Scalar t0 = 1;
  Scalar grid_factor = Scalar(0.1);
  Scalar gap_tol = Scalar(1e-8);   // stop once t * N_phi <= gap_tol
  Scalar newton_tol = Scalar(1e-8);  // decrement threshold per stage
  int max_newton = 500;
  Scalar boundary_fraction = Scalar(0.99);
};

template <typename Scalar>
struct OracleResult {
  Vector<Scalar> x_star;  // stacked final central point
  Scalar f_star = 0;      // f there; within gap_tol of the true optimum
  std::vector<Scalar> t_grid;
  std::vector<Vector<Scalar>> central_points;
  std::vector<Scalar> kkt_residuals;
};

namespace detail {

// Monolithic view: all equalities stacked into E x = e over the stacked box.
template <typename Scalar>
struct Stacked {
  std::vector<Index> off;
  Index n = 0;
  Matrix<Scalar> E;
  Vector<Scalar> e;
  Box<Scalar> box;
};

template <typename Scalar>
Stacked<Scalar> stack_problem(const SeparableProblem<Scalar>& p) {
  Stacked<Scalar> s;
  const Index N = p.num_blocks();
  s.off.assign(size_t(N) + 1, 0);
  Index rows_local = 0;
  for (Index i = 0; i < N; ++i) {
    s.off[size_t(i)] = s.n;
    s.n += p.blocks[size_t(i)].dim();
    rows_local += p.blocks[size_t(i)].local_rows();
  }
  s.off[size_t(N)] = s.n;
  const Index m = p.coupling_rows();
  s.E = Matrix<Scalar>::Zero(rows_local + m, s.n);
  s.e = Vector<Scalar>(rows_local + m);
  s.box.lower = Vector<Scalar>(s.n);
  s.box.upper = Vector<Scalar>(s.n);
  Index r = 0;
  for (Index i = 0; i < N; ++i) {
    const auto& blk = p.blocks[size_t(i)];
    const Index o = s.off[size_t(i)];
    s.box.lower.segment(o, blk.dim()) = blk.box.lower;
    s.box.upper.segment(o, blk.dim()) = blk.box.upper;
    if (blk.local_rows() > 0) {
      s.E.block(r, o, blk.local_rows(), blk.dim()) = blk.A;
      s.e.segment(r, blk.local_rows()) = blk.a;
      r += blk.local_rows();
    }
  }
  for (Index i = 0; i < N; ++i)
    s.E.block(r, s.off[size_t(i)], m, p.blocks[size_t(i)].dim()) =
        p.blocks[size_t(i)].B;
  s.e.segment(r, m) = p.b;
  return s;
}

// Outcome of one Newton stage: the KKT residual at the returned iterate,
// the gradient norm it should be judged against, and whether the stage
// stopped at the arithmetic floor instead of the decrement target.
template <typename Scalar>
struct StageOutcome {
  Scalar residual = 0;
  Scalar grad_scale = 0;
  bool saturated = false;
};

// One feasible-start Newton stage on f + t*phi over {Ex = e}; x must enter
// strictly interior and E-feasible.
template <typename Scalar>
StageOutcome<Scalar> newton_stage(const SeparableProblem<Scalar>& p,
                                  const Stacked<Scalar>& s, Scalar t,
                                  Vector<Scalar>& x,
                                  const OracleOptions<Scalar>& opts) {
  using std::sqrt;
  const Index N = p.num_blocks();
  const Index rows = s.E.rows();
  const Scalar m_half = derive_sc_constants(p).M_of_t(t) / Scalar(2);
  const Scalar dstar = delta_star<Scalar>();
  Matrix<Scalar> Et = s.E.transpose();

  auto merit = [&](const Vector<Scalar>& z) {
    Scalar v = 0;
    for (Index i = 0; i < N; ++i) {
      const auto& blk = p.blocks[size_t(i)];
      Vector<Scalar> zi = z.segment(s.off[size_t(i)], blk.dim());
      v += value(blk.objective, zi) + t * value(barrier(blk), zi);
    }
    return v;
  };

  Scalar best_delta = std::numeric_limits<Scalar>::max();
  int stall = 0;
  // Best iterate by KKT residual, restored when the stage saturates: once
  // neither the residual nor the decrement improves over a whole window,
  // the computed directions are below the noise of the linear solves and
  // further iterations only wander.
  Scalar best_res = std::numeric_limits<Scalar>::max();
  Scalar best_scale = 0;
  Vector<Scalar> best_x = x;
  int window = 0;
  for (int iter = 0; iter < opts.max_newton; ++iter) {
    Vector<Scalar> g(s.n);
    Vector<Scalar> hg(s.n);
    Matrix<Scalar> W(s.n, rows);
    std::vector<Eigen::LLT<Matrix<Scalar>>> chol(static_cast<size_t>(N));
    Scalar quad = 0;
    for (Index i = 0; i < N; ++i) {
      const auto& blk = p.blocks[size_t(i)];
      const Index o = s.off[size_t(i)];
      const Index ni = blk.dim();
      Evaluation<Scalar> fe = eval(blk.objective, Vector<Scalar>(x.segment(o, ni)));
      Evaluation<Scalar> be = eval(barrier(blk), Vector<Scalar>(x.segment(o, ni)));
      g.segment(o, ni) = fe.grad + t * be.grad;
      chol[size_t(i)].compute(fe.hess + t * be.hess);
      if (chol[size_t(i)].info() != Eigen::Success)
        throw HessianNotPd("oracle: block Hessian factorization failed");
      hg.segment(o, ni) = chol[size_t(i)].solve(g.segment(o, ni));
      W.middleRows(o, ni) = chol[size_t(i)].solve(Et.middleRows(o, ni));
    }

    auto solve_H = [&](const Vector<Scalar>& v) {
      Vector<Scalar> out(s.n);
      for (Index i = 0; i < N; ++i) {
        const Index o = s.off[size_t(i)];
        const Index ni = p.blocks[size_t(i)].dim();
        out.segment(o, ni) = chol[size_t(i)].solve(v.segment(o, ni));
      }
      return out;
    };
    auto apply_H = [&](const Vector<Scalar>& v) {
      Vector<Scalar> out(s.n);
      for (Index i = 0; i < N; ++i) {
        const Index o = s.off[size_t(i)];
        const Index ni = p.blocks[size_t(i)].dim();
        Vector<Scalar> lv =
            chol[size_t(i)].matrixL().transpose() * v.segment(o, ni);
        out.segment(o, ni) = chol[size_t(i)].matrixL() * lv;
      }
      return out;
    };

    // Residual-corrected step (E dx = -(Ex - e), stopping equality drift)
    // with one pass of iterative refinement against the KKT system.
    Vector<Scalar> w(0);
    Vector<Scalar> dx;
    if (rows > 0) {
      // The Schur complement spans many orders of magnitude at deep t and
      // its plain factorization dies. Equilibrate to unit diagonal and add
      // a roundoff-scale ridge; the factor then only preconditions, and
      // the refinement passes below solve against the exact KKT residuals,
      // so the ridge does not bias the step.
      Matrix<Scalar> S = (s.E * W).eval();
      const Vector<Scalar> dsc = S.diagonal().unaryExpr([](Scalar v) {
        return v > Scalar(0) ? Scalar(1) / std::sqrt(v) : Scalar(1);
      });
      S = dsc.asDiagonal() * S * dsc.asDiagonal();
      S.diagonal().array() +=
          Scalar(100) * std::numeric_limits<Scalar>::epsilon();
      Eigen::LDLT<Matrix<Scalar>> schur(S);
      if (schur.info() != Eigen::Success || !schur.isPositive())
        throw HessianNotPd("oracle: Schur factorization failed");
      auto schur_solve = [&](const Vector<Scalar>& v) {
        return Vector<Scalar>(
            dsc.asDiagonal() *
            schur.solve(Vector<Scalar>(dsc.asDiagonal() * v)));
      };
      const Vector<Scalar> rE = s.E * x - s.e;
      w = schur_solve(rE - s.E * hg);
      dx = -(hg + W * w);
      for (int pass = 0; pass < 2; ++pass) {
        Vector<Scalar> r1 = g + apply_H(dx) + Et * w;
        Vector<Scalar> r2 = s.E * dx + rE;
        Vector<Scalar> hr1 = solve_H(r1);
        Vector<Scalar> dw = schur_solve(r2 - s.E * hr1);
        dx -= hr1 + W * dw;
        w += dw;
      }
    } else {
      dx = -hg;
      dx -= solve_H(Vector<Scalar>(g + apply_H(dx)));
    }

    quad = dx.dot(apply_H(dx));

    const Scalar delta = m_half * sqrt(std::max(Scalar(0), quad));
    const Scalar res = rows > 0 ? (g + Et * w).norm() : g.norm();
    if (res < Scalar(0.9) * best_res || delta < Scalar(0.9) * best_delta)
      window = 0;
    else if (++window >= 12) {
      x = best_x;
      return {best_res, best_scale, true};
    }
    if (res < best_res) {
      best_res = res;
      best_scale = g.norm();
      best_x = x;
    }
    // At deep t the decrement target is below the floating-point floor;
    // accept a well-centered iterate once steps stop shrinking the
    // decrement.
    bool at_floor = false;
    if (delta <= Scalar(1e-3) && delta > best_delta / Scalar(2)) {
      at_floor = ++stall >= 3;
    } else {
      stall = 0;
    }
    best_delta = std::min(best_delta, delta);
    if (delta <= opts.newton_tol || at_floor)
      return {res, g.norm(), false};

    const Scalar cap =
        detail::boundary_step(s.box, x, dx, opts.boundary_fraction);
    Scalar sigma;
    if (delta <= dstar) {
      sigma = std::min(Scalar(1), cap);
    } else {
      // Damped phase with certified long steps: a candidate is kept only
      // when it beats the decrease the damped step guarantees. A plain
      // slope test is not enough here; near the boundary it accepts
      // nearly-flat steps that un-contract the decrement and cycle.
      using std::log1p;
      const Scalar guaranteed =
          std::min(Scalar(1) / (Scalar(1) + delta), cap);
      const Scalar mt = Scalar(2) * m_half;
      const Scalar need =
          Scalar(4) / (mt * mt) * (delta - log1p(delta));
      const Scalar f0 = merit(x);
      sigma = std::min(Scalar(1), cap);
      while (sigma > guaranteed) {
        if (merit(x + sigma * dx) <= f0 - need) break;
        sigma /= Scalar(2);
      }
      sigma = std::max(sigma, guaranteed);
    }
    x += sigma * dx;
  }
  x = best_x;
  throw MaxIterExceeded("oracle: Newton budget exhausted");
}

}  // namespace detail

/// Central point of the monolithic barrier problem at parameter t:
///   argmin f(x) + t*phi(x)  over all stacked equalities and box interiors.
/// Independent of the decomposition machinery; used to cross-check it.
template <typename Scalar>
Vector<Scalar> oracle_central_point(const SeparableProblem<Scalar>& p, Scalar t,
                                    const Vector<Scalar>* warm = nullptr,
                                    const OracleOptions<Scalar>& opts = {}) {
  p.validate();
  if (!(t > Scalar(0))) throw Error("oracle: t must be positive");
  detail::Stacked<Scalar> s = detail::stack_problem(p);
  Vector<Scalar> x;
  if (warm && warm->size() == s.n && s.box.contains_strictly(*warm) &&
      (s.E.rows() == 0 || (s.E * *warm - s.e).norm() <=
                              Scalar(1e-8) * (Scalar(1) + s.e.norm()))) {
    x = *warm;
  } else {
    x = equality_interior_point(s.E, s.e, s.box);
  }
  detail::newton_stage(p, s, t, x, opts);
  return x;
}

/// High-accuracy reference optimum: follows the central path on the grid
/// t0, t0*grid_factor, ... until t*N_phi <= gap_tol, warm-starting each
/// stage, and reports the last central point; f there overestimates the
/// true optimum by at most gap_tol. Instances whose Newton systems hit the
/// arithmetic floor before that depth (flat objectives drive the stage
/// conditioning like 1/t^2) stop the grid at the last clean stage and
/// finish by extrapolating f(t) to t = 0, which recovers the limit far
/// below the last stage's own gap bound because f is smooth in t.
template <typename Scalar>
OracleResult<Scalar> oracle_optimum(const SeparableProblem<Scalar>& p,
                                    const OracleOptions<Scalar>& opts = {}) {
  p.validate();
  detail::Stacked<Scalar> s = detail::stack_problem(p);
  const Scalar n_phi = barrier_complexity(p);
  OracleResult<Scalar> out;
  std::vector<Scalar> fs;
  auto f_at = [&](const Vector<Scalar>& z) {
    Scalar v = 0;
    for (Index i = 0; i < p.num_blocks(); ++i)
      v += value(p.blocks[size_t(i)].objective,
                 Vector<Scalar>(
                     z.segment(s.off[size_t(i)], p.blocks[size_t(i)].dim())));
    return v;
  };
  Vector<Scalar> x = equality_interior_point(s.E, s.e, s.box);
  Scalar t = opts.t0;
  bool certified = false;
  for (;;) {
    detail::StageOutcome<Scalar> st;
    try {
      st = detail::newton_stage(p, s, t, x, opts);
    } catch (const MaxIterExceeded&) {
      if (out.t_grid.empty()) throw;
      break;
    }
    if (st.saturated) {
      // Keep the saturated point only if it still meets the bars the
      // converged stages meet; otherwise it would pollute the series.
      const Scalar efeas =
          s.E.rows() > 0 ? (s.E * x - s.e).norm() : Scalar(0);
      if (efeas > Scalar(1e-9) ||
          st.residual > Scalar(1e-9) * (Scalar(1) + st.grad_scale))
        break;
    }
    out.t_grid.push_back(t);
    out.central_points.push_back(x);
    out.kkt_residuals.push_back(st.residual);
    fs.push_back(f_at(x));
    if (t * n_phi <= opts.gap_tol) {
      certified = true;
      break;
    }
    if (st.saturated) break;
    t *= opts.grid_factor;
  }
  if (out.central_points.empty())
    throw MaxIterExceeded("oracle: no stage converged");
  out.x_star = out.central_points.back();
  out.f_star = fs.back();
  if (!certified) {
    // Neville tableau on the last grid points, evaluated at t = 0.
    const size_t m = std::min<size_t>(3, fs.size());
    std::vector<Scalar> tv(out.t_grid.end() - long(m), out.t_grid.end());
    std::vector<Scalar> fv(fs.end() - long(m), fs.end());
    for (size_t j = 1; j < m; ++j)
      for (size_t i = 0; i + j < m; ++i)
        fv[i] = (tv[i + j] * fv[i] - tv[i] * fv[i + 1]) / (tv[i + j] - tv[i]);
    out.f_star = fv[0];
  }
  return out;
}

}  // namespace ipdd
