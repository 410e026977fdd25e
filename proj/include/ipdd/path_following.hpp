#pragma once

#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "ipdd/dual_newton.hpp"
#include "ipdd/parallel.hpp"
#include "ipdd/problem.hpp"

namespace ipdd {

enum class StepMode { kShortStep, kLongStep };

enum class SolveStatus { kSuccess, kMaxOuter, kMaxInner, kStalled };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kSuccess: return "success";
    case SolveStatus::kMaxOuter: return "max_outer";
    case SolveStatus::kMaxInner: return "max_inner";
    case SolveStatus::kStalled: return "stalled";
  }
  return "unknown";
}

enum class TracePhase { kInit, kInner, kPolish };

inline const char* to_string(TracePhase p) {
  switch (p) {
    case TracePhase::kInit: return "init";
    case TracePhase::kInner: return "inner";
    case TracePhase::kPolish: return "polish";
  }
  return "unknown";
}

/// One dual evaluation along the run. `sigma`/`stepped` describe the Newton
/// step taken FROM this state (sigma = 0 when the loop stopped here), so a
/// consecutive pair at equal t exposes the per-step decrease and the
/// decrement contraction directly.
template <typename Scalar>
struct TraceRecord {
  long outer_k = 0;
  TracePhase phase = TracePhase::kInit;
  Scalar t = 0;
  Scalar delta = 0;
  Scalar value = 0;
  Scalar grad_norm = 0;
  Scalar sigma = 0;
  bool stepped = false;
};

template <typename Scalar>
struct PathConfig {
  Scalar t0 = 1;
  Vector<Scalar> lambda0;  // empty = zeros
  Scalar eps = Scalar(1e-4);
  Scalar eps_V = delta_star<Scalar>() / 2;
  Scalar tau = Scalar(0.85);  // ignored in short-step mode
  StepMode mode = StepMode::kLongStep;
  long max_outer = 10000;
  long max_inner = 100;  // re-centering budget per stage
  Scalar feas_tol = Scalar(1e-6);  // coupling tolerance, relative to 1+||b||
  long max_polish = 60;
  SolveBlockOptions<Scalar> block;
  int threads = 0;  // 0 = hardware concurrency
};

template <typename Scalar>
struct SolveReport {
  std::vector<Vector<Scalar>> x_final;
  Vector<Scalar> lambda_final;
  Scalar t_final = 0;
  Scalar gap_bound = 0;  // t_final * N_phi, certified bound on f(x) - f*
  Scalar primal_residual = 0;
  Scalar objective = 0;
  long outer_iters = 0;
  long inner_iters_total = 0;
  long fct_evals = 0;  // parallel block-solve sweeps
  std::vector<TraceRecord<Scalar>> trace;
  double wall_time_s = 0;
  SolveStatus status = SolveStatus::kSuccess;
};

/// Two-branch damped-step rule: full step at or below delta*, else
/// 1/(1+delta).
template <typename Scalar>
Scalar step_size(Scalar delta) {
  return delta > delta_star<Scalar>() ? Scalar(1) / (Scalar(1) + delta)
                                      : Scalar(1);
}

/// Barrier decrease factor tau = 2c/(2c+1) with c = 1/4 + 2 xi/delta* + eta
/// that keeps a single full Newton step per stage sufficient.
template <typename Scalar>
Scalar short_step_factor(const ScConstants<Scalar>& sc) {
  const Scalar c = Scalar(0.25) + Scalar(2) * sc.xi / delta_star<Scalar>() +
                   sc.eta;
  return Scalar(2) * c / (Scalar(2) * c + Scalar(1));
}

template <typename Scalar>
Scalar certified_gap(const SolveReport<Scalar>& rep) {
  return rep.gap_bound;
}

namespace detail {

// Owns the warm starts and the evaluation counter shared by every sweep of
// one run. An evaluation is one parallel block-solve sweep plus assembly.
template <typename Scalar>
class PathDriver {
 public:
  PathDriver(const SeparableProblem<Scalar>& p, const PathConfig<Scalar>& cfg)
      : p_(p), cfg_(cfg), sc_(derive_sc_constants(p)) {
    warm_.resize(size_t(p.num_blocks()));
    sols_.resize(size_t(p.num_blocks()));
  }

  DualState<Scalar> evaluate(Scalar t, const Vector<Scalar>& lambda) {
    parallel_for(p_.num_blocks(), cfg_.threads, [&](Index i) {
      const Vector<Scalar>* w =
          warm_[size_t(i)].size() > 0 ? &warm_[size_t(i)] : nullptr;
      sols_[size_t(i)] =
          solve_block(p_.blocks[size_t(i)], t, lambda, w, cfg_.block);
      warm_[size_t(i)] = sols_[size_t(i)].x;
    });
    ++fct_evals_;
    DualState<Scalar> st = assemble(p_, t, lambda, sols_);
    st.fct_evals = fct_evals_;
    st.decrement = newton_decrement(st, sc_);
    return st;
  }

  const ScConstants<Scalar>& sc() const { return sc_; }
  const std::vector<Vector<Scalar>>& warm() const { return warm_; }
  long fct_evals() const { return fct_evals_; }

 private:
  const SeparableProblem<Scalar>& p_;
  const PathConfig<Scalar>& cfg_;
  ScConstants<Scalar> sc_;
  std::vector<Vector<Scalar>> warm_;
  std::vector<BlockSolution<Scalar>> sols_;
  long fct_evals_ = 0;
};

}  // namespace detail

template <typename Scalar>
struct CenterResult {
  Vector<Scalar> lambda;
  DualState<Scalar> state;
  long iters = 0;
};

/// Centers the smoothed dual at fixed t: damped Newton from lambda_init
/// until the decrement drops to eps_V. Throws MaxIterExceeded when `budget`
/// steps do not suffice.
template <typename Scalar>
CenterResult<Scalar> center(const SeparableProblem<Scalar>& p, Scalar t,
                            const Vector<Scalar>& lambda_init, Scalar eps_V,
                            long budget, const PathConfig<Scalar>& cfg = {}) {
  p.validate();
  if (!(t > Scalar(0))) throw Error("center: t must be positive");
  detail::PathDriver<Scalar> driver(p, cfg);
  CenterResult<Scalar> out;
  out.lambda = lambda_init;
  out.state = driver.evaluate(t, out.lambda);
  while (out.state.decrement > eps_V) {
    if (out.iters >= budget)
      throw MaxIterExceeded("center: budget exhausted at decrement " +
                            std::to_string(double(out.state.decrement)));
    out.lambda += step_size(out.state.decrement) * out.state.newton_dir;
    out.state = driver.evaluate(t, out.lambda);
    ++out.iters;
  }
  return out;
}

/// Path-following solve of the separable program. Algorithmic shape:
///  1. center the smoothed dual at t0,
///  2. repeat t <- tau*t followed by re-centering (long-step: damped Newton
///     until the decrement reaches eps_V; short-step: exactly one Newton
///     step, with tau from short_step_factor) until t*N_phi <= eps,
///  3. polish at the final t until the coupling residual meets feas_tol.
/// Never throws for budget exhaustion; the report carries the status.
template <typename Scalar>
SolveReport<Scalar> try_solve(const SeparableProblem<Scalar>& p,
                              const PathConfig<Scalar>& cfg = {}) {
  using clock = std::chrono::steady_clock;
  const auto t_start = clock::now();

  p.validate();
  if (!(cfg.t0 > Scalar(0))) throw Error("solve: t0 must be positive");
  if (!(cfg.eps > Scalar(0))) throw Error("solve: eps must be positive");
  if (cfg.mode == StepMode::kLongStep &&
      !(cfg.tau > Scalar(0) && cfg.tau < Scalar(1)))
    throw Error("solve: tau must lie in (0, 1)");

  detail::PathDriver<Scalar> driver(p, cfg);
  const Scalar n_phi = barrier_complexity(p);
  const Scalar tau = cfg.mode == StepMode::kShortStep
                         ? short_step_factor(driver.sc())
                         : cfg.tau;
  const Scalar eps_V = cfg.mode == StepMode::kShortStep
                           ? delta_star<Scalar>() / 2
                           : cfg.eps_V;

  SolveReport<Scalar> rep;
  Vector<Scalar> lambda;
  if (cfg.lambda0.size() > 0) {
    if (cfg.lambda0.size() != p.coupling_rows())
      throw DimensionMismatch("solve: lambda0 size mismatch");
    lambda = cfg.lambda0;
  } else {
    lambda = Vector<Scalar>::Zero(p.coupling_rows());
  }

  auto push_trace = [&](const DualState<Scalar>& st, long k, TracePhase ph) {
    rep.trace.push_back({k, ph, st.t, st.decrement, st.value, st.grad.norm(),
                         Scalar(0), false});
  };
  auto take_step = [&](DualState<Scalar>& st, long k, TracePhase ph) {
    Scalar sigma = step_size(st.decrement);
    bool moved = false;
    if (st.decrement > delta_star<Scalar>()) {
      // Certified long step: probe the full Newton step and keep it only
      // when its realized decrease beats the guarantee of the damped step
      // it replaces. Accepted or not, every step the loop takes satisfies
      // the damped-phase decrease bound; the probe merely spends one extra
      // evaluation when it fails, and saves several when it lands.
      using std::log1p;
      const Scalar at = driver.sc().alpha_of_t(st.t);
      const Scalar need = Scalar(4) * st.t / (at * at) *
                          (st.decrement - log1p(st.decrement));
      Vector<Scalar> cand = lambda + st.newton_dir;
      try {
        DualState<Scalar> stc = driver.evaluate(st.t, cand);
        if (stc.value - st.value <= -need) {
          sigma = Scalar(1);
          lambda = std::move(cand);
          st = std::move(stc);
          moved = true;
        }
      } catch (const Error&) {
        // unevaluable probe point; fall back to the guaranteed step
      }
    }
    rep.trace.back().sigma = sigma;
    rep.trace.back().stepped = true;
    if (!moved) {
      lambda += sigma * st.newton_dir;
      st = driver.evaluate(st.t, lambda);
    }
    push_trace(st, k, ph);
    ++rep.inner_iters_total;
  };

  Scalar t = cfg.t0;
  DualState<Scalar> st = driver.evaluate(t, lambda);
  push_trace(st, 0, TracePhase::kInit);

  // initial centering at t0
  {
    long iters = 0;
    while (st.decrement > eps_V) {
      if (iters++ >= cfg.max_inner) {
        rep.status = SolveStatus::kMaxInner;
        break;
      }
      take_step(st, 0, TracePhase::kInit);
    }
  }

  long k = 0;
  if (rep.status == SolveStatus::kSuccess) {
    while (t * n_phi > cfg.eps) {
      if (k >= cfg.max_outer) {
        rep.status = SolveStatus::kMaxOuter;
        break;
      }
      t *= tau;
      ++k;
      st = driver.evaluate(t, lambda);
      push_trace(st, k, TracePhase::kInner);
      if (cfg.mode == StepMode::kShortStep) {
        if (st.newton_dir.size() > 0) {
          take_step(st, k, TracePhase::kInner);
        }
      } else {
        long iters = 0;
        while (st.decrement > eps_V) {
          if (iters++ >= cfg.max_inner) {
            rep.status = SolveStatus::kMaxInner;
            break;
          }
          take_step(st, k, TracePhase::kInner);
        }
        if (rep.status != SolveStatus::kSuccess) break;
      }
    }
  }

  // polish: drive the coupling residual to tolerance at the final t
  if (rep.status == SolveStatus::kSuccess) {
    const Scalar btol = cfg.feas_tol * (Scalar(1) + p.b.norm());
    long polish = 0;
    while (st.grad.norm() > btol || st.decrement > eps_V) {
      // own entry record so the stamp below never lands on a stage record
      if (polish == 0) push_trace(st, k, TracePhase::kPolish);
      if (polish++ >= cfg.max_polish) {
        rep.status = SolveStatus::kStalled;
        break;
      }
      take_step(st, k, TracePhase::kPolish);
    }
  }

  rep.x_final = driver.warm();
  rep.lambda_final = lambda;
  rep.t_final = t;
  rep.gap_bound = t * n_phi;
  rep.primal_residual = st.grad.norm();
  rep.objective = objective_value(p, rep.x_final);
  rep.outer_iters = k;
  rep.fct_evals = driver.fct_evals();
  rep.wall_time_s =
      std::chrono::duration<double>(clock::now() - t_start).count();
  return rep;
}

/// Throwing wrapper around try_solve: budget exhaustion surfaces as
/// MaxIterExceeded instead of a flagged report.
template <typename Scalar>
SolveReport<Scalar> solve(const SeparableProblem<Scalar>& p,
                          const PathConfig<Scalar>& cfg = {}) {
  SolveReport<Scalar> rep = try_solve(p, cfg);
  if (rep.status != SolveStatus::kSuccess)
    throw MaxIterExceeded(std::string("solve: ") + to_string(rep.status));
  return rep;
}

}  // namespace ipdd
