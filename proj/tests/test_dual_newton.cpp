#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "ipdd/dual_newton.hpp"
#include "ipdd/generators.hpp"
#include "ipdd/rng.hpp"

using ipdd::Block;
using ipdd::BlockSolution;
using ipdd::Box;
using ipdd::DualState;
using ipdd::Index;
using ipdd::Matrix;
using ipdd::ObjectiveFn;
using ipdd::ScConstants;
using ipdd::SeparableProblem;
using ipdd::Vector;

namespace {

std::vector<BlockSolution<double>> solve_all(const SeparableProblem<double>& p,
                                             double t,
                                             const Vector<double>& lambda,
                                             double eps_x = 1e-12) {
  ipdd::SolveBlockOptions<double> opts;
  opts.eps_x = eps_x;
  std::vector<BlockSolution<double>> sols;
  sols.reserve(p.blocks.size());
  for (const auto& blk : p.blocks)
    sols.push_back(ipdd::solve_block<double>(blk, t, lambda, nullptr, opts));
  return sols;
}

DualState<double> state_at(const SeparableProblem<double>& p, double t,
                           const Vector<double>& lambda) {
  return ipdd::assemble(p, t, lambda, solve_all(p, t, lambda));
}

SeparableProblem<double> symmetric_pair() {
  SeparableProblem<double> p;
  for (int i = 0; i < 2; ++i)
    p.blocks.push_back(Block<double>{
        ObjectiveFn<double>::zero(2),
        Box<double>{Vector<double>::Zero(2), Vector<double>::Constant(2, 2.0)},
        Matrix<double>(0, 2), Vector<double>(0),
        Matrix<double>::Identity(2, 2).eval()});
  p.b = Vector<double>::Constant(2, 2.0);
  return p;
}

}  // namespace

TEST_CASE("gradient vanishes when the centers already satisfy the coupling") {
  SeparableProblem<double> p = symmetric_pair();
  DualState<double> st = state_at(p, 1.0, Vector<double>::Zero(2));
  CHECK(st.grad.norm() <= 1e-9);
  CHECK(st.newton_dir.norm() <= 1e-9);
  CHECK(ipdd::newton_decrement(st, ipdd::derive_sc_constants(p)) <= 1e-9);
}

TEST_CASE("identity coupling inverts the local curvature") {
  ipdd::Rng rng(3);
  Matrix<double> G = rng.normal_matrix<double>(3, 3);
  SeparableProblem<double> p;
  p.blocks.push_back(Block<double>{
      ObjectiveFn<double>::quadratic(
          Matrix<double>(G.transpose() * G +
                         Matrix<double>::Identity(3, 3)),
          rng.normal_vector<double>(3)),
      Box<double>{Vector<double>::Zero(3), Vector<double>::Constant(3, 4.0)},
      Matrix<double>(0, 3), Vector<double>(0),
      Matrix<double>::Identity(3, 3).eval()});
  p.b = Vector<double>::Constant(3, 1.5);
  const double t = 0.5;
  Vector<double> lambda = rng.normal_vector<double>(3) * 0.1;
  auto sols = solve_all(p, t, lambda);
  DualState<double> st = ipdd::assemble(p, t, lambda, sols);
  Matrix<double> expected = sols[0].H.inverse();
  CHECK((st.hess - expected).norm() <= 1e-9 * (1.0 + expected.norm()));
}

TEST_CASE("dual gradient and curvature match finite differences") {
  SeparableProblem<double> p =
      ipdd::generate({ipdd::Family::kQuadratic, 2, 4, 3, 21});
  const double t = 0.5;
  const Index m = p.coupling_rows();
  ipdd::Rng rng(7);
  Vector<double> lambda = rng.normal_vector<double>(m) * 0.2;
  DualState<double> st = state_at(p, t, lambda);
  const double h = 1e-4;

  Vector<double> grad_fd(m);
  Matrix<double> hess_fd(m, m);
  for (Index j = 0; j < m; ++j) {
    Vector<double> e = Vector<double>::Unit(m, j);
    DualState<double> up = state_at(p, t, lambda + h * e);
    DualState<double> dn = state_at(p, t, lambda - h * e);
    grad_fd[j] = (up.value - dn.value) / (2 * h);
    hess_fd.col(j) = (up.grad - dn.grad) / (2 * h);
  }
  CHECK((st.grad - grad_fd).norm() <= 1e-5 * (1.0 + st.grad.norm()));
  CHECK((st.hess - hess_fd).norm() <= 1e-4 * (1.0 + st.hess.norm()));
}

TEST_CASE("newton direction solves the curvature system") {
  SeparableProblem<double> p =
      ipdd::generate({ipdd::Family::kQuadratic, 1, 3, 2, 5});
  Vector<double> lambda = Vector<double>::Constant(p.coupling_rows(), 0.1);
  DualState<double> st = state_at(p, 1.0, lambda);
  Vector<double> resid = st.hess * st.newton_dir + st.grad;
  CHECK(resid.norm() <= 1e-10 * (1.0 + st.grad.norm()));
  CHECK(&ipdd::newton_direction(st) == &st.newton_dir);
}

TEST_CASE("decrement follows the scaled norm of the gradient") {
  // 1-d states with known grad and curvature
  DualState<double> st;
  st.t = 1.0;
  st.grad = Vector<double>::Constant(1, 2.0);
  st.hess = Matrix<double>::Constant(1, 1, 4.0);
  st.newton_dir = Vector<double>::Constant(1, -0.5);
  ScConstants<double> sc;  // alpha = 2
  CHECK(ipdd::newton_decrement(st, sc) == doctest::Approx(1.0));
  st.t = 4.0;  // alpha(t) = 2 / sqrt(4) = 1
  CHECK(ipdd::newton_decrement(st, sc) == doctest::Approx(0.5));
}

TEST_CASE("assembly does not depend on block order") {
  SeparableProblem<double> p =
      ipdd::generate({ipdd::Family::kQuadratic, 2, 4, 3, 33});
  Vector<double> lambda = Vector<double>::Constant(p.coupling_rows(), 0.05);
  auto sols = solve_all(p, 1.0, lambda);
  DualState<double> st = ipdd::assemble(p, 1.0, lambda, sols);

  SeparableProblem<double> q;
  q.b = p.b;
  std::vector<BlockSolution<double>> qsols;
  for (size_t i : {2u, 0u, 1u}) {
    q.blocks.push_back(p.blocks[i]);
    qsols.push_back(sols[i]);
  }
  DualState<double> st2 = ipdd::assemble(q, 1.0, lambda, qsols);
  CHECK((st.grad - st2.grad).norm() <= 1e-12 * (1.0 + st.grad.norm()));
  CHECK((st.hess - st2.hess).norm() <= 1e-12 * (1.0 + st.hess.norm()));
  CHECK(st.value == doctest::Approx(st2.value).epsilon(1e-12));
}

TEST_CASE("dimension mismatches are rejected") {
  SeparableProblem<double> p = symmetric_pair();
  auto sols = solve_all(p, 1.0, Vector<double>::Zero(2));
  Vector<double> wrong = Vector<double>::Zero(3);
  Vector<double> right = Vector<double>::Zero(2);
  CHECK_THROWS_AS(ipdd::assemble(p, 1.0, wrong, sols),
                  ipdd::DimensionMismatch);
  sols.pop_back();
  CHECK_THROWS_AS(ipdd::assemble(p, 1.0, right, sols),
                  ipdd::DimensionMismatch);
}

TEST_CASE("directional third derivative obeys the scaled curvature bound") {
  // |D^3 d [h,h,h]| <= M(t) (h' H h)^(3/2) with M(t) = alpha / sqrt(t)
  SeparableProblem<double> p =
      ipdd::generate({ipdd::Family::kQuadratic, 1, 3, 2, 17});
  const Index m = p.coupling_rows();
  const double t = 1.0;
  const double M = 2.0 / std::sqrt(t);
  ipdd::Rng rng(19);
  Vector<double> lambda = rng.normal_vector<double>(m) * 0.1;
  const double s = 1e-4;
  for (int trial = 0; trial < 25; ++trial) {
    Vector<double> h = rng.normal_vector<double>(m);
    h /= h.norm();
    DualState<double> mid = state_at(p, t, lambda);
    DualState<double> up = state_at(p, t, lambda + s * h);
    DualState<double> dn = state_at(p, t, lambda - s * h);
    const double quad = h.dot(mid.hess * h);
    const double third =
        (h.dot(up.hess * h) - h.dot(dn.hess * h)) / (2 * s);
    CHECK(std::abs(third) <=
          M * std::pow(quad, 1.5) * (1.0 + 1e-3) + 1e-9);
  }
}

TEST_CASE("gradient drift in t obeys the barrier complexity bound") {
  // |<d/dt grad, h>| <= sqrt(N_phi / t) * sqrt(h' H h)
  SeparableProblem<double> p =
      ipdd::generate({ipdd::Family::kQuadratic, 1, 3, 2, 29});
  const Index m = p.coupling_rows();
  const double nphi = double(ipdd::barrier_complexity(p));
  ipdd::Rng rng(31);
  Vector<double> lambda = rng.normal_vector<double>(m) * 0.1;
  for (double t : {1.0, 0.25, 0.04}) {
    const double dt = 1e-4 * t;
    DualState<double> mid = state_at(p, t, lambda);
    DualState<double> up = state_at(p, t + dt, lambda);
    DualState<double> dn = state_at(p, t - dt, lambda);
    Vector<double> drift = (up.grad - dn.grad) / (2 * dt);
    for (int trial = 0; trial < 10; ++trial) {
      Vector<double> h = rng.normal_vector<double>(m);
      h /= h.norm();
      const double quad = h.dot(mid.hess * h);
      CHECK(std::abs(h.dot(drift)) <=
            std::sqrt(nphi / t) * std::sqrt(quad) * (1.0 + 1e-3) + 1e-9);
    }
  }
}
