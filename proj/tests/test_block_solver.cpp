#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "ipdd/block_solver.hpp"
#include "ipdd/rng.hpp"

using ipdd::Block;
using ipdd::BlockSolution;
using ipdd::Box;
using ipdd::Index;
using ipdd::Matrix;
using ipdd::ObjectiveFn;
using ipdd::SolveBlockOptions;
using ipdd::Vector;

namespace {

Vector<double> vec1(double a) {
  Vector<double> v(1);
  v << a;
  return v;
}

Vector<double> zeros(Index n) {
  Vector<double> v(n);
  v.setZero();
  return v;
}

Block<double> free_block(ObjectiveFn<double> obj, double lo, double up) {
  const Index n = obj.dim();
  return Block<double>{std::move(obj),
                       Box<double>{Vector<double>::Constant(n, lo),
                                   Vector<double>::Constant(n, up)},
                       Matrix<double>(0, n), Vector<double>(0),
                       Matrix<double>::Identity(n, n).eval()};
}

Block<double> random_equality_block(ipdd::Rng& rng, Index m, Index n) {
  Matrix<double> G = rng.normal_matrix<double>(m, n);
  Matrix<double> Q = G.transpose() * G +
                     0.5 * Matrix<double>::Identity(n, n);
  Matrix<double> A = rng.normal_matrix<double>(m, n);
  Vector<double> xhat = rng.uniform_vector<double>(n, 0.2, 0.8);
  return Block<double>{
      ObjectiveFn<double>::quadratic(Q, rng.normal_vector<double>(n)),
      Box<double>{Vector<double>::Zero(n), Vector<double>::Ones(n)}, A,
      Vector<double>(A * xhat), Matrix<double>::Identity(n, n).eval()};
}

}  // namespace

TEST_CASE("barrier-only block lands on the box center") {
  Block<double> blk = free_block(ObjectiveFn<double>::zero(2), 0.0, 2.0);
  BlockSolution<double> sol =
      ipdd::solve_block(blk, 0.7, zeros(2));
  CHECK((sol.x - Vector<double>::Constant(2, 1.0)).norm() <= 1e-9);
  CHECK(sol.nu.size() == 0);
  CHECK_FALSE(sol.chol_S.has_value());
  CHECK(sol.kkt_residual <= 1e-8);
}

TEST_CASE("centered quadratic keeps its minimizer") {
  // f(x) = (x-1)^2/2 has the same stationary point as the barrier on [0,2]
  Block<double> blk = free_block(
      ObjectiveFn<double>::quadratic(Matrix<double>::Identity(1, 1),
                                     vec1(-1.0)),
      0.0, 2.0);
  BlockSolution<double> sol =
      ipdd::solve_block(blk, 1.0, zeros(1));
  CHECK(sol.x[0] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("linear objective balances against the barrier") {
  // stationarity 1 + 1/(2-x) - 1/x = 0 on (0,2) has the root 2 - sqrt(2)
  Block<double> blk = free_block(ObjectiveFn<double>::linear(vec1(1.0)),
                                 0.0, 2.0);
  BlockSolution<double> sol =
      ipdd::solve_block(blk, 1.0, zeros(1));
  const double root = 2.0 - std::sqrt(2.0);
  CHECK(sol.x[0] == doctest::Approx(root).epsilon(1e-8));
  CHECK(std::abs(1.0 + 1.0 / (2.0 - sol.x[0]) - 1.0 / sol.x[0]) <= 1e-7);

  // the dual contribution at the minimizer, against the closed form
  const double expected =
      -root + std::log(2.0 - root) + std::log(root);
  CHECK(ipdd::dual_value_contribution(sol, blk, 1.0,
                                      zeros(1)) ==
        doctest::Approx(expected).epsilon(1e-8));
}

TEST_CASE("dual contribution reduces to the barrier term at lambda zero") {
  Block<double> blk = free_block(ObjectiveFn<double>::zero(2), 0.0, 4.0);
  const double t = 0.5;
  BlockSolution<double> sol =
      ipdd::solve_block(blk, t, zeros(2));
  const double expected = -t * ipdd::value(ipdd::barrier(blk), sol.x);
  CHECK(ipdd::dual_value_contribution(sol, blk, t, zeros(2)) ==
        doctest::Approx(expected));

  // two identical blocks contribute identically
  BlockSolution<double> sol2 =
      ipdd::solve_block(blk, t, zeros(2));
  CHECK(ipdd::dual_value_contribution(sol, blk, t, zeros(2)) ==
        ipdd::dual_value_contribution(sol2, blk, t, zeros(2)));
}

TEST_CASE("coupling shift enters the optimality system") {
  ipdd::Rng rng(2);
  Block<double> blk = free_block(
      ObjectiveFn<double>::quadratic(Matrix<double>::Identity(2, 2),
                                     rng.normal_vector<double>(2)),
      0.0, 3.0);
  Vector<double> lambda(2);
  lambda << 0.3, -0.2;
  const double t = 0.25;
  BlockSolution<double> sol = ipdd::solve_block(blk, t, lambda);
  Vector<double> grad = ipdd::eval(blk.objective, sol.x).grad +
                        t * ipdd::eval(ipdd::barrier(blk), sol.x).grad +
                        blk.B.transpose() * lambda;
  CHECK(grad.norm() <= 1e-7);
  CHECK(sol.kkt_residual <= std::max(t * 1e-8, 1e-10));
  // stored Hessian is the curvature of f + t*phi at the solution
  Matrix<double> H = ipdd::eval(blk.objective, sol.x).hess +
                     t * ipdd::eval(ipdd::barrier(blk), sol.x).hess;
  CHECK((sol.H - H).norm() <= 1e-12 * (1.0 + H.norm()));
}

TEST_CASE("local equalities hold at every inner iterate") {
  ipdd::Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    Block<double> blk = random_equality_block(rng, 2, 5);
    std::vector<ipdd::BlockIterRecord<double>> log;
    SolveBlockOptions<double> opts;
    opts.iterate_log = &log;
    Vector<double> lambda = rng.normal_vector<double>(5);
    BlockSolution<double> sol =
        ipdd::solve_block<double>(blk, 0.5, lambda, nullptr, opts);
    REQUIRE(!log.empty());
    for (const auto& rec : log) CHECK(rec.local_residual <= 1e-9);
    CHECK((blk.A * sol.x - blk.a).norm() <= 1e-9);
    CHECK(blk.box.contains_strictly(sol.x));
    CHECK(sol.nu.size() == 2);
    CHECK(sol.chol_S.has_value());

    // full optimality: grad + A'nu + B'lambda vanishes to the inexact target
    Vector<double> g = ipdd::eval(blk.objective, sol.x).grad +
                       0.5 * ipdd::eval(ipdd::barrier(blk), sol.x).grad +
                       blk.B.transpose() * lambda +
                       blk.A.transpose() * sol.nu;
    CHECK(g.norm() <= 1e-6);
  }
}

TEST_CASE("final iterations contract the optimality residual") {
  ipdd::Rng rng(4);
  Block<double> blk = random_equality_block(rng, 1, 4);
  std::vector<ipdd::BlockIterRecord<double>> log;
  SolveBlockOptions<double> opts;
  opts.iterate_log = &log;
  ipdd::solve_block<double>(blk, 1.0, zeros(4), nullptr, opts);
  REQUIRE(log.size() >= 3);
  const size_t k = log.size();
  CHECK(log[k - 1].kkt_residual < log[k - 2].kkt_residual);
  CHECK(log[k - 2].kkt_residual < log[k - 3].kkt_residual);
}

TEST_CASE("warm start resolves in at most two iterations") {
  ipdd::Rng rng(8);
  Block<double> blk = random_equality_block(rng, 2, 6);
  Vector<double> lambda = rng.normal_vector<double>(6);
  BlockSolution<double> first = ipdd::solve_block(blk, 0.3, lambda);
  BlockSolution<double> again =
      ipdd::solve_block(blk, 0.3, lambda, &first.x);
  CHECK(again.inner_iters <= 2);
  CHECK((again.x - first.x).norm() <= 1e-10);
}

TEST_CASE("iterates stay interior from a near-boundary start") {
  Block<double> blk = free_block(ObjectiveFn<double>::linear(vec1(5.0)),
                                 0.0, 2.0);
  Vector<double> warm = vec1(1.999);
  BlockSolution<double> sol =
      ipdd::solve_block(blk, 1.0, zeros(1), &warm);
  CHECK(blk.box.contains_strictly(sol.x));
  const double r = 5.0 + 1.0 / (2.0 - sol.x[0]) - 1.0 / sol.x[0];
  CHECK(std::abs(r) <= 1e-6);
}

TEST_CASE("iteration budget violations surface as errors") {
  Block<double> blk = free_block(ObjectiveFn<double>::linear(vec1(50.0)),
                                 0.0, 2.0);
  Vector<double> warm = vec1(1.99);
  SolveBlockOptions<double> opts;
  opts.max_iter = 1;
  CHECK_THROWS_AS(
      ipdd::solve_block(blk, 1.0, zeros(1), &warm, opts),
      ipdd::MaxIterExceeded);
  CHECK_THROWS_AS(
      ipdd::solve_block(blk, -1.0, zeros(1)), ipdd::Error);
}
