#pragma once

#include <cstdint>
#include <vector>

#include "ipdd/problem.hpp"
#include "ipdd/rng.hpp"

namespace ipdd {

enum class Family { kQuadratic, kNetwork };

inline const char* to_string(Family f) {
  return f == Family::kQuadratic ? "quadratic" : "network";
}

/// Instance shape: N blocks of n1 variables with m1 local equality rows
/// each (the network family appends one aggregate block of n1 variables
/// and no local rows). The quadratic family requires m1 < n1 so the blocks
/// keep equality slack; the network family needs 1 <= m1 <= n1 so the n1
/// arcs can span a connected graph on m1 + 1 nodes.
struct GenSpec {
  Family family = Family::kQuadratic;
  Index m1 = 0;
  Index n1 = 0;
  Index N = 0;
  std::uint64_t seed = 0;
};

namespace detail {

inline void check_gen_spec(const GenSpec& spec) {
  if (spec.N < 1) throw Error("gen: N must be at least 1");
  if (spec.n1 < 1) throw Error("gen: n1 must be at least 1");
  if (spec.m1 < 0) throw Error("gen: m1 must be nonnegative");
  if (spec.family == Family::kQuadratic) {
    if (spec.m1 >= spec.n1) throw Error("gen: m1 must be smaller than n1");
  } else {
    if (spec.m1 < 1) throw Error("gen: network family needs m1 >= 1");
    if (spec.n1 < spec.m1)
      throw Error("gen: network family needs n1 >= m1");
  }
}

inline std::uint64_t attempt_seed(std::uint64_t seed, int attempt) {
  return seed ^ (std::uint64_t(attempt) * 0x9E3779B97F4A7C15ULL);
}

template <typename Scalar>
bool instance_usable(const SeparableProblem<Scalar>& p) {
  try {
    if (!validate_rank(p).pass) return false;
    for (const auto& blk : p.blocks) find_interior_point(blk);
  } catch (const Error&) {
    return false;
  }
  return true;
}

// Uniform random labeled tree on q nodes via a Pruefer sequence.
inline std::vector<std::pair<Index, Index>> random_tree(Rng& rng, Index q) {
  std::vector<std::pair<Index, Index>> edges;
  if (q < 2) return edges;
  if (q == 2) {
    edges.emplace_back(0, 1);
    return edges;
  }
  std::vector<Index> seq(size_t(q - 2));
  for (auto& s : seq) s = Index(rng.uniform_int(0, q - 1));
  std::vector<Index> deg(size_t(q), 1);
  for (Index s : seq) ++deg[size_t(s)];
  for (Index s : seq) {
    for (Index v = 0; v < q; ++v) {
      if (deg[size_t(v)] == 1) {
        edges.emplace_back(v, s);
        deg[size_t(v)] = 0;
        --deg[size_t(s)];
        break;
      }
    }
  }
  Index u = -1;
  for (Index v = 0; v < q; ++v)
    if (deg[size_t(v)] == 1) {
      if (u < 0) {
        u = v;
      } else {
        edges.emplace_back(u, v);
        break;
      }
    }
  return edges;
}

}  // namespace detail

/// Random separable quadratic program: per block a singular PSD Hessian
/// Q'Q from a standard normal m1 x n1 factor, a full-row-rank normal A,
/// box [0, 2 max(xhat)] around a random interior point xhat, and identity
/// coupling with b = sum xhat, so a strictly feasible point exists by
/// construction.
template <typename Scalar = double>
SeparableProblem<Scalar> gen_quadratic(const GenSpec& spec) {
  detail::check_gen_spec(spec);
  for (int attempt = 0; attempt < 100; ++attempt) {
    Rng rng(detail::attempt_seed(spec.seed, attempt));
    SeparableProblem<Scalar> p;
    p.b = Vector<Scalar>::Zero(spec.n1);
    for (Index i = 0; i < spec.N; ++i) {
      Matrix<Scalar> Qf = rng.normal_matrix<Scalar>(spec.m1, spec.n1);
      Vector<Scalar> c = rng.normal_vector<Scalar>(spec.n1);
      Matrix<Scalar> A = rng.normal_matrix<Scalar>(spec.m1, spec.n1);
      Vector<Scalar> xhat =
          rng.uniform_vector<Scalar>(spec.n1, Scalar(0.1), Scalar(1));
      Block<Scalar> blk{
          ObjectiveFn<Scalar>::quadratic(Matrix<Scalar>(Qf.transpose() * Qf),
                                         c),
          Box<Scalar>{Vector<Scalar>::Zero(spec.n1),
                      Vector<Scalar>::Constant(spec.n1,
                                               Scalar(2) * xhat.maxCoeff())},
          A, Vector<Scalar>(A * xhat),
          Matrix<Scalar>(Matrix<Scalar>::Identity(spec.n1, spec.n1))};
      p.b += xhat;
      p.blocks.push_back(std::move(blk));
    }
    if (detail::instance_usable(p)) return p;
  }
  throw GenInfeasible("gen_quadratic: no usable instance in 100 attempts");
}

/// Random multicommodity routing instance on a connected digraph with
/// m1 + 1 nodes and n1 arcs (uniform spanning tree plus random extra arcs,
/// random orientations). Each of the N commodities routes one unit along a
/// random directed walk plus a small background flow; flow conservation
/// uses the reduced incidence matrix (one node row dropped), giving m1
/// full-rank local rows per commodity. An aggregate block with total-delay
/// objective and capacities at twice the seed loads closes the coupling
/// sum_i x_i - y = 0, so the seed routing is strictly feasible.
template <typename Scalar = double>
SeparableProblem<Scalar> gen_network(const GenSpec& spec) {
  detail::check_gen_spec(spec);
  const Index q = spec.m1 + 1;  // nodes; reduced incidence keeps m1 rows
  for (int attempt = 0; attempt < 100; ++attempt) {
    Rng rng(detail::attempt_seed(spec.seed, attempt));

    std::vector<Index> tail, head;
    for (auto [u, v] : detail::random_tree(rng, q)) {
      const bool flip = rng.uniform() < 0.5;
      tail.push_back(flip ? v : u);
      head.push_back(flip ? u : v);
    }
    while (Index(tail.size()) < spec.n1) {
      const Index u = Index(rng.uniform_int(0, q - 1));
      Index v = Index(rng.uniform_int(0, q - 1));
      if (v == u) continue;
      tail.push_back(u);
      head.push_back(v);
    }

    Matrix<Scalar> A_red = Matrix<Scalar>::Zero(spec.m1, spec.n1);
    for (Index e = 0; e < spec.n1; ++e) {
      if (tail[size_t(e)] < spec.m1) A_red(tail[size_t(e)], e) = Scalar(1);
      if (head[size_t(e)] < spec.m1) A_red(head[size_t(e)], e) = Scalar(-1);
    }
    std::vector<std::vector<Index>> out(static_cast<size_t>(q));
    for (Index e = 0; e < spec.n1; ++e) out[size_t(tail[size_t(e)])].push_back(e);

    SeparableProblem<Scalar> p;
    p.b = Vector<Scalar>::Zero(spec.n1);
    Vector<Scalar> load = Vector<Scalar>::Zero(spec.n1);
    bool ok = true;
    for (Index i = 0; i < spec.N && ok; ++i) {
      Index src = -1;
      for (int tries = 0; tries < 100; ++tries) {
        const Index v = Index(rng.uniform_int(0, q - 1));
        if (!out[size_t(v)].empty()) {
          src = v;
          break;
        }
      }
      if (src < 0) {
        ok = false;
        break;
      }
      Vector<Scalar> usage = Vector<Scalar>::Zero(spec.n1);
      Index cur = src;
      const Index walk_len = Index(rng.uniform_int(1, 2 * spec.m1));
      for (Index step = 0; step < walk_len; ++step) {
        const auto& arcs = out[size_t(cur)];
        if (arcs.empty()) break;
        const Index e = arcs[size_t(rng.uniform_int(0, Index(arcs.size()) - 1))];
        usage[e] += Scalar(1);
        cur = head[size_t(e)];
      }
      Vector<Scalar> xhat = usage.array() + Scalar(0.05);
      Vector<Scalar> cost =
          rng.uniform_vector<Scalar>(spec.n1, Scalar(0.1), Scalar(1));
      Block<Scalar> blk{
          ObjectiveFn<Scalar>::linear(cost),
          Box<Scalar>{Vector<Scalar>::Zero(spec.n1),
                      Vector<Scalar>::Constant(spec.n1,
                                               Scalar(2) * xhat.maxCoeff())},
          A_red, Vector<Scalar>(A_red * xhat),
          Matrix<Scalar>(Matrix<Scalar>::Identity(spec.n1, spec.n1))};
      load += xhat;
      p.blocks.push_back(std::move(blk));
    }
    if (!ok) continue;

    // aggregate arc flows with capacities at twice the seed loads
    Vector<Scalar> cap = Scalar(2) * load;
    Block<Scalar> agg{
        ObjectiveFn<Scalar>::total_delay(cap),
        Box<Scalar>{Vector<Scalar>::Zero(spec.n1), cap},
        Matrix<Scalar>(0, spec.n1), Vector<Scalar>(0),
        Matrix<Scalar>(-Matrix<Scalar>::Identity(spec.n1, spec.n1))};
    p.blocks.push_back(std::move(agg));

    if (detail::instance_usable(p)) return p;
  }
  throw GenInfeasible("gen_network: no usable instance in 100 attempts");
}

template <typename Scalar = double>
SeparableProblem<Scalar> generate(const GenSpec& spec) {
  return spec.family == Family::kQuadratic ? gen_quadratic<Scalar>(spec)
                                           : gen_network<Scalar>(spec);
}

}  // namespace ipdd
