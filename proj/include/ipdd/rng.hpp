#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "ipdd/types.hpp"

namespace ipdd {

// Deterministic random source. Draws go through fixed arithmetic on raw
// mt19937_64 output (never std::uniform_*_distribution, whose mapping is
// implementation-defined), so a seed reproduces the same stream everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // [0, 1) with 53-bit resolution.
  double uniform() { return double(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Inclusive integer range.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const auto span = std::uint64_t(hi - lo) + 1;
    return lo + std::int64_t(std::uint64_t(uniform() * double(span)) % span);
  }

  // Standard normal via Box-Muller; the spare keeps draw counts even.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  template <typename Scalar>
  Vector<Scalar> uniform_vector(Index n, Scalar a, Scalar b) {
    Vector<Scalar> v(n);
    for (Index i = 0; i < n; ++i) v[i] = Scalar(uniform(double(a), double(b)));
    return v;
  }

  template <typename Scalar>
  Vector<Scalar> normal_vector(Index n) {
    Vector<Scalar> v(n);
    for (Index i = 0; i < n; ++i) v[i] = Scalar(normal());
    return v;
  }

  // Row-major fill so the draw order matches the printed layout.
  template <typename Scalar>
  Matrix<Scalar> normal_matrix(Index rows, Index cols) {
    Matrix<Scalar> m(rows, cols);
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c) m(r, c) = Scalar(normal());
    return m;
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0;
  bool has_spare_ = false;
};

}  // namespace ipdd
