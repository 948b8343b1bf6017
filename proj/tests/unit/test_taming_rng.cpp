#include <doctest.h>

#include <array>
#include <cmath>
#include <set>

#include "tmhd/grid.hpp"
#include "tmhd/rng.hpp"
#include "tmhd/taming.hpp"

using namespace tmhd;

namespace {

// Quintic Hermite interpolant on [0,1] solved from the six boundary
// conditions by Gaussian elimination, evaluated at s.
double hermite_oracle(double c, double s) {
  // Rows: g(0), g'(0), g''(0), g(1), g'(1), g''(1) for p(s) = sum a_i s^i.
  double A[6][7] = {};
  A[0][0] = 1;
  A[1][1] = 1;
  A[2][2] = 2;
  for (int i = 0; i < 6; ++i) {
    A[3][i] = 1;
    A[4][i] = i;
    A[5][i] = i * (i - 1);
  }
  A[3][6] = c / 2;
  A[4][6] = c;
  A[5][6] = 0;
  for (int col = 0; col < 6; ++col) {
    int piv = col;
    for (int r = col; r < 6; ++r)
      if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
    for (int j = 0; j < 7; ++j) std::swap(A[col][j], A[piv][j]);
    for (int r = 0; r < 6; ++r) {
      if (r == col) continue;
      const double f = A[r][col] / A[col][col];
      for (int j = 0; j < 7; ++j) A[r][j] -= f * A[col][j];
    }
  }
  double value = 0.0;
  for (int i = 5; i >= 0; --i) value = value * s + A[i][6] / A[i][i];
  return value;
}

}  // namespace

TEST_CASE("taming function values") {
  const TamingSpec spec;
  CHECK(eval_taming(spec.N / 2, spec) == 0.0);
  CHECK(eval_taming(spec.N, spec) == 0.0);
  CHECK(eval_taming(spec.N + 2, spec) == doctest::Approx(spec.c_taming * 1.5));
  const double mid = eval_taming(spec.N + 0.5, spec);
  CHECK(mid > 0.0);
  CHECK(mid < spec.c_taming / 2);
  CHECK(mid == doctest::Approx(hermite_oracle(spec.c_taming, 0.5)).epsilon(1e-13));
  for (double s = 0.0; s <= 1.0; s += 1.0 / 64)
    CHECK(eval_taming(spec.N + s, spec) == doctest::Approx(hermite_oracle(spec.c_taming, s)).epsilon(1e-12));
  CHECK_THROWS_AS(eval_taming(-1.0, spec), Error);
  CHECK_THROWS_AS(eval_taming(std::nan(""), spec), Error);
}

TEST_CASE("taming blend is C2 with bounded slope") {
  const TamingSpec spec{10.0, 2.0, 2.0};
  const double h = 1e-6;
  for (double r : {spec.N, spec.N + 1}) {
    CHECK(eval_taming(r + h, spec) - eval_taming(r - h, spec) == doctest::Approx(2 * h * eval_taming_derivative(r, spec)).epsilon(1e-6));
    CHECK(std::abs(eval_taming_second_derivative(r + 1e-9, spec) - eval_taming_second_derivative(r - 1e-9, spec)) < 1e-7);
    CHECK(std::abs(eval_taming_derivative(r + 1e-9, spec) - eval_taming_derivative(r - 1e-9, spec)) < 1e-7);
  }
  double prev = 0.0;
  for (int i = 0; i <= 200000; ++i) {
    const double r = spec.N - 1 + 3.0 * i / 200000;
    const double d = eval_taming_derivative(r, spec);
    CHECK(d >= 0.0);
    CHECK(d <= spec.c1);
    const double g = eval_taming(r, spec);
    CHECK(g >= prev);
    prev = g;
  }
}

TEST_CASE("taming function is 2-Lipschitz") {
  const TamingSpec spec{5.0, 2.0, 2.0};
  RngStream rng{8, 0, 0};
  const auto u = rng.draw_uniforms(20000);
  for (std::size_t i = 0; i + 1 < u.size(); i += 2) {
    const double r = 3.0 + 4.0 * u[i], q = 3.0 + 4.0 * u[i + 1];
    CHECK(std::abs(eval_taming(r, spec) - eval_taming(q, spec)) <= 2.0 * std::abs(r - q) + 1e-15);
  }
}

TEST_CASE("taming parameter validation") {
  CHECK_NOTHROW(TamingSpec{}.validate());
  CHECK_THROWS_AS((TamingSpec{1.0, 3.0, 2.0}.validate()), Error);
  CHECK_THROWS_AS((TamingSpec{0.0, 2.0, 2.0}.validate()), Error);
}

TEST_CASE("Philox4x32-10 known-answer vectors") {
  using A4 = std::array<std::uint32_t, 4>;
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("increments are reproducible and advance the counter") {
  RngStream a{42, 3, 10}, b{42, 3, 10};
  const auto x = sample_increments(a, 0.01, 16);
  const auto y = sample_increments(b, 0.01, 16);
  CHECK(x.dW == y.dW);
  CHECK(x.dW_bar == y.dW_bar);
  CHECK(a.counter == 11);
  const auto z = sample_increments(a, 0.01, 16);
  CHECK(z.dW != x.dW);
  CHECK(x.dW != x.dW_bar);
  CHECK_THROWS_AS(sample_increments(a, 0.0, 4), Error);
  CHECK_THROWS_AS(sample_increments(a, -1.0, 4), Error);
}

TEST_CASE("increment statistics") {
  for (std::uint64_t seed : {1ull, 20240601ull, 0xdeadbeefull}) {
    RngStream rng{seed, 0, 0};
    const int draws = 100000 / 20;  // 20 variates per call (K = 10, two sequences)
    double sum = 0.0, sum_sq = 0.0, cross = 0.0;
    long count = 0;
    RngStream other{seed, 1, 0};
    double cross_sum = 0.0;
    for (int i = 0; i < draws; ++i) {
      const auto inc = sample_increments(rng, 1.0, 10);
      const auto inc2 = sample_increments(other, 1.0, 10);
      for (std::size_t k = 0; k < 10; ++k) {
        for (double v : {inc.dW[k], inc.dW_bar[k]}) {
          sum += v;
          sum_sq += v * v;
          ++count;
        }
        cross += inc.dW[k] * inc.dW_bar[k];
        if (i < 1000) cross_sum += inc.dW[k] * inc2.dW[k];
      }
    }
    const double mean = sum / count;
    const double var = sum_sq / count - mean * mean;
    CHECK(std::abs(mean) <= 4.0 / std::sqrt(count));
    CHECK(std::abs(var - 1.0) <= 4.0 * std::sqrt(2.0 / count));
    // W and W-bar independence, and independence across stream ids (10^4 pairs).
    CHECK(std::abs(cross / (count / 2)) <= 4.0 / std::sqrt(count / 2.0));
    CHECK(std::abs(cross_sum / 10000) <= 4.0 / 100.0);
  }
}

TEST_CASE("general and uniform draws") {
  RngStream rng{5, 5, 0};
  const auto u = rng.draw_uniforms(1001);
  for (double v : u) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
  CHECK(rng.counter == 1);
  const auto n1 = rng.draw_normals(7);
  RngStream again{5, 5, 1};
  CHECK(again.draw_normals(7) == n1);
  std::set<double> distinct(u.begin(), u.end());
  CHECK(distinct.size() == u.size());
}
