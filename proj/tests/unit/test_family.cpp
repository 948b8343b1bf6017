#include <doctest.h>

#include <cmath>

#include "tmhd/family.hpp"

using namespace tmhd;

namespace {
const GridSpec kGrid{16, 5};
}

TEST_CASE("silent family is identically zero") {
  const auto fam = make_family("silent", {}, kGrid);
  const auto p = eval_family(fam, 3, {0.1, 0.2, 0.3}, {1, 2, 3, 4, 5, 6});
  for (double v : p.sigma) CHECK(v == 0.0);
  for (double v : p.h_bar) CHECK(v == 0.0);
  for (double v : p.f) CHECK(v == 0.0);
  const auto& m = fam.metadata();
  CHECK(m.sigma_mass == 0.0);
  CHECK(m.C_H == 0.0);
  CHECK(m.F_f == 0.0);
  RngStream rng{1, 0, 0};
  const auto report = validate_assumptions(fam, kGrid, 20, rng);
  CHECK(report.all_passed());
  for (const auto& c : report.checks) CHECK(c.worst_ratio == 0.0);
}

TEST_CASE("default family constants in closed form") {
  const auto fam = make_family("default", {}, kGrid);
  const double S = 2.0 - std::ldexp(1.0, -15);  // sum_{k<16} 2^{-k}
  CHECK(fam.metadata().sigma_mass_v == doctest::Approx(S / 144.0).epsilon(1e-15));
  CHECK(fam.metadata().sigma_mass_v <= 1.0 / 72.0);
  CHECK(fam.metadata().sigma_mass <= 1.0 / 36.0);
  CHECK(fam.metadata().tail_mass == doctest::Approx(2.0 / 144.0 * std::ldexp(1.0, -15)));
  CHECK(fam.metadata().sigma_derivative == 0.0);
  // Direct sum of |sigma_k|^2 + |sigma_bar_k|^2.
  double direct = 0.0;
  for (std::size_t k = 0; k < 16; ++k) {
    const auto p = eval_family(fam, k, {1.0, 2.0, 3.0}, {});
    for (int c = 0; c < 3; ++c) direct += p.sigma[c] * p.sigma[c] + p.sigma_bar[c] * p.sigma_bar[c];
    CHECK(std::abs(p.sigma[k % 3]) == doctest::Approx(std::pow(2.0, -0.5 * k) / 12.0).epsilon(1e-15));
    CHECK(std::abs(p.sigma_bar[(k + 1) % 3]) > 0.0);
  }
  CHECK(direct == doctest::Approx(fam.metadata().sigma_mass).epsilon(1e-14));
}

TEST_CASE("default family pointwise properties") {
  const auto fam = make_family("default", {}, kGrid);
  const auto p0 = eval_family(fam, 2, {0.4, 1.1, 2.0}, {});
  for (double v : p0.h) CHECK(v == 0.0);
  for (double v : p0.h_bar) CHECK(v == 0.0);
  const auto p1 = eval_family(fam, 2, {0.4 + 1e-3, 1.1, 2.0}, {});
  CHECK(p1.sigma == p0.sigma);
  const auto pf = eval_family(fam, 0, {0.0, kTwoPi / 4, 0.0}, {});
  CHECK(pf.f[0] == doctest::Approx(0.5));
  CHECK(pf.f[3] == 0.0);
  CHECK_THROWS_AS(eval_family(fam, 16, {}, {}), Error);
}

TEST_CASE("default family satisfies its reported constants") {
  const auto fam = make_family("default", {}, kGrid);
  RngStream rng{2, 0, 0};
  const auto report = validate_assumptions(fam, kGrid, 200, rng);
  for (const auto& c : report.checks) {
    INFO(c.name << " ratio " << c.worst_ratio);
    CHECK(c.passed);
  }
  const auto& mass = report.find("sigma_mass");
  CHECK(mass.worst_ratio <= 1.0);
  CHECK(std::abs(mass.observed - fam.metadata().sigma_mass) <= 1e-12);
  CHECK(report.find("H_lipschitz").worst_ratio <= 1.0);
}

TEST_CASE("x-dependent transport family") {
  const auto fam = make_family("custom", {{"sigma_mass", "0.02"}, {"sigma_modulation", "0.3"}}, kGrid);
  CHECK(fam.metadata().sigma_mass == doctest::Approx(0.02).epsilon(1e-13));
  CHECK(fam.sigma_depends_on_x());
  RngStream rng{3, 0, 0};
  const auto report = validate_assumptions(fam, kGrid, 100, rng);
  CHECK(report.all_passed());
  CHECK(std::abs(report.find("sigma_mass").observed - 0.02) <= 1e-12);
  CHECK(report.find("sigma_derivative").observed > 0.0);

  // transport_weights reproduce sum_k dW_k sigma_k(x).
  std::vector<double> dW(fam.k_noise);
  for (std::size_t k = 0; k < dW.size(); ++k) dW[k] = std::sin(1.0 + k);
  const Vec3 x{0.3, 1.7, 4.1};
  for (bool bar : {false, true}) {
    const Vec3 A = fam.transport_weights(dW, bar);
    Vec3 direct{};
    for (std::size_t k = 0; k < dW.size(); ++k) {
      const Vec3 s = bar ? fam.sigma_bar(k, x) : fam.sigma(k, x);
      for (int c = 0; c < 3; ++c) direct[c] += dW[k] * s[c];
    }
    for (int c = 0; c < 3; ++c) {
      CHECK(direct[c] == doctest::Approx(A[c] * (1.0 + 0.3 * std::cos(x[(c + 1) % 3]))).epsilon(1e-13));
    }
  }
}

TEST_CASE("inadmissible or malformed parameters") {
  CHECK_THROWS_AS(make_family("custom", {{"sigma_mass", "0.1"}}, kGrid), Error);
  CHECK_THROWS_AS(make_family("default", {{"amplitude", "0.2"}}, kGrid), Error);
  CHECK_THROWS_AS(make_family("default", {{"amplitud", "0.01"}}, kGrid), Error);
  CHECK_THROWS_AS(make_family("default", {{"amplitude", "abc"}}, kGrid), Error);
  CHECK_THROWS_AS(make_family("default", {{"k_noise", "2.5"}}, kGrid), Error);
  CHECK_THROWS_AS(make_family("bogus", {}, kGrid), Error);
  CHECK_THROWS_AS(make_family("silent", {{"amplitude", "0"}}, kGrid), Error);
}

TEST_CASE("zero transport amplitude keeps H and f") {
  const auto fam = make_family("default", {{"amplitude", "0"}}, kGrid);
  CHECK(fam.metadata().sigma_mass == 0.0);
  CHECK(fam.h_amplitude == 0.25);
  CHECK(fam.forcing_v == 0.5);
}

TEST_CASE("quadratic H violates the growth bound") {
  const auto fam = make_family("custom", {{"h_kind", "quadratic"}}, kGrid);
  RngStream rng{4, 0, 0};
  const auto report = validate_assumptions(fam, kGrid, 100, rng);
  CHECK_FALSE(report.all_passed());
  CHECK_FALSE(report.find("H_growth").passed);
  CHECK(report.find("H_growth").worst_ratio > 1.0);
}
