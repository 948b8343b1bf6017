#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "helpers.hpp"
#include "tmhd/integrator.hpp"
#include "tmhd/operators.hpp"

using namespace tmhd;
using tmhd::testing::max_diff;
using tmhd::testing::random_pair;

namespace {

SimConfig silent_config(const GridSpec& g) {
  SimConfig cfg;
  cfg.grid = g;
  cfg.family_name = "silent";
  cfg.rebuild_family();
  return cfg;
}

// Reference step assembled from the independently tested operators.
StatePair reference_step(const StatePair& y, const NoiseIncrements& inc, const TamingSpec& spec,
                         const CoefficientFamily& fam, const StatePair& forcing) {
  const double dt = inc.dt;
  const auto parts = operator_A_parts(y, spec);
  StatePair x = -dt * parts.bilinear - dt * parts.taming + dt * forcing;
  for (std::size_t k = 0; k < fam.k_noise; ++k) {
    const auto b = operator_B(y, fam, k);
    // operator_B mixes W (velocity) and W-bar (magnetic) increments.
    x.v += inc.dW[k] * b.v;
    x.B += inc.dW_bar[k] * b.B;
  }
  StatePair out = y + x;
  const auto& table = modes(y.grid());
  for (std::size_t m = 0; m < table.k.size(); ++m) {
    for (int c = 0; c < 3; ++c) {
      out.v(c, m) /= 1.0 + dt * table.k_sq[m];
      out.B(c, m) /= 1.0 + dt * table.k_sq[m];
    }
  }
  return out;
}

}  // namespace

TEST_CASE("single mode decays by the implicit heat factor") {
  const GridSpec g{16, 5};
  auto cfg = silent_config(g);
  const StatePair y0 = single_mode_state(g, {1, 2, 0}, 0, 1.0, FieldSlot::both);
  const double dt = 0.01;
  const SemiImplicitStepper stepper(cfg);
  const auto y1 = stepper.step(y0, NoiseIncrements::zero(16, dt));
  CHECK(max_diff(y1, (1.0 / (1.0 + 5.0 * dt)) * y0) < 1e-15);
}

TEST_CASE("heat decay over unit time matches the implicit Euler product") {
  const GridSpec g{8, 2};
  auto cfg = silent_config(g);
  cfg.dt = 1e-2;
  cfg.horizon = 1.0;
  cfg.ic.kind = InitialCondition::Kind::single_mode;
  cfg.ic.k = {1, 1, 0};
  cfg.ic.slot = FieldSlot::velocity;
  const auto out = simulate(cfg);
  const double ratio = std::sqrt(sobolev_norm_sq(out.final_state, 0.0) / sobolev_norm_sq(cfg.ic.build(g, 2), 0.0));
  CHECK(ratio == doctest::Approx(std::pow(1.0 + 2.0 * cfg.dt, -100.0)).epsilon(1e-12));
  CHECK(std::abs(ratio - std::exp(-2.0)) < 3e-3);
}

TEST_CASE("zero state stays zero without forcing and responds to forcing exactly") {
  const GridSpec g{16, 5};
  const StatePair zero(g);
  auto silent = silent_config(g);
  RngStream rng{3, 0, 0};
  const auto inc = sample_increments(rng, 1e-3, 16);
  CHECK(SemiImplicitStepper(silent).step(zero, inc).max_abs() == 0.0);

  SimConfig cfg;
  cfg.grid = g;
  cfg.rebuild_family();
  const auto y = SemiImplicitStepper(cfg).step(zero, inc);
  // f_v = c (sin x2, sin x3, sin x1): coefficient -i c/2 at +e2 for component 0.
  const double c = cfg.family.forcing_v;
  const Complex expected(0.0, -0.5 * c * 1e-3 / (1.0 + 1e-3));
  CHECK(std::abs(y.v.at(0, {0, 1, 0}) - expected) < 1e-15);
  CHECK(std::abs(y.v.at(1, {0, 0, -1}) - std::conj(expected)) < 1e-15);
  CHECK(std::abs(y.v.at(2, {1, 0, 0}) - expected) < 1e-15);
  CHECK(y.B.max_abs() == 0.0);
}

TEST_CASE("stepper agrees with the operator route, including taming and modulated noise") {
  const GridSpec g{8, 2};
  SimConfig cfg;
  cfg.grid = g;
  cfg.taming.N = 1.0;
  cfg.family_params = {{"amplitude", "0.05"}, {"amplitude_bar", "0.06"}, {"sigma_modulation", "0.3"}, {"forcing_b", "0.2"}};
  cfg.rebuild_family();
  const auto y = random_pair(g, 11, 3.0, 1.0);
  RngStream rng{5, 1, 0};
  const auto inc = sample_increments(rng, 0.02, cfg.family.k_noise);
  const SemiImplicitStepper stepper(cfg);
  const StatePair forcing = stepper.step(StatePair(g), NoiseIncrements::zero(16, 1.0));
  // Zero state and unit dt: the result is f / (1 + |k|^2); undo the factor.
  StatePair f = forcing;
  const auto& table = modes(g);
  for (std::size_t m = 0; m < table.k.size(); ++m) {
    for (int c = 0; c < 3; ++c) {
      f.v(c, m) *= 1.0 + table.k_sq[m];
      f.B(c, m) *= 1.0 + table.k_sq[m];
    }
  }
  const auto got = stepper.step(y, inc);
  const auto want = reference_step(y, inc, cfg.taming, cfg.family, f);
  CHECK(max_diff(got, want) < 1e-13 * want.max_abs());
  CHECK(divergence_residual(got) < 1e-13);
}

TEST_CASE("divergence stays at round-off along a noisy trajectory") {
  SimConfig cfg;
  cfg.grid = {16, 5};
  cfg.rebuild_family();
  cfg.dt = 1e-3;
  cfg.horizon = 2e-2;
  cfg.ic.amplitude = 2.0;
  const auto out = simulate(cfg);
  REQUIRE(out.exit_status == ExitStatus::completed);
  CHECK(out.diagnostics.size() == 21);
  for (const auto& d : out.diagnostics) CHECK(d.div_residual < 1e-12);
  CHECK(out.snapshots.size() == 2);
}

TEST_CASE("unforced silent energy is nonincreasing") {
  auto cfg = silent_config({16, 5});
  cfg.dt = 5e-3;
  cfg.horizon = 0.2;
  cfg.ic.amplitude = 3.0;
  cfg.taming.N = 1.0;
  const auto out = simulate(cfg);
  for (std::size_t i = 1; i < out.diagnostics.size(); ++i) {
    const double e0 = out.diagnostics[i - 1].E_kin + out.diagnostics[i - 1].E_mag;
    const double e1 = out.diagnostics[i].E_kin + out.diagnostics[i].E_mag;
    CHECK(e1 <= e0 * (1.0 + 1e-13));
  }
}

TEST_CASE("twins from the same state are bitwise identical") {
  SimConfig cfg;
  cfg.grid = {16, 5};
  cfg.rebuild_family();
  cfg.dt = 1e-3;
  cfg.horizon = 1e-2;
  const auto twin = twin_simulate(cfg, cfg.ic);
  CHECK(twin.first.final_state == twin.second.final_state);
  for (const auto& d : twin.difference) CHECK(d.h1_sq == 0.0);
}

TEST_CASE("stop radius freezes the coupled run") {
  SimConfig cfg;
  cfg.grid = {16, 5};
  cfg.rebuild_family();
  cfg.dt = 1e-3;
  cfg.horizon = 1e-2;
  const auto y = cfg.ic.build(cfg.grid, cfg.level());
  const auto twin = twin_simulate(cfg, y, 2.0 * y, std::sqrt(sobolev_norm_sq(y, 1.0)));
  CHECK(twin.stopped);
  CHECK(twin.stop_time == doctest::Approx(1e-3));
}

TEST_CASE("blow-up guard ends the run with its own status") {
  SimConfig cfg;
  cfg.grid = {16, 5};
  cfg.rebuild_family();
  cfg.dt = 1e-3;
  cfg.horizon = 1e-2;
  cfg.blowup_guard = 1e-3;
  const auto out = simulate(cfg);
  CHECK(out.exit_status == ExitStatus::blowup_guard);
  CHECK(out.steps_taken == 1);
}

TEST_CASE("configuration validation") {
  SimConfig cfg = SimConfig::defaults();
  cfg.dt = 0.3;
  cfg.horizon = 1.0;
  CHECK_THROWS_AS(cfg.steps(), Error);
  cfg.dt = -1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = SimConfig::defaults();
  cfg.galerkin_n = 9;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("galerkin truncation keeps higher modes at zero") {
  SimConfig cfg;
  cfg.grid = {16, 5};
  cfg.galerkin_n = 3;
  cfg.rebuild_family();
  cfg.dt = 1e-3;
  cfg.horizon = 5e-3;
  const auto out = simulate(cfg);
  CHECK(max_diff(out.final_state, truncate_modes(out.final_state, 3)) == 0.0);
}

TEST_CASE("strong order: deterministic zero run gives NaN, bad levels throw, threads do not matter") {
  auto cfg = silent_config({8, 2});
  cfg.horizon = 0.04;
  cfg.ic.kind = InitialCondition::Kind::zero;
  const auto r = estimate_strong_order(cfg, {0.02, 0.01}, 2, 0.005);
  CHECK(std::isnan(r.order));
  CHECK_THROWS_AS(estimate_strong_order(cfg, {0.02, 0.015}, 2, 0.01), Error);
  CHECK_THROWS_AS(estimate_strong_order(cfg, {0.01, 0.02}, 2, 0.005), Error);

  SimConfig noisy;
  noisy.grid = {8, 2};
  noisy.rebuild_family();
  noisy.horizon = 0.04;
  setenv("TMHD_THREADS", "1", 1);
  const auto a = estimate_strong_order(noisy, {0.02, 0.01}, 3, 0.005);
  setenv("TMHD_THREADS", "3", 1);
  const auto b = estimate_strong_order(noisy, {0.02, 0.01}, 3, 0.005);
  unsetenv("TMHD_THREADS");
  CHECK(a.errors == b.errors);
  CHECK(a.errors[0] > a.errors[1]);
}
