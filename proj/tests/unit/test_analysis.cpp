#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "tmhd/analysis.hpp"

using namespace tmhd;

namespace {

SimConfig small_config(const std::string& family = "default") {
  SimConfig cfg;
  cfg.grid = {8, 2};
  cfg.family_name = family;
  cfg.rebuild_family();
  cfg.dt = 1e-2;
  cfg.horizon = 0.05;
  return cfg;
}

TrajectoryOutput synthetic(const std::vector<double>& t, const std::vector<double>& h2) {
  TrajectoryOutput out;
  for (std::size_t i = 0; i < t.size(); ++i) {
    DiagnosticsRecord r;
    r.t = t[i];
    r.h2_sq = h2[i];
    out.diagnostics.push_back(r);
  }
  return out;
}

}  // namespace

TEST_CASE("verification suite passes on a small sample") {
  RngStream rng{1, 0, 0};
  const auto report = verify_functional_estimates(GridSpec{16, 5}, 10, rng);
  for (const auto& c : report.checks) {
    INFO(c.name << " " << c.observed << " " << c.detail);
    CHECK(c.passed);
  }
  CHECK(report.assumptions.all_passed());
  CHECK(report.find("hessian_ratio") != nullptr);
  CHECK(report.find("nope") == nullptr);
  RngStream r2{1, 0, 0};
  CHECK_THROWS_AS(verify_functional_estimates(GridSpec{16, 5}, 5, r2), Error);
}

TEST_CASE("silent family makes the noise bounds trivial") {
  RngStream rng{2, 0, 0};
  VerifyOptions options;
  options.family_name = "silent";
  const auto report = verify_functional_estimates(GridSpec{16, 5}, 10, rng, options);
  CHECK(report.find("hs_order0")->observed == 0.0);
  CHECK(report.find("hs_order1")->observed == 0.0);
  CHECK(report.find("sigma_mass")->observed == 0.0);
}

TEST_CASE("running average of a constant is that constant") {
  const auto traj = synthetic({0.0, 0.5, 1.0, 2.0}, {3.0, 3.0, 3.0, 3.0});
  const auto ra = running_time_average(traj, Observable::h2_sq);
  for (double a : ra.average) CHECK(a == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(ra.tail_fluctuation == doctest::Approx(0.0));
  CHECK(ra.growth_ratio == doctest::Approx(1.0));
}

TEST_CASE("running average trapezoid and tail measures") {
  // obs = t on [0, 2]: average T/2.
  const auto traj = synthetic({0.0, 1.0, 2.0}, {0.0, 1.0, 2.0});
  const auto ra = running_time_average(traj, Observable::h2_sq);
  CHECK(ra.average[1] == doctest::Approx(0.5));
  CHECK(ra.average[2] == doctest::Approx(1.0));
  CHECK(ra.tail_fluctuation == doctest::Approx(0.5));
  CHECK(ra.growth_ratio == doctest::Approx(2.0));
  CHECK_THROWS_AS(running_time_average(TrajectoryOutput{}, Observable::h2_sq), Error);
  auto failed = traj;
  failed.exit_status = ExitStatus::blowup_guard;
  CHECK_THROWS_AS(running_time_average(failed, Observable::h2_sq), Error);
}

TEST_CASE("histogram bins every record") {
  const auto traj = synthetic({0, 1, 2, 3, 4}, {1.0, 2.0, 2.0, 3.0, 5.0});
  const auto h = histogram(traj, Observable::h2_sq);
  CHECK(h.counts.size() == 64);
  long total = 0;
  for (long c : h.counts) total += c;
  CHECK(total == 5);
  CHECK(h.counts.front() == 1);
  CHECK(h.counts.back() == 1);
  CHECK(h.lo == 1.0);
  CHECK(h.hi == 5.0);
  const auto flat = histogram(synthetic({0, 1}, {2.0, 2.0}), Observable::h2_sq);
  CHECK(flat.hi > flat.lo);
}

TEST_CASE("observable names round-trip") {
  for (auto o : all_observables()) CHECK(parse_observable(to_string(o)) == o);
  CHECK_THROWS_AS(parse_observable("vorticity"), Error);
}

TEST_CASE("phi dictionary is bounded and rejects unbounded observables") {
  CHECK_THROWS_AS(parse_phi("h1_sq"), Error);
  CHECK_THROWS_AS(parse_phi("energy"), Error);
  CHECK_THROWS_AS(parse_phi("bogus"), Error);
  const auto y = tmhd::testing::random_pair(GridSpec{8, 2}, 3, 5.0);
  for (const auto& phi : feller_dictionary()) {
    CHECK(parse_phi(phi.name()).kind == phi.kind);
    CHECK(std::abs(phi(y)) <= phi.bound());
    CHECK(phi.lipschitz() > 0.0);
  }
}

TEST_CASE("Lipschitz constants hold along random segments") {
  const GridSpec g{8, 2};
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto a = tmhd::testing::random_pair(g, 100 + s, 0.3 + 0.2 * s);
    const auto b = tmhd::testing::random_pair(g, 200 + s, 0.5 + 0.1 * s);
    const double dist = std::sqrt(sobolev_norm_sq(a - b, 1.0));
    for (const auto& phi : feller_dictionary()) CHECK(std::abs(phi(a) - phi(b)) <= phi.lipschitz() * dist);
  }
}

TEST_CASE("semigroup estimates: constant phi and identical ICs") {
  auto cfg = small_config();
  const auto y0 = cfg.ic.build(cfg.grid, cfg.level());
  const auto one = estimate_semigroup(cfg, parse_phi("one"), {y0}, 0.03, 16);
  CHECK(one[0].mean == 1.0);
  CHECK(one[0].stderr == 0.0);
  const auto same = estimate_semigroup(cfg, parse_phi("tanh_energy"), {y0, y0}, 0.03, 16);
  CHECK(same[0].mean == same[1].mean);
  CHECK(same[0].stderr > 0.0);
  CHECK_THROWS_AS(estimate_semigroup(cfg, parse_phi("one"), {y0}, 0.03, 8), Error);
}

TEST_CASE("Feller modulus shrinks with the separation") {
  auto cfg = small_config();
  const auto report = feller_modulus(cfg, feller_dictionary(), {1e-2, 1e-3, 1e-4}, 0.05, 16);
  REQUIRE(report.difference.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(report.monotone(i));
    CHECK(report.difference[i][2] < report.difference[i][0]);
  }
  CHECK_THROWS_AS(feller_modulus(cfg, feller_dictionary(), {1e-3, 1e-2}, 0.05, 16), Error);
}

TEST_CASE("continuous dependence in the linear silent regime is delta independent") {
  auto cfg = small_config("silent");
  cfg.ic.kind = InitialCondition::Kind::zero;
  cfg.horizon = 0.1;
  const auto report = continuous_dependence(cfg, 1.0, {1e-3, 1e-4, 1e-5}, 2, {1, 0, 0});
  // A lone mode does not interact with itself: z decays by the heat factor only.
  const double expected = std::pow(1.0 + cfg.dt * 1.0, -2.0 * 10);
  for (const auto& row : report.rows) {
    CHECK(row.ratio == doctest::Approx(expected).epsilon(1e-12));
    CHECK(row.stopped_paths == 0);
  }
  CHECK(report.spread() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK_THROWS_AS(continuous_dependence(cfg, 1.0, {1e-3, 0.0}, 2), Error);
  CHECK_THROWS_AS(continuous_dependence(cfg, 0.0, {1e-3}, 2), Error);
}

TEST_CASE("continuous dependence default radius and stopping") {
  auto cfg = small_config();
  const auto y0 = cfg.ic.build(cfg.grid, cfg.level());
  const auto r = continuous_dependence(cfg, 0.0, {1e-3, 1e-4}, 2);
  CHECK(r.R == doctest::Approx(10.0 * std::sqrt(sobolev_norm_sq(y0, 1.0))));
  const auto tight = continuous_dependence(cfg, 1e-3, {1e-3}, 2);
  CHECK(tight.rows[0].stopped_paths == 2);
  CHECK(std::isfinite(tight.rows[0].ratio));
}

TEST_CASE("a priori report: silent decay and mismatch rejection") {
  auto cfg = small_config("silent");
  auto cfg2 = cfg;
  cfg2.taming.N = 50.0;
  const auto report = a_priori_report({cfg, cfg2}, 2);
  REQUIRE(report.levels.size() == 2);
  const double h1_0 = sobolev_norm_sq(cfg.ic.build(cfg.grid, cfg.level()), 1.0);
  for (const auto& l : report.levels) {
    CHECK(l.mean_sup_h1 == doctest::Approx(h1_0));
    CHECK(l.finite());
    CHECK(l.guard_exits == 0);
  }
  CHECK(report.all_finite());
  CHECK(std::abs(report.n_slope) < 1e-12);
  auto other = cfg2;
  other.dt = 5e-3;
  CHECK_THROWS_AS(a_priori_report({cfg, other}, 2), Error);
  CHECK_THROWS_AS(a_priori_report({cfg, cfg}, 2), Error);
}

TEST_CASE("log-log slope") {
  CHECK(log_log_slope({1, 2, 4}, {3, 12, 48}) == doctest::Approx(2.0));
  CHECK(std::isnan(log_log_slope({1, 2}, {0, 1})));
  CHECK_THROWS_AS(log_log_slope({1}, {1}), Error);
}
