#include "tmhd/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tmhd/analysis.hpp"
#include "tmhd/io.hpp"

namespace tmhd {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class UsageError : public Error {
 public:
  using Error::Error;
};

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  int paths = 0;
  bool quiet = false;
  std::optional<double> horizon;
};

void add_common(CLI::App* sub, Common& c, bool with_horizon) {
  sub->add_option("--config", c.config, "configuration file");
  sub->add_option("--seed", c.seed, "master seed (overrides the config)");
  sub->add_option("--out", c.out, "output directory (default tmhd-<command>)");
  sub->add_option("--paths", c.paths, "Monte Carlo paths")->check(CLI::PositiveNumber);
  sub->add_flag("--quiet", c.quiet, "suppress the stdout report");
  if (with_horizon) sub->add_option("--horizon", c.horizon, "final time (overrides the config)");
}

SimConfig resolve(const Common& c) {
  SimConfig cfg = c.config.empty() ? SimConfig::defaults() : load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.horizon) {
    cfg.horizon = *c.horizon;
    try {
      cfg.validate();
      (void)cfg.steps();
    } catch (const Error& e) {
      throw UsageError(std::string("--horizon: ") + e.what());
    }
  }
  return cfg;
}

std::string join(const std::vector<std::string>& args) {
  std::string s = "tmhd";
  for (const auto& a : args) s += " " + a;
  return s;
}

std::string csv_line(std::initializer_list<double> values) {
  std::string s;
  for (double v : values) {
    if (!s.empty()) s += ',';
    s += format_csv_double(v);
  }
  return s + '\n';
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
}

std::string snapshot_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snapshot_%06zu.stmh", i);
  return buf;
}

void write_trajectory(const fs::path& dir, const SimConfig& cfg, const TrajectoryOutput& traj) {
  fs::create_directories(dir);
  if (!traj.diagnostics.empty()) emit_diagnostics_csv(traj.diagnostics, dir / "diagnostics.csv");
  for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
    write_snapshot({traj.snapshots[i].t, cfg.taming.N, traj.snapshots[i].y}, dir / snapshot_name(i));
  }
}

int cmd_verify(const Common& c, const SimConfig& cfg, int samples, std::ostream& log) {
  RngStream rng{cfg.seed, cfg.stream, 0};
  VerifyOptions options;
  options.family_name = cfg.family_name;
  options.family_params = cfg.family_params;
  const auto report = verify_functional_estimates(cfg.grid, samples, rng, options);
  std::string csv = "check,observed,bound,passed\n";
  for (const auto& k : report.checks) {
    csv += k.name + "," + format_csv_double(k.observed) + "," + format_csv_double(k.bound) + "," +
           (k.passed ? "1" : "0") + "\n";
    log << (k.passed ? "PASS " : "FAIL ") << k.name << "  " << k.detail << "\n";
  }
  for (const auto& a : report.assumptions.checks) {
    csv += "assumption:" + a.name + "," + format_csv_double(a.worst_ratio) + ",1," + (a.passed ? "1" : "0") + "\n";
    log << (a.passed ? "PASS " : "FAIL ") << "assumption " << a.name << "  worst ratio " << a.worst_ratio << "\n";
  }
  write_text(fs::path(c.out) / "verify.csv", csv);
  log << (report.all_passed() ? "verify: all checks passed" : "verify: FAILED") << "\n";
  return report.all_passed() ? kExitOk : kExitFailed;
}

int cmd_run(const Common& c, const SimConfig& cfg, std::ostream& log) {
  const auto traj = simulate(cfg);
  write_trajectory(c.out, cfg, traj);
  log << "run: " << to_string(traj.exit_status) << " after " << traj.steps_taken << " steps, t = "
      << traj.final_time;
  if (!traj.diagnostics.empty()) log << ", ||y||_H1^2 = " << traj.diagnostics.back().h1_sq;
  log << "\n";
  if (!traj.message.empty()) log << "  " << traj.message << "\n";
  return traj.exit_status == ExitStatus::completed ? kExitOk : kExitFailed;
}

int cmd_twin(const Common& c, const SimConfig& cfg, double delta, const Wavevector& mode, double radius,
             std::ostream& log) {
  const StatePair y1 = cfg.ic.build(cfg.grid, cfg.level());
  StatePair e;
  try {
    e = truncate_modes(perturbation_direction(cfg.grid, mode), cfg.level());
  } catch (const Error& err) {
    throw UsageError(std::string("--mode: ") + err.what());
  }
  if (e.max_abs() == 0.0) throw UsageError("--mode: outside the Galerkin level");
  const auto twin = twin_simulate(cfg, y1, y1 + delta * e, radius);
  write_trajectory(fs::path(c.out) / "first", cfg, twin.first);
  write_trajectory(fs::path(c.out) / "second", cfg, twin.second);
  std::string csv = "t,h0_sq,h1_sq\n";
  for (const auto& d : twin.difference) csv += csv_line({d.t, d.h0_sq, d.h1_sq});
  write_text(fs::path(c.out) / "difference.csv", csv);
  if (!twin.difference.empty()) {
    const auto& last = twin.difference.back();
    log << "twin: t = " << last.t << ", ||z||_H1^2 / delta^2 = " << last.h1_sq / (delta * delta)
        << (twin.stopped ? " (stopped at the radius)" : "") << "\n";
  }
  const bool ok = twin.first.exit_status == ExitStatus::completed && twin.second.exit_status == ExitStatus::completed;
  return ok ? kExitOk : kExitFailed;
}

int cmd_ergodic(const Common& c, const SimConfig& cfg, std::ostream& log) {
  const auto traj = simulate(cfg);
  write_trajectory(c.out, cfg, traj);
  if (traj.exit_status != ExitStatus::completed) {
    log << "ergodic: trajectory ended with " << to_string(traj.exit_status) << "\n";
    return kExitFailed;
  }
  const auto report = ergodic_report(traj);
  std::string avg = "T";
  for (const auto& ra : report.averages) avg += "," + to_string(ra.observable);
  avg += "\n";
  for (std::size_t i = 0; i < report.averages.front().T.size(); ++i) {
    avg += format_csv_double(report.averages.front().T[i]);
    for (const auto& ra : report.averages) avg += "," + format_csv_double(ra.average[i]);
    avg += "\n";
  }
  write_text(fs::path(c.out) / "running_average.csv", avg);
  std::string hist = "observable,bin,lo,hi,count\n";
  for (const auto& h : report.histograms) {
    const double w = (h.hi - h.lo) / static_cast<double>(h.counts.size());
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
      hist += to_string(h.observable) + "," + std::to_string(b) + "," + format_csv_double(h.lo + w * b) + "," +
              format_csv_double(h.lo + w * (b + 1)) + "," + std::to_string(h.counts[b]) + "\n";
    }
  }
  write_text(fs::path(c.out) / "histograms.csv", hist);
  for (const auto& ra : report.averages) {
    log << to_string(ra.observable) << ": average " << ra.average.back() << ", tail fluctuation "
        << ra.tail_fluctuation << ", growth ratio " << ra.growth_ratio << "\n";
  }
  return kExitOk;
}

int cmd_order(const Common& c, const SimConfig& cfg, const std::vector<double>& levels, double reference,
              std::ostream& log) {
  const auto report = estimate_strong_order(cfg, levels, c.paths > 0 ? c.paths : 16, reference);
  std::string csv = "dt,error\n";
  for (std::size_t i = 0; i < report.dt_levels.size(); ++i) {
    csv += csv_line({report.dt_levels[i], report.errors[i]});
    log << "dt " << report.dt_levels[i] << "  error " << report.errors[i] << "\n";
  }
  write_text(fs::path(c.out) / "order.csv", csv);
  log << "strong order " << report.order << " (reference dt " << report.reference_dt << ")\n";
  return std::isfinite(report.order) ? kExitOk : kExitFailed;
}

int cmd_apriori(const Common& c, const SimConfig& cfg, const std::vector<double>& levels, std::ostream& log) {
  std::vector<SimConfig> cfgs;
  for (double N : levels) {
    auto k = cfg;
    k.taming.N = N;
    try {
      k.validate();
    } catch (const Error& e) {
      throw UsageError(std::string("--taming-levels: ") + e.what());
    }
    cfgs.push_back(k);
  }
  const auto report = a_priori_report(cfgs, c.paths > 0 ? c.paths : 64);
  std::string csv = "N,paths,mean_sup_h1,stderr_sup_h1,h2_integral,grad_ysq_integral,l4_integral,guard_exits,error_exits\n";
  for (const auto& l : report.levels) {
    csv += format_csv_double(l.N) + "," + std::to_string(l.paths) + "," + format_csv_double(l.mean_sup_h1) + "," +
           format_csv_double(l.stderr_sup_h1) + "," + format_csv_double(l.h2_integral) + "," +
           format_csv_double(l.grad_ysq_integral) + "," + format_csv_double(l.l4_integral) + "," +
           std::to_string(l.guard_exits) + "," + std::to_string(l.error_exits) + "\n";
    log << "N " << l.N << "  E sup ||y||_H1^2 " << l.mean_sup_h1 << " +- " << l.stderr_sup_h1 << "  guard exits "
        << l.guard_exits << "\n";
  }
  write_text(fs::path(c.out) / "apriori.csv", csv);
  log << "N-scaling exponent " << report.n_slope << "\n";
  return report.all_finite() ? kExitOk : kExitFailed;
}

int cmd_feller(const Common& c, const SimConfig& cfg, const std::vector<double>& deltas, double t,
               const std::vector<std::string>& phi_names, const Wavevector& mode, std::ostream& log) {
  std::vector<Phi> phis;
  try {
    for (const auto& name : phi_names) phis.push_back(parse_phi(name));
  } catch (const Error& e) {
    throw UsageError(std::string("--phi: ") + e.what());
  }
  if (phis.empty()) phis = feller_dictionary();
  const auto report = feller_modulus(cfg, phis, deltas, t, c.paths > 0 ? c.paths : 16, mode);
  std::string csv = "phi,delta,difference,stderr\n";
  for (std::size_t i = 0; i < report.phi_names.size(); ++i) {
    for (std::size_t j = 0; j < report.deltas.size(); ++j) {
      csv += report.phi_names[i] + "," + format_csv_double(report.deltas[j]) + "," +
             format_csv_double(report.difference[i][j]) + "," + format_csv_double(report.stderr[i][j]) + "\n";
      log << report.phi_names[i] << "  delta " << report.deltas[j] << "  |P_t phi(y+delta e) - P_t phi(y)| "
          << report.difference[i][j] << " +- " << report.stderr[i][j] << "\n";
    }
  }
  write_text(fs::path(c.out) / "feller.csv", csv);
  return kExitOk;
}

}  // namespace

int run_command(const std::vector<std::string>& args) {
  CLI::App app{"Stochastic tamed MHD on the 3-torus: Galerkin simulator and verification suites", "tmhd"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  Common c;
  int samples = 100;
  double delta = 1e-3;
  std::vector<int> mode{1, 0, 0};
  double radius = std::numeric_limits<double>::infinity();
  std::vector<double> order_levels{4e-3, 2e-3, 1e-3};
  double reference = 2.5e-4;
  std::vector<double> taming_levels{10.0, 20.0, 40.0};
  std::vector<double> feller_deltas{1e-2, 1e-3, 1e-4};
  double feller_t = 0.5;
  std::vector<std::string> phi_names;

  auto* verify = app.add_subcommand("verify", "functional-estimate and coefficient assumption checks");
  add_common(verify, c, false);
  verify->add_option("--samples", samples, "random divergence-free samples")->check(CLI::Range(10, 1000000));

  auto* run = app.add_subcommand("run", "single trajectory with diagnostics and snapshots");
  add_common(run, c, true);

  auto* twin = app.add_subcommand("twin", "two trajectories on one noise path from nearby initial data");
  add_common(twin, c, true);
  twin->add_option("--delta", delta, "H1 size of the initial separation (> 0)");
  twin->add_option("--mode", mode, "wavevector of the separation, e.g. 1,0,0")->delimiter(',')->expected(3);
  twin->add_option("--radius", radius, "stop both members once either leaves this H1 ball");

  auto* ergodic = app.add_subcommand("ergodic", "long run with running time averages and histograms");
  add_common(ergodic, c, true);

  auto* order = app.add_subcommand("order", "strong convergence order against a fine reference");
  add_common(order, c, false);
  order->add_option("--levels", order_levels, "coarse time steps")->delimiter(',');
  order->add_option("--reference", reference, "reference time step");

  auto* apriori = app.add_subcommand("apriori", "moment bounds across taming thresholds");
  add_common(apriori, c, true);
  apriori->add_option("--taming-levels", taming_levels, "taming thresholds N")->delimiter(',');

  auto* feller = app.add_subcommand("feller", "semigroup differences for bounded Lipschitz observables");
  add_common(feller, c, false);
  feller->add_option("--deltas", feller_deltas, "initial separations, decreasing")->delimiter(',');
  feller->add_option("--t", feller_t, "evaluation time");
  feller->add_option("--phi", phi_names, "observables (default: the full dictionary)")->delimiter(',');
  feller->add_option("--mode", mode, "wavevector of the separation")->delimiter(',')->expected(3);

  std::vector<std::string> argv_storage{"tmhd"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  if (c.out.empty()) c.out = "tmhd-" + name;
  std::ostringstream sink;
  std::ostream& log = c.quiet ? static_cast<std::ostream&>(sink) : std::cout;

  try {
    if (name == "twin" && !(delta > 0.0 && std::isfinite(delta))) throw UsageError("--delta must be positive");
    const SimConfig cfg = resolve(c);
    const Wavevector k{mode[0], mode[1], mode[2]};

    json extra = json::object();
    if (name == "verify") extra["samples"] = samples;
    if (name == "twin") extra = {{"delta", delta}, {"mode", mode}, {"radius", std::isfinite(radius) ? json(radius) : json("inf")}};
    if (name == "order") extra = {{"levels", order_levels}, {"reference", reference}, {"paths", c.paths > 0 ? c.paths : 16}};
    if (name == "apriori") extra = {{"taming_levels", taming_levels}, {"paths", c.paths > 0 ? c.paths : 64}};
    if (name == "feller") {
      extra = {{"deltas", feller_deltas}, {"t", feller_t}, {"phi", phi_names}, {"mode", mode},
               {"paths", c.paths > 0 ? c.paths : 16}};
    }
    write_metadata(c.out, join(args), cfg, extra.dump());

    if (name == "verify") return cmd_verify(c, cfg, samples, log);
    if (name == "run") return cmd_run(c, cfg, log);
    if (name == "twin") return cmd_twin(c, cfg, delta, k, radius, log);
    if (name == "ergodic") return cmd_ergodic(c, cfg, log);
    if (name == "order") return cmd_order(c, cfg, order_levels, reference, log);
    if (name == "apriori") return cmd_apriori(c, cfg, taming_levels, log);
    return cmd_feller(c, cfg, feller_deltas, feller_t, phi_names, k, log);
  } catch (const UsageError& e) {
    std::cerr << "tmhd " << name << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "tmhd " << name << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "tmhd " << name << ": " << e.what() << "\n";
    return kExitFailed;
  }
}

int run_command(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_command(args);
}

}  // namespace tmhd
