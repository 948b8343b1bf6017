#include "tmhd/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "tmhd/operators.hpp"

namespace tmhd {

namespace {

double mean_of(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

double stderr_of(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  const double m = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size() - 1) / static_cast<double>(x.size()));
}

std::string sci(double v) {
  std::ostringstream out;
  out.precision(4);
  out << v;
  return out.str();
}

EstimateCheck make_check(std::string name, double observed, double bound, std::string detail = {}) {
  const bool ok = std::isfinite(observed) && observed <= bound;
  return {std::move(name), observed, bound, ok, std::move(detail)};
}

// Smooth low-mode test field used by the fitted-constant checks.
StatePair test_field(const GridSpec& g) {
  return single_mode_state(g, {1, 2, 0}, 0, 1.0, FieldSlot::both) +
         single_mode_state(g, {0, 1, 1}, 1, 0.5, FieldSlot::both);
}

StatePair bessel_apply(const StatePair& y, double order) {
  StatePair out = y;
  const auto& table = modes(y.grid());
  for (std::size_t m = 0; m < table.k.size(); ++m) {
    const double w = std::pow(1.0 + table.k_sq[m], order);
    for (int c = 0; c < 3; ++c) {
      out.v(c, m) *= w;
      out.B(c, m) *= w;
    }
  }
  return out;
}

// sum_k <B_k(y), ytest>_H1^2 = sum_k <(sigma.grad)y + H_k(y), (I - Lap) ytest>_L2^2
// by the trapezoid rule on the padded grid.
double b_test_sum(const StatePair& y, const StatePair& ytest, const CoefficientFamily& fam) {
  const GridSpec& g = y.grid();
  const int m = g.padded();
  const auto w = bessel_apply(ytest, 1.0);
  const auto wv = to_physical(w.v, m);
  const auto wb = to_physical(w.B, m);
  const auto pv = to_physical(y.v, m);
  const auto pb = to_physical(y.B, m);
  std::array<PhysicalVector, 3> gv, gb;
  for (int j = 0; j < 3; ++j) {
    gv[j] = to_physical(spectral_derivative(y.v, j), m);
    gb[j] = to_physical(spectral_derivative(y.B, j), m);
  }
  std::vector<double> acc(fam.k_noise, 0.0);
  std::size_t i = 0;
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      for (int c = 0; c < m; ++c, ++i) {
        const Vec3 x{kTwoPi * a / m, kTwoPi * b / m, kTwoPi * c / m};
        const Vec3 hv = fam.psi({pv.comp[0][i], pv.comp[1][i], pv.comp[2][i]});
        const Vec3 hb = fam.psi({pb.comp[0][i], pb.comp[1][i], pb.comp[2][i]});
        for (std::size_t k = 0; k < fam.k_noise; ++k) {
          const Vec3 s = fam.sigma(k, x);
          const Vec3 sb = fam.sigma_bar(k, x);
          const double wk = fam.h_weight(k, false), wbk = fam.h_weight(k, true);
          double sum = 0.0;
          for (int l = 0; l < 3; ++l) {
            double tv = wk * hv[l], tb = wbk * hb[l];
            for (int j = 0; j < 3; ++j) {
              tv += s[j] * gv[j].comp[l][i];
              tb += sb[j] * gb[j].comp[l][i];
            }
            sum += tv * wv.comp[l][i] + tb * wb.comp[l][i];
          }
          acc[k] += sum;
        }
      }
    }
  }
  const double scale = kBoxVolume / static_cast<double>(pv.size());
  double total = 0.0;
  for (double v : acc) total += (v * scale) * (v * scale);
  return total;
}

struct ConstantSample {
  double b_test = 0.0;     // lhs / rhs of the test-function B bound
  double stability = 0.0;  // lhs / rhs of the A stability bound
};

ConstantSample fitted_ratios(const StatePair& y, const StatePair& y2, const CoefficientFamily& fam,
                             const TamingSpec& taming) {
  const auto ytest = test_field(y.grid());
  ConstantSample s;
  const double rhs_b = fam.metadata().F_H_L1() + sobolev_norm_sq(y, 0.0);
  s.b_test = rhs_b > 0.0 ? b_test_sum(y, ytest, fam) / rhs_b : 0.0;
  const double lhs_a = std::abs(sobolev_inner(operator_A(y, taming) - operator_A(y2, taming), ytest, 1.0));
  const double rhs_a =
      std::sqrt(sobolev_norm_sq(y - y2, 0.0)) * (1.0 + sobolev_norm_sq(y, 1.0) + sobolev_norm_sq(y2, 1.0));
  s.stability = rhs_a > 0.0 ? lhs_a / rhs_a : 0.0;
  return s;
}

double sigma_mass_on_grid(const CoefficientFamily& fam, int m) {
  double worst = 0.0;
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      for (int c = 0; c < m; ++c) {
        const Vec3 x{kTwoPi * a / m, kTwoPi * b / m, kTwoPi * c / m};
        double sum = 0.0;
        for (std::size_t k = 0; k < fam.k_noise; ++k) {
          const Vec3 s = fam.sigma(k, x), sb = fam.sigma_bar(k, x);
          for (int j = 0; j < 3; ++j) sum += s[j] * s[j] + sb[j] * sb[j];
        }
        worst = std::max(worst, sum);
      }
    }
  }
  return worst;
}

}  // namespace

// Functional estimates ----------------------------------------------------------

bool FunctionalEstimateReport::all_passed() const {
  for (const auto& c : checks) {
    if (!c.passed) return false;
  }
  return assumptions.all_passed();
}

const EstimateCheck* FunctionalEstimateReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

FunctionalEstimateReport verify_functional_estimates(const GridSpec& g, int n_samples, RngStream& rng,
                                                     const VerifyOptions& options) {
  g.validate();
  options.taming.validate();
  if (n_samples < 10) throw Error("verify_functional_estimates: need at least 10 samples");
  const auto fam = make_family(options.family_name, options.family_params, g);
  const auto& meta = fam.metadata();
  const GridSpec fine = GridSpec::with_default_cutoff(2 * g.n);
  const auto fam_fine = make_family(options.family_name, options.family_params, fine);
  const int subset = std::clamp(options.fine_subset, 0, n_samples);

  FunctionalEstimateReport report;
  report.grid = g;
  report.samples = n_samples;

  std::vector<StatePair> samples;
  samples.reserve(static_cast<std::size_t>(n_samples));
  for (int s = 0; s < n_samples; ++s) samples.push_back(random_state(g, rng, options.slope, options.rms));

  double hessian = 0.0, bilinear = 0.0, pairing = 0.0, hs0 = 0.0, hs1 = 0.0;
  int refinement_failures = 0;
  double pairing_fine = 0.0;
  double c_b = 0.0, c_a = 0.0, c_b_sub = 0.0, c_a_sub = 0.0, c_b_fine = 0.0, c_a_fine = 0.0;
  const double D = meta.sigma_derivative;
  const double C1 = std::max(18.0 * D * D + 36.0 * meta.C_H * meta.C_H + 0.5, 20.0 * meta.C_H);
  for (int s = 0; s < n_samples; ++s) {
    const auto& y = samples[static_cast<std::size_t>(s)];
    const auto& y2 = samples[static_cast<std::size_t>((s + 1) % n_samples)];
    const double h0 = sobolev_norm_sq(y, 0.0), h1 = sobolev_norm_sq(y, 1.0), h2 = sobolev_norm_sq(y, 2.0);
    hessian = std::max(hessian, hessian_norm_sq(y) / h2);

    const auto e = energy_pairing(y, options.taming);
    bilinear = std::max(bilinear, std::abs(e.bilinear_pairing) / std::sqrt(h0 * gradient_norm_sq(y)));
    const double rel = std::abs(e.residual()) / e.scale();
    pairing = std::max(pairing, rel);

    const double rhs0 = 0.5 * h1 + (2.0 * meta.C_H - 0.5) * h0 + 2.0 * meta.F_H_L1();
    const double rhs1 = 0.5 * h2 + C1 * h1 + 20.0 * meta.F_H_L1();
    hs0 = std::max(hs0, hs_norm_B(y, fam, 0.0) / rhs0);
    hs1 = std::max(hs1, hs_norm_B(y, fam, 1.0) / rhs1);

    const auto ratios = fitted_ratios(y, y2, fam, options.taming);
    c_b = std::max(c_b, ratios.b_test);
    c_a = std::max(c_a, ratios.stability);

    if (s < subset) {
      const auto yf = embed(y, fine);
      const auto ef = energy_pairing(yf, options.taming);
      const double rel_fine = std::abs(ef.residual()) / ef.scale();
      pairing_fine = std::max(pairing_fine, rel_fine);
      if (!(std::abs(ef.residual()) < std::abs(e.residual()))) ++refinement_failures;
      const auto rf = fitted_ratios(yf, embed(y2, fine), fam_fine, options.taming);
      c_b_sub = std::max(c_b_sub, ratios.b_test);
      c_a_sub = std::max(c_a_sub, ratios.stability);
      c_b_fine = std::max(c_b_fine, rf.b_test);
      c_a_fine = std::max(c_a_fine, rf.stability);
    }
  }

  auto drift = [](double coarse, double fine_value) {
    if (coarse == 0.0 && fine_value == 0.0) return 0.0;
    return std::abs(fine_value / coarse - 1.0);
  };
  const double mass = std::max(sigma_mass_on_grid(fam, g.padded()), meta.sigma_mass);

  report.checks.push_back(make_check("hessian_ratio", hessian, 9.0 + 1e-10, "max ||D^2 y||^2 / ||y||_H2^2"));
  report.checks.push_back(
      make_check("bilinear_cancellation", bilinear, 1e-10, "max |<P bilinear(y), y>| / (||y|| ||grad y||)"));
  report.checks.push_back(make_check("pairing_residual", pairing, 1e-6,
                                     "max |<A y, y> + ||grad y||^2 + int g_N |y|^2| / scale"));
  report.checks.push_back(make_check("pairing_refinement", refinement_failures, 0.0,
                                     "samples whose residual does not shrink on the doubled grid (worst there " +
                                         sci(pairing_fine) + ")"));
  report.checks.push_back(make_check("hs_order0", hs0, 1.0, "max hs_norm_B(y, 0) / bound"));
  report.checks.push_back(make_check("hs_order1", hs1, 1.0, "max hs_norm_B(y, 1) / bound"));
  report.checks.push_back(make_check("sigma_mass", mass, kSigmaMassLimit + 1e-12, "sup_x sum_k |sigma_k|^2 + |sigma_bar_k|^2"));
  report.checks.push_back(make_check("B_test_constant", drift(c_b_sub, c_b_fine), options.constant_drift,
                                     "fitted constant " + sci(c_b) + "; relative drift on the doubled grid"));
  report.checks.push_back(make_check("A_stability_constant", drift(c_a_sub, c_a_fine), options.constant_drift,
                                     "fitted constant " + sci(c_a) + "; relative drift on the doubled grid"));
  report.assumptions = validate_assumptions(fam, g, options.assumption_samples, rng);
  return report;
}

// A priori moments ----------------------------------------------------------------

bool AprioriLevel::finite() const {
  return std::isfinite(mean_sup_h1) && std::isfinite(h2_integral) && std::isfinite(grad_ysq_integral) &&
         std::isfinite(l4_integral);
}

int AprioriReport::guard_exits() const {
  int n = 0;
  for (const auto& l : levels) n += l.guard_exits;
  return n;
}

bool AprioriReport::all_finite() const {
  for (const auto& l : levels) {
    if (!l.finite() || l.error_exits > 0) return false;
  }
  return true;
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw Error("log_log_slope: need two or more matching points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double n = static_cast<double>(x.size());
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {

double trapezoid(const std::vector<DiagnosticsRecord>& d, double DiagnosticsRecord::*field) {
  double s = 0.0;
  for (std::size_t i = 1; i < d.size(); ++i) s += 0.5 * (d[i].t - d[i - 1].t) * (d[i].*field + d[i - 1].*field);
  return s;
}

}  // namespace

AprioriReport a_priori_report(const std::vector<SimConfig>& cfgs, int paths) {
  if (cfgs.empty()) throw Error("a_priori_report: no configurations");
  if (paths < 1) throw Error("a_priori_report: need at least one path");
  const auto& ref = cfgs.front();
  std::set<double> seen;
  for (const auto& c : cfgs) {
    c.validate();
    if (!(c.grid == ref.grid) || c.level() != ref.level() || c.family_name != ref.family_name ||
        c.family_params != ref.family_params || c.horizon != ref.horizon || c.dt != ref.dt ||
        c.taming.c_taming != ref.taming.c_taming || c.taming.c1 != ref.taming.c1) {
      throw Error("a_priori_report: configurations must differ only in taming N");
    }
    if (!seen.insert(c.taming.N).second) throw Error("a_priori_report: repeated taming N");
  }

  AprioriReport report;
  std::vector<double> Ns, sups;
  for (const auto& cfg : cfgs) {
    const StatePair y0 = cfg.ic.build(cfg.grid, cfg.level());
    std::vector<TrajectoryOutput> runs(static_cast<std::size_t>(paths));
    parallel_for(paths, [&](int p) {
      SimConfig c = cfg;
      c.stream = cfg.stream + static_cast<std::uint64_t>(p);
      c.snapshot_every = 0;
      auto out = simulate_coupled(c, {y0});
      runs[static_cast<std::size_t>(p)] = std::move(out.members.front());
    });
    AprioriLevel level;
    level.N = cfg.taming.N;
    level.paths = paths;
    std::vector<double> sup;
    double h2 = 0.0, grad = 0.0, l4 = 0.0;
    for (const auto& r : runs) {
      if (r.exit_status == ExitStatus::blowup_guard) ++level.guard_exits;
      if (r.exit_status == ExitStatus::error) ++level.error_exits;
      sup.push_back(r.sup_h1_sq);
      h2 += r.h2_integral;
      grad += trapezoid(r.diagnostics, &DiagnosticsRecord::grad_ysq_sq);
      l4 += trapezoid(r.diagnostics, &DiagnosticsRecord::l4_fourth);
    }
    level.mean_sup_h1 = mean_of(sup);
    level.stderr_sup_h1 = stderr_of(sup);
    level.h2_integral = h2 / paths;
    level.grad_ysq_integral = grad / paths;
    level.l4_integral = l4 / paths;
    Ns.push_back(level.N);
    sups.push_back(level.mean_sup_h1);
    report.levels.push_back(level);
  }
  report.n_slope = cfgs.size() >= 2 ? log_log_slope(Ns, sups) : std::numeric_limits<double>::quiet_NaN();
  return report;
}

// Continuous dependence ---------------------------------------------------------

StatePair perturbation_direction(const GridSpec& g, const Wavevector& mode) {
  if (mode == Wavevector{0, 0, 0} || !in_cube(g, mode)) throw Error("perturbation mode outside the retained cube");
  auto e = single_mode_state(g, mode, 0, 1.0, FieldSlot::both);
  return (1.0 / std::sqrt(sobolev_norm_sq(e, 1.0))) * e;
}

double DependenceReport::spread() const {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& r : rows) {
    lo = std::min(lo, r.ratio);
    hi = std::max(hi, r.ratio);
  }
  return rows.empty() || !(lo > 0.0) ? std::numeric_limits<double>::infinity() : hi / lo;
}

namespace {

void check_deltas(const std::vector<double>& deltas) {
  if (deltas.empty()) throw Error("deltas: empty list");
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] > 0.0) || !std::isfinite(deltas[i])) throw Error("deltas: every delta must be positive");
    if (i > 0 && !(deltas[i] < deltas[i - 1])) throw Error("deltas: must be strictly decreasing");
  }
}

}  // namespace

DependenceReport continuous_dependence(const SimConfig& cfg, double R, const std::vector<double>& deltas,
                                       int paths, const Wavevector& mode) {
  cfg.validate();
  check_deltas(deltas);
  if (paths < 1) throw Error("continuous_dependence: need at least one path");
  const StatePair y0 = cfg.ic.build(cfg.grid, cfg.level());
  const StatePair e = truncate_modes(perturbation_direction(cfg.grid, mode), cfg.level());
  if (e.max_abs() == 0.0) throw Error("continuous_dependence: perturbation mode outside the Galerkin level");
  if (!(R > 0.0)) R = 10.0 * std::sqrt(sobolev_norm_sq(y0, 1.0));
  if (!(R > 0.0)) throw Error("continuous_dependence: zero initial condition needs an explicit R");

  const std::size_t D = deltas.size();
  const long steps = cfg.steps();
  const SemiImplicitStepper stepper(cfg);
  std::vector<std::vector<double>> ratio(static_cast<std::size_t>(paths), std::vector<double>(D, 0.0));
  std::vector<std::vector<char>> stopped(static_cast<std::size_t>(paths), std::vector<char>(D, 0));

  parallel_for(paths, [&](int p) {
    RngStream rng{cfg.seed, cfg.stream + static_cast<std::uint64_t>(p), 0};
    StatePair base = y0;
    std::vector<StatePair> pert;
    std::vector<double> z0(D);
    for (std::size_t i = 0; i < D; ++i) {
      pert.push_back(y0 + deltas[i] * e);
      z0[i] = sobolev_norm_sq(pert[i] - base, 1.0);
    }
    std::vector<char> frozen(D, 0);
    std::vector<StatePair> z(D);
    const double R2 = R * R;
    for (long s = 1; s <= steps; ++s) {
      const auto inc = sample_increments(rng, cfg.dt, cfg.family.k_noise);
      base = stepper.step(base, inc);
      const bool base_out = sobolev_norm_sq(base, 1.0) > R2;
      bool any = false;
      for (std::size_t i = 0; i < D; ++i) {
        if (frozen[i]) continue;
        pert[i] = stepper.step(pert[i], inc);
        if (base_out || sobolev_norm_sq(pert[i], 1.0) > R2) {
          frozen[i] = 1;
          z[i] = pert[i] - base;
        } else {
          any = true;
        }
      }
      if (!any) break;
    }
    for (std::size_t i = 0; i < D; ++i) {
      if (!frozen[i]) z[i] = pert[i] - base;
      ratio[static_cast<std::size_t>(p)][i] = sobolev_norm_sq(z[i], 1.0) / z0[i];
      stopped[static_cast<std::size_t>(p)][i] = frozen[i];
    }
  });

  DependenceReport report;
  report.R = R;
  report.t = cfg.horizon;
  report.mode = mode;
  for (std::size_t i = 0; i < D; ++i) {
    std::vector<double> values;
    DependenceRow row;
    row.delta = deltas[i];
    for (int p = 0; p < paths; ++p) {
      values.push_back(ratio[static_cast<std::size_t>(p)][i]);
      row.stopped_paths += stopped[static_cast<std::size_t>(p)][i];
    }
    row.ratio = mean_of(values);
    row.stderr = stderr_of(values);
    report.rows.push_back(row);
  }
  return report;
}

// Time averages -------------------------------------------------------------------

std::string to_string(Observable o) {
  switch (o) {
    case Observable::h1_sq:
      return "h1_sq";
    case Observable::h2_sq:
      return "h2_sq";
    case Observable::E_kin:
      return "E_kin";
    case Observable::E_mag:
      return "E_mag";
    case Observable::l4_fourth:
      return "l4_fourth";
    case Observable::cross_helicity:
      return "cross_helicity";
  }
  return "unknown";
}

Observable parse_observable(const std::string& name) {
  for (auto o : all_observables()) {
    if (to_string(o) == name) return o;
  }
  throw Error("unknown observable '" + name + "'");
}

double observable_value(const DiagnosticsRecord& r, Observable o) {
  switch (o) {
    case Observable::h1_sq:
      return r.h1_sq;
    case Observable::h2_sq:
      return r.h2_sq;
    case Observable::E_kin:
      return r.E_kin;
    case Observable::E_mag:
      return r.E_mag;
    case Observable::l4_fourth:
      return r.l4_fourth;
    case Observable::cross_helicity:
      return r.cross_helicity;
  }
  return 0.0;
}

RunningAverage running_time_average(const TrajectoryOutput& traj, Observable o) {
  const auto& d = traj.diagnostics;
  if (d.size() < 2) throw Error("running_time_average: trajectory has fewer than two records");
  if (traj.exit_status != ExitStatus::completed) throw Error("running_time_average: trajectory did not complete");
  RunningAverage ra;
  ra.observable = o;
  double integral = 0.0;
  ra.T.push_back(d[0].t);
  ra.average.push_back(observable_value(d[0], o));
  for (std::size_t i = 1; i < d.size(); ++i) {
    integral += 0.5 * (d[i].t - d[i - 1].t) * (observable_value(d[i], o) + observable_value(d[i - 1], o));
    const double span = d[i].t - d[0].t;
    ra.T.push_back(d[i].t);
    ra.average.push_back(integral / span);
  }
  const double t_end = ra.T.back(), half = d[0].t + 0.5 * (t_end - d[0].t);
  const double final_avg = ra.average.back();
  std::size_t first = 0;
  while (first < ra.T.size() && ra.T[first] < half) ++first;
  const double at_half = ra.average[first];
  for (std::size_t i = first; i < ra.T.size(); ++i) {
    const double dev = std::abs(ra.average[i] - final_avg);
    ra.tail_fluctuation = std::max(ra.tail_fluctuation, final_avg != 0.0 ? dev / std::abs(final_avg)
                                                                         : (dev == 0.0 ? 0.0 : INFINITY));
    if (at_half != 0.0) ra.growth_ratio = std::max(ra.growth_ratio, ra.average[i] / at_half);
  }
  return ra;
}

Histogram histogram(const TrajectoryOutput& traj, Observable o, int bins) {
  if (traj.diagnostics.empty()) throw Error("histogram: empty trajectory");
  if (bins < 1) throw Error("histogram: need at least one bin");
  Histogram h;
  h.observable = o;
  h.lo = std::numeric_limits<double>::infinity();
  h.hi = -std::numeric_limits<double>::infinity();
  for (const auto& r : traj.diagnostics) {
    const double v = observable_value(r, o);
    h.lo = std::min(h.lo, v);
    h.hi = std::max(h.hi, v);
  }
  if (!(h.hi > h.lo)) {
    h.lo -= 0.5;
    h.hi += 0.5;
  }
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  const double width = (h.hi - h.lo) / bins;
  for (const auto& r : traj.diagnostics) {
    const double v = observable_value(r, o);
    auto b = static_cast<long>(std::floor((v - h.lo) / width));
    b = std::clamp(b, 0L, static_cast<long>(bins) - 1);
    ++h.counts[static_cast<std::size_t>(b)];
  }
  return h;
}

const RunningAverage& ErgodicReport::average(Observable o) const {
  for (const auto& a : averages) {
    if (a.observable == o) return a;
  }
  throw Error("ErgodicReport: observable " + to_string(o) + " not recorded");
}

ErgodicReport ergodic_report(const TrajectoryOutput& traj, const std::vector<Observable>& observables) {
  ErgodicReport report;
  for (auto o : observables) {
    report.averages.push_back(running_time_average(traj, o));
    report.histograms.push_back(histogram(traj, o));
  }
  return report;
}

// Semigroup ------------------------------------------------------------------------

double Phi::operator()(const StatePair& y) const {
  switch (kind) {
    case Kind::one:
      return 1.0;
    case Kind::tanh_energy:
      return std::tanh(sobolev_norm_sq(y, 0.0) / kBoxVolume);
    case Kind::inverse_h1:
      return 1.0 / (1.0 + sobolev_norm_sq(y, 1.0) / kBoxVolume);
    case Kind::normalized_cross_helicity:
      return sobolev_inner(y.v, y.B, 0.0) / (kBoxVolume + sobolev_norm_sq(y, 0.0));
  }
  return 0.0;
}

double Phi::bound() const { return kind == Kind::normalized_cross_helicity ? 0.5 : 1.0; }

double Phi::lipschitz() const {
  const double inv = 1.0 / std::sqrt(kBoxVolume);
  switch (kind) {
    case Kind::one:
      return 0.0;
    case Kind::tanh_energy:
      return 2.0 * inv;
    case Kind::inverse_h1:
    case Kind::normalized_cross_helicity:
      return inv;
  }
  return 0.0;
}

std::string Phi::name() const {
  switch (kind) {
    case Kind::one:
      return "one";
    case Kind::tanh_energy:
      return "tanh_energy";
    case Kind::inverse_h1:
      return "inverse_h1";
    case Kind::normalized_cross_helicity:
      return "normalized_cross_helicity";
  }
  return "unknown";
}

Phi parse_phi(const std::string& name) {
  for (auto k : {Phi::Kind::one, Phi::Kind::tanh_energy, Phi::Kind::inverse_h1,
                 Phi::Kind::normalized_cross_helicity}) {
    if (Phi{k}.name() == name) return Phi{k};
  }
  static const std::set<std::string> unbounded{"energy", "h0_sq", "h1_sq", "h2_sq", "E_kin",
                                               "E_mag",  "l4_fourth", "cross_helicity"};
  if (unbounded.count(name)) throw Error("phi '" + name + "' is unbounded; the semigroup needs bounded phi");
  throw Error("unknown phi '" + name + "'");
}

namespace {

// Final states of every IC for each path, all ICs sharing path p's noise.
std::vector<std::vector<StatePair>> coupled_finals(const SimConfig& cfg, const std::vector<StatePair>& y0,
                                                   double t, int paths) {
  SimConfig c = cfg;
  c.horizon = t;
  c.validate();
  (void)c.steps();
  std::vector<std::vector<StatePair>> finals(static_cast<std::size_t>(paths));
  RunOptions options;
  options.keep_diagnostics = false;
  parallel_for(paths, [&](int p) {
    SimConfig cp = c;
    cp.stream = cfg.stream + static_cast<std::uint64_t>(p);
    auto out = simulate_coupled(cp, y0, options);
    for (auto& m : out.members) {
      if (m.exit_status != ExitStatus::completed) {
        throw NumericalError("semigroup estimate: a member stopped early (" + to_string(m.exit_status) + ")");
      }
      finals[static_cast<std::size_t>(p)].push_back(std::move(m.final_state));
    }
  });
  return finals;
}

}  // namespace

std::vector<SemigroupRow> estimate_semigroup(const SimConfig& cfg, const Phi& phi,
                                             const std::vector<StatePair>& y0_list, double t, int paths) {
  if (paths < 16) throw Error("estimate_semigroup: need at least 16 paths");
  if (y0_list.empty()) throw Error("estimate_semigroup: no initial conditions");
  const auto finals = coupled_finals(cfg, y0_list, t, paths);
  std::vector<SemigroupRow> rows;
  for (std::size_t i = 0; i < y0_list.size(); ++i) {
    std::vector<double> values;
    for (int p = 0; p < paths; ++p) values.push_back(phi(finals[static_cast<std::size_t>(p)][i]));
    rows.push_back({i, mean_of(values), stderr_of(values)});
  }
  return rows;
}

bool FellerReport::monotone(std::size_t phi) const {
  const auto& d = difference.at(phi);
  const auto& se = stderr.at(phi);
  for (std::size_t i = 1; i < d.size(); ++i) {
    if (d[i] > d[i - 1] + se[i]) return false;
  }
  return true;
}

FellerReport feller_modulus(const SimConfig& cfg, const std::vector<Phi>& phis, const std::vector<double>& deltas,
                            double t, int paths, const Wavevector& mode) {
  if (paths < 16) throw Error("feller_modulus: need at least 16 paths");
  if (phis.empty()) throw Error("feller_modulus: no test functions");
  check_deltas(deltas);
  const StatePair y0 = cfg.ic.build(cfg.grid, cfg.level());
  const StatePair e = truncate_modes(perturbation_direction(cfg.grid, mode), cfg.level());
  std::vector<StatePair> ics{y0};
  for (double d : deltas) ics.push_back(y0 + d * e);
  const auto finals = coupled_finals(cfg, ics, t, paths);

  FellerReport report;
  report.deltas = deltas;
  report.t = t;
  report.paths = paths;
  for (const auto& phi : phis) {
    report.phi_names.push_back(phi.name());
    std::vector<double> diff, se;
    for (std::size_t i = 0; i < deltas.size(); ++i) {
      std::vector<double> values;
      for (int p = 0; p < paths; ++p) {
        const auto& f = finals[static_cast<std::size_t>(p)];
        values.push_back(phi(f[i + 1]) - phi(f[0]));
      }
      diff.push_back(std::abs(mean_of(values)));
      se.push_back(stderr_of(values));
    }
    report.difference.push_back(diff);
    report.stderr.push_back(se);
  }
  return report;
}

}  // namespace tmhd
