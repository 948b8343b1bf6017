#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tmhd/family.hpp"
#include "tmhd/integrator.hpp"

namespace tmhd {

// Functional estimates --------------------------------------------------------

struct EstimateCheck {
  std::string name;
  double observed = 0.0;  // worst value over the samples
  double bound = 0.0;     // passes when observed <= bound
  bool passed = false;
  std::string detail;
};

struct FunctionalEstimateReport {
  GridSpec grid;
  int samples = 0;
  std::vector<EstimateCheck> checks;
  AssumptionReport assumptions;

  bool all_passed() const;
  const EstimateCheck* find(const std::string& name) const;
};

struct VerifyOptions {
  /// Sample fields: coefficients ~ |k|^{-slope}, rescaled to this rms amplitude.
  double slope = 3.0;
  double rms = 4.0;
  /// Low threshold so the taming term is active on a good share of each sample.
  TamingSpec taming{1.0, 2.0, 2.0};
  /// Samples re-evaluated on the doubled grid (pairing refinement, constant stability).
  int fine_subset = 10;
  std::string family_name = "default";
  ParamMap family_params;
  int assumption_samples = 200;
  /// Allowed relative drift of fitted constants between the grid and its doubling.
  double constant_drift = 0.2;
};

/// Evaluates the functional inequalities on random divergence-free samples:
/// hessian_ratio, bilinear_cancellation, pairing_residual, pairing_refinement,
/// hs_order0, hs_order1, sigma_mass, B_test_constant, A_stability_constant.
/// Failures are carried in the report; nothing throws for a failed check.
FunctionalEstimateReport verify_functional_estimates(const GridSpec& g, int n_samples, RngStream& rng,
                                                     const VerifyOptions& options = {});

// A priori moments -------------------------------------------------------------

struct AprioriLevel {
  double N = 0.0;
  int paths = 0;
  double mean_sup_h1 = 0.0;     // E[sup_t ||y||_H1^2], per-path maxima averaged
  double stderr_sup_h1 = 0.0;
  double h2_integral = 0.0;     // E int ||y||_H2^2
  double grad_ysq_integral = 0.0;  // E int ||grad |y|^2||^2
  double l4_integral = 0.0;     // E int ||y||_L4^4
  int guard_exits = 0;
  int error_exits = 0;
  bool finite() const;
};

struct AprioriReport {
  std::vector<AprioriLevel> levels;
  double n_slope = 0.0;  // least-squares slope of log mean_sup_h1 against log N
  int guard_exits() const;
  bool all_finite() const;
};

/// cfgs must agree in everything but taming.N. Path p uses stream cfg.stream + p.
AprioriReport a_priori_report(const std::vector<SimConfig>& cfgs, int paths);

// Continuous dependence ------------------------------------------------------

struct DependenceRow {
  double delta = 0.0;
  double ratio = 0.0;   // E ||z(t ^ tau_R)||_H1^2 / ||z(0)||_H1^2
  double stderr = 0.0;
  int stopped_paths = 0;
};

struct DependenceReport {
  double R = 0.0;
  double t = 0.0;
  Wavevector mode{1, 0, 0};
  std::vector<DependenceRow> rows;
  double spread() const;  // max ratio / min ratio
};

/// Twin runs from y0 and y0 + delta e with e the unit-H1 single mode at `mode`;
/// each pair is frozen at the first step where either H1 norm exceeds R.
/// R <= 0 picks 10 ||y0||_H1. deltas must be positive and decreasing.
DependenceReport continuous_dependence(const SimConfig& cfg, double R, const std::vector<double>& deltas,
                                       int paths, const Wavevector& mode = {1, 0, 0});

/// Unit-H1 divergence-free perturbation direction along a single mode.
StatePair perturbation_direction(const GridSpec& g, const Wavevector& mode);

// Time averages --------------------------------------------------------------------

enum class Observable { h1_sq, h2_sq, E_kin, E_mag, l4_fourth, cross_helicity };
std::string to_string(Observable o);
Observable parse_observable(const std::string& name);
double observable_value(const DiagnosticsRecord& r, Observable o);
inline const std::vector<Observable>& all_observables() {
  static const std::vector<Observable> all{Observable::h1_sq,     Observable::h2_sq,
                                           Observable::E_kin,     Observable::E_mag,
                                           Observable::l4_fourth, Observable::cross_helicity};
  return all;
}

struct RunningAverage {
  Observable observable = Observable::h2_sq;
  std::vector<double> T;
  std::vector<double> average;  // (1/T) int_0^T obs, trapezoid on the records; obs(0) at T = 0
  double tail_fluctuation = 0.0;  // max over T >= T_end/2 of |avg(T) - avg(T_end)| / |avg(T_end)|
  double growth_ratio = 0.0;      // max over T >= T_end/2 of avg(T) / avg(T_end/2)
};

struct Histogram {
  Observable observable = Observable::h2_sq;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<long> counts;  // 64 equal bins on [lo, hi]
};

struct ErgodicReport {
  std::vector<RunningAverage> averages;
  std::vector<Histogram> histograms;
  const RunningAverage& average(Observable o) const;
};

inline constexpr int kHistogramBins = 64;

RunningAverage running_time_average(const TrajectoryOutput& traj, Observable o);
Histogram histogram(const TrajectoryOutput& traj, Observable o, int bins = kHistogramBins);
ErgodicReport ergodic_report(const TrajectoryOutput& traj,
                             const std::vector<Observable>& observables = all_observables());

// Semigroup -----------------------------------------------------------------------

/// Bounded Lipschitz test functions on H1.
struct Phi {
  enum class Kind { one, tanh_energy, inverse_h1, normalized_cross_helicity };
  Kind kind = Kind::tanh_energy;

  double operator()(const StatePair& y) const;
  double bound() const;      // sup |phi|
  double lipschitz() const;  // declared constant with respect to the H1 norm
  std::string name() const;
};

/// Accepts one, tanh_energy, inverse_h1, normalized_cross_helicity; rejects
/// unbounded observables (energy, h1_sq, ...) and unknown names.
Phi parse_phi(const std::string& name);
inline std::vector<Phi> feller_dictionary() {
  return {{Phi::Kind::tanh_energy}, {Phi::Kind::inverse_h1}, {Phi::Kind::normalized_cross_helicity}};
}

struct SemigroupRow {
  std::size_t ic = 0;
  double mean = 0.0;
  double stderr = 0.0;
};

/// Monte Carlo T_t phi(y0) for every y0, all ICs driven by the same path p
/// (stream cfg.stream + p). Requires paths >= 16.
std::vector<SemigroupRow> estimate_semigroup(const SimConfig& cfg, const Phi& phi,
                                             const std::vector<StatePair>& y0_list, double t, int paths);

struct FellerReport {
  std::vector<std::string> phi_names;
  std::vector<double> deltas;
  std::vector<std::vector<double>> difference;  // [phi][delta]: |mean of phi(y_delta) - phi(y)|
  std::vector<std::vector<double>> stderr;
  double t = 0.0;
  int paths = 0;
  /// Shrinking delta never raises the difference beyond its stderr.
  bool monotone(std::size_t phi) const;
};

FellerReport feller_modulus(const SimConfig& cfg, const std::vector<Phi>& phis, const std::vector<double>& deltas,
                            double t, int paths, const Wavevector& mode = {1, 0, 0});

/// Least-squares slope of log(y) against log(x).
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace tmhd
