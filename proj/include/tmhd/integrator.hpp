#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "tmhd/diagnostics.hpp"
#include "tmhd/family.hpp"
#include "tmhd/fields.hpp"
#include "tmhd/rng.hpp"
#include "tmhd/spectral.hpp"
#include "tmhd/taming.hpp"

namespace tmhd {

class NumericalError : public Error {
 public:
  using Error::Error;
};

struct InitialCondition {
  enum class Kind { zero, single_mode, random_decay };
  Kind kind = Kind::random_decay;
  Wavevector k{1, 1, 0};  // single_mode
  int polarization = 0;   // single_mode
  FieldSlot slot = FieldSlot::both;
  double amplitude = 1.0; // single_mode: peak amplitude; random_decay: rms amplitude
  double slope = 2.0;     // random_decay: coefficients ~ |k|^{-slope}
  std::uint64_t seed = 1; // random_decay

  StatePair build(const GridSpec& g, int galerkin_n) const;
  std::string describe() const;
};

struct SimConfig {
  GridSpec grid;
  int galerkin_n = -1;  // < 0: the dealias cutoff
  TamingSpec taming;
  std::string family_name = "default";
  ParamMap family_params;
  CoefficientFamily family;
  double dt = 1e-3;
  double horizon = 1.0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  InitialCondition ic;
  double blowup_guard = 1e6;  // on ||y||_H1
  int record_every = 1;
  int snapshot_every = 0;     // 0: initial and final snapshots only

  /// Defaults: 16^3 grid, N = 100, default family, dt = 1e-3, T = 1.
  static SimConfig defaults();
  /// Rebuilds `family` from family_name/family_params on the current grid.
  void rebuild_family();
  void validate() const;
  int level() const { return galerkin_n < 0 ? grid.cutoff : galerkin_n; }
  long steps() const;
  /// dt * max retained |k|^2; the implicit Laplacian makes this a report, not a limit.
  double stability_proxy() const;
};

enum class ExitStatus { completed, blowup_guard, error };
std::string to_string(ExitStatus s);

struct Snapshot {
  double t = 0.0;
  StatePair y;
};

struct TrajectoryOutput {
  std::vector<Snapshot> snapshots;
  std::vector<DiagnosticsRecord> diagnostics;
  ExitStatus exit_status = ExitStatus::completed;
  std::string message;
  long steps_taken = 0;
  double final_time = 0.0;
  double sup_h1_sq = 0.0;         // max over every step
  double h2_integral = 0.0;       // trapezoid over every step of ||y||_H2^2
  std::vector<double> h2_cumulative;  // running trapezoid at each diagnostics record
  StatePair final_state;
};

/// Semi-implicit Euler-Maruyama step for the Galerkin system:
///   y+ = (1 + dt|k|^2)^{-1} [y + Pi_n P(-dt bilinear - dt g_N(|y|^2) y + dt f
///        + sum_k (sigma_k . grad y + H_k(y)) dW_k)].
/// The bilinear block is taken in divergence form on the n^3 grid; taming, H
/// and f on the padded grid; transport spectrally (exact for the family's
/// x-dependence, which is a single cosine per component).
class SemiImplicitStepper {
 public:
  SemiImplicitStepper(const GridSpec& g, int galerkin_n, const TamingSpec& taming,
                      const CoefficientFamily& family);
  explicit SemiImplicitStepper(const SimConfig& cfg);

  /// Throws NumericalError when the result is not finite.
  StatePair step(const StatePair& y, const NoiseIncrements& incr) const;

 private:
  GridSpec grid_;
  int level_;
  TamingSpec taming_;
  CoefficientFamily family_;
  StatePair forcing_;  // P Pi f, cached
};

StatePair step_semi_implicit(const StatePair& y, double dt, const NoiseIncrements& incr,
                             const SimConfig& cfg);

struct RunOptions {
  bool keep_diagnostics = true;
  /// Stop every member when any member's ||y||_H1 exceeds this (twin tau_R).
  double stop_radius = std::numeric_limits<double>::infinity();
  /// Called with every member's state at each record time.
  std::function<void(double, const std::vector<StatePair>&)> observer;
};

/// Members share one noise path (the stream of cfg) and step in lockstep.
struct CoupledOutput {
  std::vector<TrajectoryOutput> members;
  bool stopped = false;   // stop_radius reached
  double stop_time = 0.0; // t at which the members were frozen
};

CoupledOutput simulate_coupled(const SimConfig& cfg, const std::vector<StatePair>& initial,
                               const RunOptions& options = {});

TrajectoryOutput simulate(const SimConfig& cfg);

struct DifferenceRecord {
  double t = 0.0;
  double h0_sq = 0.0;
  double h1_sq = 0.0;
};

struct TwinOutput {
  TrajectoryOutput first;
  TrajectoryOutput second;
  std::vector<DifferenceRecord> difference;
  bool stopped = false;
  double stop_time = 0.0;
};

TwinOutput twin_simulate(const SimConfig& cfg, const InitialCondition& ic2,
                         double stop_radius = std::numeric_limits<double>::infinity());
TwinOutput twin_simulate(const SimConfig& cfg, const StatePair& y1, const StatePair& y2,
                         double stop_radius = std::numeric_limits<double>::infinity());

struct StrongOrderReport {
  double order = 0.0;           // NaN when every error is zero
  std::vector<double> dt_levels;
  std::vector<double> errors;   // sqrt(mean_paths ||y_dt(T) - y_ref(T)||_H0^2)
  double reference_dt = 0.0;
};

/// Runs every level and the reference in lockstep on the same Brownian path;
/// coarse increments are sums of reference increments.
StrongOrderReport estimate_strong_order(const SimConfig& cfg, const std::vector<double>& dt_levels,
                                        int paths, double reference_dt);

/// Worker count from TMHD_THREADS (0 or unset: hardware concurrency).
int worker_count();
/// Runs body(i) for i in [0, count) over worker_count() threads.
void parallel_for(int count, const std::function<void(int)>& body);

}  // namespace tmhd
