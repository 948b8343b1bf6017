#include "tmhd/integrator.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <map>
#include <memory>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "tmhd/fft.hpp"

namespace tmhd {

// Initial conditions -----------------------------------------------------------

StatePair InitialCondition::build(const GridSpec& g, int galerkin_n) const {
  StatePair y(g);
  switch (kind) {
    case Kind::zero:
      break;
    case Kind::single_mode:
      if (!in_cube(g, k) || std::max({std::abs(k[0]), std::abs(k[1]), std::abs(k[2])}) > galerkin_n) {
        throw Error("initial condition: mode outside the Galerkin truncation");
      }
      y = single_mode_state(g, k, polarization, amplitude, slot);
      break;
    case Kind::random_decay: {
      RngStream rng{seed, 0x1C0000ull, 0};
      y = random_state(g, rng, slope, amplitude, galerkin_n);
      if (slot == FieldSlot::velocity) y.B = VectorFieldSpectral(g);
      if (slot == FieldSlot::magnetic) y.v = VectorFieldSpectral(g);
      break;
    }
  }
  return truncate_modes(y, galerkin_n);
}

std::string InitialCondition::describe() const {
  std::ostringstream out;
  switch (kind) {
    case Kind::zero:
      out << "zero";
      break;
    case Kind::single_mode:
      out << "single_mode k=(" << k[0] << "," << k[1] << "," << k[2] << ") polarization=" << polarization
          << " amplitude=" << amplitude;
      break;
    case Kind::random_decay:
      out << "random_decay slope=" << slope << " amplitude=" << amplitude << " seed=" << seed;
      break;
  }
  return out.str();
}

// Configuration ------------------------------------------------------------------

SimConfig SimConfig::defaults() {
  SimConfig cfg;
  cfg.rebuild_family();
  return cfg;
}

void SimConfig::rebuild_family() { family = make_family(family_name, family_params, grid); }

void SimConfig::validate() const {
  grid.validate();
  taming.validate();
  if (galerkin_n > grid.cutoff) throw Error("config: Galerkin level exceeds the dealias cutoff");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error("config: dt must be positive");
  if (!(horizon >= dt)) throw Error("config: horizon must be at least dt");
  if (record_every < 1) throw Error("config: record_every must be at least 1");
  if (snapshot_every < 0) throw Error("config: snapshot_every must be nonnegative");
  if (!(blowup_guard > 0.0)) throw Error("config: blowup_guard must be positive");
}

long SimConfig::steps() const {
  const double ratio = horizon / dt;
  const long n = std::lround(ratio);
  if (std::abs(ratio - static_cast<double>(n)) > 1e-9 * ratio) {
    throw Error("config: horizon is not an integer multiple of dt");
  }
  return n;
}

double SimConfig::stability_proxy() const {
  const double kmax = level();
  return dt * 3.0 * kmax * kmax;
}

std::string to_string(ExitStatus s) {
  switch (s) {
    case ExitStatus::completed:
      return "completed";
    case ExitStatus::blowup_guard:
      return "blowup_guard";
    case ExitStatus::error:
      return "error";
  }
  return "unknown";
}

// Stepper ----------------------------------------------------------------------

namespace {

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

// Neighbour indices k +/- e_axis inside the retained cube.
struct Neighbours {
  std::array<std::vector<std::size_t>, 3> plus, minus;
};

const Neighbours& neighbours(const GridSpec& g) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<Neighbours>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{g.n, g.cutoff}];
  if (!slot) {
    const auto& table = modes(g);
    slot = std::make_unique<Neighbours>();
    for (int a = 0; a < 3; ++a) {
      slot->plus[a].assign(table.k.size(), kNone);
      slot->minus[a].assign(table.k.size(), kNone);
      for (std::size_t m = 0; m < table.k.size(); ++m) {
        auto kp = table.k[m], km = table.k[m];
        ++kp[a];
        --km[a];
        if (in_cube(g, kp)) slot->plus[a][m] = mode_index(g, kp);
        if (in_cube(g, km)) slot->minus[a][m] = mode_index(g, km);
      }
    }
  }
  return *slot;
}

// Upper bound of sup_x |y(x)|^2 from the coefficients.
double sup_bound_sq(const StatePair& y) {
  const auto& table = modes(y.grid());
  double s = 0.0;
  for (std::size_t m = 0; m < table.k.size(); ++m) {
    double local = 0.0;
    for (int c = 0; c < 3; ++c) local += std::norm(y.v(c, m)) + std::norm(y.B(c, m));
    s += std::sqrt(local);
  }
  return s * s;
}

StatePair forcing_spectrum(const GridSpec& g, const CoefficientFamily& fam, int level) {
  if (!fam.has_forcing()) return StatePair(g);
  const int m = g.padded();
  PhysicalVector fv(m), fb(m);
  std::size_t i = 0;
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      for (int c = 0; c < m; ++c, ++i) {
        const Vec6 f = fam.f({kTwoPi * a / m, kTwoPi * b / m, kTwoPi * c / m}, {});
        for (int j = 0; j < 3; ++j) {
          fv.comp[j][i] = f[j];
          fb.comp[j][i] = f[3 + j];
        }
      }
    }
  }
  return truncate_modes(leray_project(StatePair{to_spectral(fv, g), to_spectral(fb, g)}), level);
}

}  // namespace

SemiImplicitStepper::SemiImplicitStepper(const GridSpec& g, int galerkin_n, const TamingSpec& taming,
                                         const CoefficientFamily& family)
    : grid_(g), level_(galerkin_n < 0 ? g.cutoff : galerkin_n), taming_(taming), family_(family) {
  grid_.validate();
  taming_.validate();
  if (level_ > grid_.cutoff) throw Error("stepper: Galerkin level exceeds the dealias cutoff");
  forcing_ = forcing_spectrum(grid_, family_, level_);
}

SemiImplicitStepper::SemiImplicitStepper(const SimConfig& cfg)
    : SemiImplicitStepper(cfg.grid, cfg.level(), cfg.taming, cfg.family) {}

StatePair SemiImplicitStepper::step(const StatePair& y, const NoiseIncrements& incr) const {
  if (!(y.grid() == grid_)) throw GridMismatch("stepper: state lives on a different grid");
  const double dt = incr.dt;
  if (!(dt > 0.0)) throw Error("stepper: dt must be positive");
  const bool noisy = family_.has_noise();
  if (noisy && incr.dW.size() != family_.k_noise) throw Error("stepper: increment count differs from k_noise");

  const auto& table = modes(grid_);
  const std::size_t count = table.k.size();
  const int n = grid_.n;

  // Bilinear block in divergence form on the n^3 grid.
  const auto pv = to_physical(y.v, n);
  const auto pB = to_physical(y.B, n);
  static constexpr int kSym[6][2] = {{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}, {2, 2}};
  static constexpr int kAnti[3][2] = {{0, 1}, {0, 2}, {1, 2}};
  std::array<std::vector<Complex>, 6> sym;
  std::array<std::vector<Complex>, 3> anti;
  std::vector<double> prod(pv.size());
  for (int s = 0; s < 6; ++s) {
    const auto& va = pv.comp[kSym[s][0]];
    const auto& vb = pv.comp[kSym[s][1]];
    const auto& Ba = pB.comp[kSym[s][0]];
    const auto& Bb = pB.comp[kSym[s][1]];
    for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = va[i] * vb[i] - Ba[i] * Bb[i];
    sym[s].resize(count);
    fft::physical_to_component(prod, grid_, n, sym[s]);
  }
  for (int s = 0; s < 3; ++s) {
    const auto& va = pv.comp[kAnti[s][0]];
    const auto& vb = pv.comp[kAnti[s][1]];
    const auto& Ba = pB.comp[kAnti[s][0]];
    const auto& Bb = pB.comp[kAnti[s][1]];
    for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = va[i] * Bb[i] - Ba[i] * vb[i];
    anti[s].resize(count);
    fft::physical_to_component(prod, grid_, n, anti[s]);
  }
  auto sym_at = [&](int j, int c, std::size_t m) -> Complex {
    const int a = std::min(j, c), b = std::max(j, c);
    const int idx = a == 0 ? b : (a == 1 ? 2 + b : 5);
    return sym[idx][m];
  };
  auto anti_at = [&](int j, int c, std::size_t m) -> Complex {
    if (j == c) return 0.0;
    const int a = std::min(j, c), b = std::max(j, c);
    const int idx = a == 0 ? b - 1 : 2;
    return j < c ? anti[idx][m] : -anti[idx][m];
  };

  // Taming and state-dependent noise on the padded grid.
  const double h_v = noisy ? family_.h_weights(incr.dW, false) : 0.0;
  const double h_B = noisy ? family_.h_weights(incr.dW_bar, true) : 0.0;
  const bool taming_possible = sup_bound_sq(y) > taming_.N;
  StatePair padded_terms(grid_);
  const bool use_padded = taming_possible || h_v != 0.0 || h_B != 0.0;
  if (use_padded) {
    const int m = grid_.padded();
    auto qv = to_physical(y.v, m);
    auto qB = to_physical(y.B, m);
    for (std::size_t i = 0; i < qv.size(); ++i) {
      double r = 0.0;
      for (int c = 0; c < 3; ++c) r += qv.comp[c][i] * qv.comp[c][i] + qB.comp[c][i] * qB.comp[c][i];
      const double damp = -dt * taming_value(r, taming_);
      const Vec3 sv = family_.psi({qv.comp[0][i], qv.comp[1][i], qv.comp[2][i]});
      const Vec3 sb = family_.psi({qB.comp[0][i], qB.comp[1][i], qB.comp[2][i]});
      for (int c = 0; c < 3; ++c) {
        qv.comp[c][i] = damp * qv.comp[c][i] + h_v * sv[c];
        qB.comp[c][i] = damp * qB.comp[c][i] + h_B * sb[c];
      }
    }
    padded_terms = StatePair{to_spectral(qv, grid_), to_spectral(qB, grid_)};
  }

  // Transport noise, spectrally.
  const Vec3 Av = noisy ? family_.transport_weights(incr.dW, false) : Vec3{};
  const Vec3 AB = noisy ? family_.transport_weights(incr.dW_bar, true) : Vec3{};
  const double eps_half = 0.5 * family_.sigma_modulation;
  const auto& nb = neighbours(grid_);
  auto transport = [&](const VectorFieldSpectral& f, const Vec3& A, int i, std::size_t m) -> Complex {
    Complex sum = 0.0;
    for (int c = 0; c < 3; ++c) {
      if (A[c] == 0.0) continue;
      Complex val = f(i, m);
      if (eps_half != 0.0) {
        const int axis = (c + 1) % 3;
        const std::size_t lo = nb.minus[axis][m], hi = nb.plus[axis][m];
        val += eps_half * ((lo != kNone ? f(i, lo) : 0.0) + (hi != kNone ? f(i, hi) : 0.0));
      }
      sum += A[c] * Complex(0.0, table.k[m][c]) * val;
    }
    return sum;
  };

  StatePair out(grid_);
  bool finite = true;
  for (std::size_t m = 0; m < count; ++m) {
    if (table.max_abs(m) > level_) continue;
    const auto& k = table.k[m];
    Complex xv[3], xb[3];
    for (int c = 0; c < 3; ++c) {
      Complex bil_v = 0.0, bil_B = 0.0;
      for (int j = 0; j < 3; ++j) {
        const Complex ik(0.0, k[j]);
        bil_v += ik * sym_at(j, c, m);
        bil_B += ik * anti_at(j, c, m);
      }
      xv[c] = -dt * bil_v + dt * forcing_.v(c, m) + padded_terms.v(c, m);
      xb[c] = -dt * bil_B + dt * forcing_.B(c, m) + padded_terms.B(c, m);
      if (noisy) {
        xv[c] += transport(y.v, Av, c, m);
        xb[c] += transport(y.B, AB, c, m);
      }
    }
    const double ksq = table.k_sq[m];
    if (ksq > 0.0) {
      const Complex dv = (double(k[0]) * xv[0] + double(k[1]) * xv[1] + double(k[2]) * xv[2]) / ksq;
      const Complex db = (double(k[0]) * xb[0] + double(k[1]) * xb[1] + double(k[2]) * xb[2]) / ksq;
      for (int c = 0; c < 3; ++c) {
        xv[c] -= static_cast<double>(k[c]) * dv;
        xb[c] -= static_cast<double>(k[c]) * db;
      }
    }
    const double inv = 1.0 / (1.0 + dt * ksq);
    for (int c = 0; c < 3; ++c) {
      out.v(c, m) = (y.v(c, m) + xv[c]) * inv;
      out.B(c, m) = (y.B(c, m) + xb[c]) * inv;
      finite = finite && std::isfinite(out.v(c, m).real()) && std::isfinite(out.v(c, m).imag()) &&
               std::isfinite(out.B(c, m).real()) && std::isfinite(out.B(c, m).imag());
    }
  }
  if (!finite) throw NumericalError("stepper: state became non-finite");
  return out;
}

StatePair step_semi_implicit(const StatePair& y, double dt, const NoiseIncrements& incr,
                             const SimConfig& cfg) {
  if (std::abs(incr.dt - dt) > 1e-15 * dt) throw Error("step_semi_implicit: dt differs from the increments' dt");
  return SemiImplicitStepper(cfg).step(y, incr);
}

// Trajectories -------------------------------------------------------------------

namespace {

struct MemberState {
  StatePair y;
  TrajectoryOutput out;
  bool alive = true;
  double last_h2 = 0.0;
};

void record(MemberState& s, double t, const SimConfig& cfg, bool keep) {
  if (!keep) return;
  s.out.diagnostics.push_back(diagnostics_record(s.y, t, cfg.taming));
  s.out.h2_cumulative.push_back(s.out.h2_integral);
}

}  // namespace

CoupledOutput simulate_coupled(const SimConfig& cfg, const std::vector<StatePair>& initial,
                               const RunOptions& options) {
  cfg.validate();
  const long steps = cfg.steps();
  const SemiImplicitStepper stepper(cfg);
  RngStream rng{cfg.seed, cfg.stream, 0};
  const std::size_t K = cfg.family.k_noise;

  std::vector<MemberState> members(initial.size());
  for (std::size_t i = 0; i < initial.size(); ++i) {
    auto& s = members[i];
    if (!(initial[i].grid() == cfg.grid)) throw GridMismatch("simulate: initial state on a different grid");
    s.y = truncate_modes(initial[i], cfg.level());
    s.out.sup_h1_sq = sobolev_norm_sq(s.y, 1.0);
    s.last_h2 = sobolev_norm_sq(s.y, 2.0);
    record(s, 0.0, cfg, options.keep_diagnostics);
    s.out.snapshots.push_back({0.0, s.y});
  }

  CoupledOutput result;
  auto observe = [&](double t) {
    if (!options.observer) return;
    std::vector<StatePair> states;
    states.reserve(members.size());
    for (const auto& s : members) states.push_back(s.y);
    options.observer(t, states);
  };
  observe(0.0);

  long step = 0;
  double t = 0.0;
  for (step = 1; step <= steps; ++step) {
    const auto inc = sample_increments(rng, cfg.dt, K);
    t = static_cast<double>(step) * cfg.dt;
    bool any_alive = false;
    bool radius_hit = false;
    for (auto& s : members) {
      if (!s.alive) continue;
      try {
        s.y = stepper.step(s.y, inc);
      } catch (const NumericalError& e) {
        s.alive = false;
        s.out.exit_status = ExitStatus::error;
        s.out.message = e.what();
        s.out.final_time = t;
        continue;
      }
      const double h1 = sobolev_norm_sq(s.y, 1.0);
      const double h2 = sobolev_norm_sq(s.y, 2.0);
      s.out.h2_integral += 0.5 * cfg.dt * (s.last_h2 + h2);
      s.last_h2 = h2;
      s.out.sup_h1_sq = std::max(s.out.sup_h1_sq, h1);
      s.out.steps_taken = step;
      s.out.final_time = t;
      if (std::sqrt(h1) > options.stop_radius) radius_hit = true;
      if (std::sqrt(h1) > cfg.blowup_guard) {
        s.alive = false;
        s.out.exit_status = ExitStatus::blowup_guard;
        s.out.message = "||y||_H1 exceeded the blow-up guard";
        record(s, t, cfg, options.keep_diagnostics);
        s.out.snapshots.push_back({t, s.y});
        continue;
      }
      any_alive = true;
    }
    const bool last = step == steps || radius_hit || !any_alive;
    if (step % cfg.record_every == 0 || last) {
      for (auto& s : members) {
        if (s.alive) record(s, t, cfg, options.keep_diagnostics);
      }
      observe(t);
    }
    if (cfg.snapshot_every > 0 && step % cfg.snapshot_every == 0 && !last) {
      for (auto& s : members) {
        if (s.alive) s.out.snapshots.push_back({t, s.y});
      }
    }
    if (radius_hit) {
      result.stopped = true;
      result.stop_time = t;
      break;
    }
    if (!any_alive) break;
  }

  for (auto& s : members) {
    if (s.alive) s.out.snapshots.push_back({s.out.final_time, s.y});
    s.out.final_state = s.y;
    result.members.push_back(std::move(s.out));
  }
  return result;
}

TrajectoryOutput simulate(const SimConfig& cfg) {
  cfg.validate();
  auto out = simulate_coupled(cfg, {cfg.ic.build(cfg.grid, cfg.level())});
  return std::move(out.members.front());
}

TwinOutput twin_simulate(const SimConfig& cfg, const StatePair& y1, const StatePair& y2,
                         double stop_radius) {
  TwinOutput twin;
  RunOptions options;
  options.stop_radius = stop_radius;
  options.observer = [&](double t, const std::vector<StatePair>& states) {
    const StatePair z = states[0] - states[1];
    twin.difference.push_back({t, sobolev_norm_sq(z, 0.0), sobolev_norm_sq(z, 1.0)});
  };
  auto out = simulate_coupled(cfg, {y1, y2}, options);
  twin.first = std::move(out.members[0]);
  twin.second = std::move(out.members[1]);
  twin.stopped = out.stopped;
  twin.stop_time = out.stop_time;
  return twin;
}

TwinOutput twin_simulate(const SimConfig& cfg, const InitialCondition& ic2, double stop_radius) {
  cfg.validate();
  return twin_simulate(cfg, cfg.ic.build(cfg.grid, cfg.level()), ic2.build(cfg.grid, cfg.level()),
                       stop_radius);
}

// Strong order ---------------------------------------------------------------------

StrongOrderReport estimate_strong_order(const SimConfig& cfg, const std::vector<double>& dt_levels,
                                        int paths, double reference_dt) {
  cfg.validate();
  if (dt_levels.size() < 2) throw Error("estimate_strong_order: need at least two dt levels");
  if (paths < 1) throw Error("estimate_strong_order: need at least one path");
  if (!(reference_dt > 0.0)) throw Error("estimate_strong_order: reference dt must be positive");
  std::vector<long> ratio;
  for (std::size_t i = 0; i < dt_levels.size(); ++i) {
    if (i > 0 && !(dt_levels[i] < dt_levels[i - 1])) throw Error("estimate_strong_order: dt levels must decrease");
    const double r = dt_levels[i] / reference_dt;
    const long ri = std::lround(r);
    if (ri < 1 || std::abs(r - static_cast<double>(ri)) > 1e-9 * r) {
      throw Error("estimate_strong_order: every level must be a multiple of the reference dt");
    }
    ratio.push_back(ri);
  }
  SimConfig ref_cfg = cfg;
  ref_cfg.dt = reference_dt;
  const long fine_steps = ref_cfg.steps();
  for (long r : ratio) {
    if (fine_steps % r != 0) throw Error("estimate_strong_order: horizon is not a multiple of every level");
  }

  const SemiImplicitStepper stepper(cfg);
  const StatePair y0 = cfg.ic.build(cfg.grid, cfg.level());
  const std::size_t K = cfg.family.k_noise;
  const std::size_t L = dt_levels.size();
  std::vector<std::vector<double>> sq(static_cast<std::size_t>(paths), std::vector<double>(L, 0.0));

  parallel_for(paths, [&](int p) {
    RngStream rng{cfg.seed, cfg.stream + static_cast<std::uint64_t>(p), 0};
    StatePair ref = y0;
    std::vector<StatePair> coarse(L, y0);
    std::vector<NoiseIncrements> acc(L, NoiseIncrements::zero(K, 0.0));
    for (long i = 1; i <= fine_steps; ++i) {
      const auto inc = sample_increments(rng, reference_dt, K);
      ref = stepper.step(ref, inc);
      for (std::size_t l = 0; l < L; ++l) {
        acc[l] += inc;
        if (i % ratio[l] == 0) {
          coarse[l] = stepper.step(coarse[l], acc[l]);
          acc[l] = NoiseIncrements::zero(K, 0.0);
        }
      }
    }
    for (std::size_t l = 0; l < L; ++l) sq[p][l] = sobolev_norm_sq(coarse[l] - ref, 0.0);
  });

  StrongOrderReport report;
  report.dt_levels = dt_levels;
  report.reference_dt = reference_dt;
  bool any_zero = false;
  for (std::size_t l = 0; l < L; ++l) {
    double mean = 0.0;
    for (int p = 0; p < paths; ++p) mean += sq[p][l];
    report.errors.push_back(std::sqrt(mean / paths));
    any_zero = any_zero || report.errors.back() == 0.0;
  }
  if (any_zero) {
    report.order = std::numeric_limits<double>::quiet_NaN();
    return report;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t l = 0; l < L; ++l) {
    const double x = std::log(dt_levels[l]), yv = std::log(report.errors[l]);
    sx += x;
    sy += yv;
    sxx += x * x;
    sxy += x * yv;
  }
  const double nL = static_cast<double>(L);
  report.order = (nL * sxy - sx * sy) / (nL * sxx - sx * sx);
  return report;
}

// Parallelism ----------------------------------------------------------------------

int worker_count() {
  int requested = 0;
  if (const char* env = std::getenv("TMHD_THREADS")) {
    const char* end = env + std::char_traits<char>::length(env);
    int value = 0;
    const auto [ptr, ec] = std::from_chars(env, end, value);
    if (ec == std::errc() && ptr == end && value >= 0) requested = value;
  }
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(int count, const std::function<void(int)>& body) {
  const int workers = std::min(worker_count(), count);
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace tmhd
