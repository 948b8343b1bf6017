#include "tmhd/family.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

namespace tmhd {

namespace {

double geometric_mass(std::size_t k_noise) { return 2.0 * (1.0 - std::ldexp(1.0, -static_cast<int>(k_noise))); }

double parse_real(const std::string& key, const std::string& text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && last[-1] == ' ') --last;
  if (first < last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw Error("family parameter '" + key + "': expected a real number, got '" + text + "'");
  }
  return value;
}

std::size_t parse_count(const std::string& key, const std::string& text) {
  const double value = parse_real(key, text);
  if (value < 1.0 || value != std::floor(value) || value > 4096.0) {
    throw Error("family parameter '" + key + "': expected an integer in [1, 4096]");
  }
  return static_cast<std::size_t>(value);
}

// Ratio with 0/0 read as 0 (trivially satisfied bound).
double quotient(double observed, double allowed) {
  if (observed <= 0.0) return 0.0;
  if (allowed <= 0.0) return std::numeric_limits<double>::infinity();
  return observed / allowed;
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// H(x, y) stacked as one l2 vector: (h_0, ..., h_{K-1}, hbar_0, ..., hbar_{K-1}).
std::vector<double> stacked_H(const CoefficientFamily& fam, const Vec3& x, const Vec6& y) {
  std::vector<double> out;
  out.reserve(6 * fam.k_noise);
  for (std::size_t k = 0; k < fam.k_noise; ++k) {
    const Vec3 h = fam.h(k, x, y);
    out.insert(out.end(), h.begin(), h.end());
  }
  for (std::size_t k = 0; k < fam.k_noise; ++k) {
    const Vec3 h = fam.h_bar(k, x, y);
    out.insert(out.end(), h.begin(), h.end());
  }
  return out;
}

std::vector<double> stacked_sigma(const CoefficientFamily& fam, const Vec3& x) {
  std::vector<double> out;
  out.reserve(6 * fam.k_noise);
  for (std::size_t k = 0; k < fam.k_noise; ++k) {
    const Vec3 s = fam.sigma(k, x);
    out.insert(out.end(), s.begin(), s.end());
  }
  for (std::size_t k = 0; k < fam.k_noise; ++k) {
    const Vec3 s = fam.sigma_bar(k, x);
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

constexpr double kStep = 1e-5;

template <typename F>
std::vector<double> central_difference(F&& eval, double step) {
  auto plus = eval(step);
  const auto minus = eval(-step);
  for (std::size_t i = 0; i < plus.size(); ++i) plus[i] = (plus[i] - minus[i]) / (2.0 * step);
  return plus;
}

// d/dx_j of H at (x, y), stacked.
std::vector<double> dx_H(const CoefficientFamily& fam, const Vec3& x, const Vec6& y, int j) {
  return central_difference(
      [&](double h) {
        Vec3 xs = x;
        xs[j] += h;
        return stacked_H(fam, xs, y);
      },
      kStep);
}

std::vector<double> dy_H(const CoefficientFamily& fam, const Vec3& x, const Vec6& y, int l) {
  const double step = kStep * std::max(1.0, std::abs(y[l]));
  return central_difference(
      [&](double h) {
        Vec6 ys = y;
        ys[l] += h;
        return stacked_H(fam, x, ys);
      },
      step);
}

}  // namespace

bool CoefficientFamily::has_noise() const {
  return sigma_amplitude != 0.0 || sigma_bar_amplitude != 0.0 || h_amplitude != 0.0 ||
         h_bar_amplitude != 0.0;
}

double CoefficientFamily::sigma_weight(std::size_t k) const {
  return std::ldexp(1.0, -static_cast<int>(k / 2)) * (k % 2 ? std::sqrt(0.5) : 1.0);
}

double CoefficientFamily::h_weight(std::size_t k, bool bar) const {
  const double amp = bar ? h_bar_amplitude : h_amplitude;
  return h_kind == HKind::quadratic ? amp : amp * sigma_weight(k);
}

Vec3 CoefficientFamily::psi(const Vec3& u) const {
  Vec3 out{};
  for (int i = 0; i < 3; ++i) {
    out[i] = h_kind == HKind::quadratic ? u[i] * u[i] : u[i] / std::sqrt(1.0 + u[i] * u[i]);
  }
  return out;
}

Vec3 CoefficientFamily::sigma(std::size_t k, const Vec3& x) const {
  if (k >= k_noise) throw Error("sigma: noise index out of range");
  Vec3 out{};
  out[k % 3] = sigma_amplitude * sigma_weight(k) * (1.0 + sigma_modulation * std::cos(x[(k + 1) % 3]));
  return out;
}

Vec3 CoefficientFamily::sigma_bar(std::size_t k, const Vec3& x) const {
  if (k >= k_noise) throw Error("sigma_bar: noise index out of range");
  Vec3 out{};
  out[(k + 1) % 3] =
      sigma_bar_amplitude * sigma_weight(k) * (1.0 + sigma_modulation * std::cos(x[(k + 2) % 3]));
  return out;
}

Vec3 CoefficientFamily::h(std::size_t k, const Vec3&, const Vec6& y) const {
  if (k >= k_noise) throw Error("h: noise index out of range");
  Vec3 out = psi({y[0], y[1], y[2]});
  const double w = h_weight(k);
  for (auto& c : out) c *= w;
  return out;
}

Vec3 CoefficientFamily::h_bar(std::size_t k, const Vec3&, const Vec6& y) const {
  if (k >= k_noise) throw Error("h_bar: noise index out of range");
  Vec3 out = psi({y[3], y[4], y[5]});
  const double w = h_weight(k, true);
  for (auto& c : out) c *= w;
  return out;
}

Vec6 CoefficientFamily::f(const Vec3& x, const Vec6&) const {
  const double s1 = std::sin(x[0]), s2 = std::sin(x[1]), s3 = std::sin(x[2]);
  return {forcing_v * s2, forcing_v * s3, forcing_v * s1,
          forcing_B * s3, forcing_B * s1, forcing_B * s2};
}

Vec3 CoefficientFamily::transport_weights(std::span<const double> dW, bool bar) const {
  if (dW.size() != k_noise) throw Error("transport_weights: increment count differs from k_noise");
  Vec3 A{};
  const double amp = bar ? sigma_bar_amplitude : sigma_amplitude;
  for (std::size_t k = 0; k < k_noise; ++k) {
    A[(k + (bar ? 1 : 0)) % 3] += dW[k] * amp * sigma_weight(k);
  }
  return A;
}

double CoefficientFamily::h_weights(std::span<const double> dW, bool bar) const {
  if (dW.size() != k_noise) throw Error("h_weights: increment count differs from k_noise");
  double s = 0.0;
  for (std::size_t k = 0; k < k_noise; ++k) s += dW[k] * h_weight(k, bar);
  return s;
}

void CoefficientFamily::refresh_metadata() {
  FamilyMetadata m;
  const double S = geometric_mass(k_noise);
  const double mod = (1.0 + std::abs(sigma_modulation)) * (1.0 + std::abs(sigma_modulation));
  const double a2 = sigma_amplitude * sigma_amplitude;
  const double abar2 = sigma_bar_amplitude * sigma_bar_amplitude;
  m.sigma_mass_v = a2 * S * mod;
  m.sigma_mass_B = abar2 * S * mod;
  m.sigma_mass = m.sigma_mass_v + m.sigma_mass_B;
  m.tail_mass = (a2 + abar2) * mod * std::ldexp(1.0, 1 - static_cast<int>(k_noise));
  m.sigma_derivative = std::abs(sigma_modulation) * std::sqrt((a2 + abar2) * S);

  const double b = std::max(std::abs(h_amplitude), std::abs(h_bar_amplitude));
  // Quadratic kind: weights do not decay, so the l2 sum is b^2 K. Its growth
  // bound is deliberately the bounded-kind formula, which it violates.
  const double weight_mass = h_kind == HKind::quadratic ? static_cast<double>(k_noise) : S;
  m.C_H = std::max(b * b * weight_mass, b * std::sqrt(weight_mass));
  m.F_H = 0.0;
  m.C_f = 0.0;
  m.F_f = 3.0 * (forcing_v * forcing_v + forcing_B * forcing_B);
  meta_ = m;
}

CoefficientFamily make_family(const std::string& name, const ParamMap& params, const GridSpec& g) {
  g.validate();
  CoefficientFamily fam;
  if (name == "silent") {
    fam.kind = FamilyKind::silent;
  } else if (name == "default" || name == "custom") {
    fam.kind = name == "default" ? FamilyKind::standard : FamilyKind::custom;
    fam.sigma_amplitude = 1.0 / 12.0;
    fam.sigma_bar_amplitude = 1.0 / 12.0;
    fam.h_amplitude = 0.25;
    fam.h_bar_amplitude = 0.25;
    fam.forcing_v = 0.5;
  } else {
    throw Error("make_family: unknown family '" + name + "' (expected default, silent or custom)");
  }

  static const std::set<std::string> known = {
      "k_noise", "amplitude", "amplitude_bar", "sigma_mass", "sigma_modulation", "h_kind",
      "h_amplitude", "h_amplitude_bar", "forcing", "forcing_b"};
  for (const auto& [key, value] : params) {
    if (!known.count(key)) throw Error("make_family: unknown parameter '" + key + "'");
  }
  auto real = [&](const char* key, double& slot) {
    if (auto it = params.find(key); it != params.end()) slot = parse_real(key, it->second);
  };

  if (auto it = params.find("k_noise"); it != params.end()) fam.k_noise = parse_count("k_noise", it->second);
  real("sigma_modulation", fam.sigma_modulation);
  if (auto it = params.find("amplitude"); it != params.end()) {
    fam.sigma_amplitude = fam.sigma_bar_amplitude = parse_real("amplitude", it->second);
  }
  real("amplitude_bar", fam.sigma_bar_amplitude);
  real("h_amplitude", fam.h_amplitude);
  if (params.count("h_amplitude") && !params.count("h_amplitude_bar")) fam.h_bar_amplitude = fam.h_amplitude;
  real("h_amplitude_bar", fam.h_bar_amplitude);
  real("forcing", fam.forcing_v);
  real("forcing_b", fam.forcing_B);
  if (auto it = params.find("h_kind"); it != params.end()) {
    if (it->second == "bounded") {
      fam.h_kind = HKind::bounded;
    } else if (it->second == "quadratic") {
      fam.h_kind = HKind::quadratic;
    } else {
      throw Error("make_family: h_kind must be 'bounded' or 'quadratic'");
    }
  }
  if (auto it = params.find("sigma_mass"); it != params.end()) {
    if (fam.kind != FamilyKind::custom) throw Error("make_family: sigma_mass is only accepted by the custom family");
    const double mass = parse_real("sigma_mass", it->second);
    if (mass < 0.0) throw Error("make_family: sigma_mass must be nonnegative");
    if (params.count("amplitude") || params.count("amplitude_bar")) {
      throw Error("make_family: give either sigma_mass or amplitude, not both");
    }
    const double mod = (1.0 + std::abs(fam.sigma_modulation)) * (1.0 + std::abs(fam.sigma_modulation));
    fam.sigma_amplitude = fam.sigma_bar_amplitude =
        std::sqrt(mass / (2.0 * geometric_mass(fam.k_noise) * mod));
  }
  if (fam.kind == FamilyKind::silent && !params.empty()) {
    throw Error("make_family: the silent family takes no parameters");
  }
  if (std::abs(fam.sigma_modulation) >= 1.0) {
    throw Error("make_family: sigma_modulation must lie in (-1, 1)");
  }

  fam.refresh_metadata();
  if (fam.metadata().sigma_mass > kSigmaMassLimit * (1.0 + 1e-14)) {
    throw Error("make_family: Sigma l2 mass " + std::to_string(fam.metadata().sigma_mass) +
                " exceeds the admissible 1/36");
  }
  return fam;
}

FamilyPoint eval_family(const CoefficientFamily& fam, std::size_t k, const Vec3& x, const Vec6& y) {
  if (k >= fam.k_noise) throw Error("eval_family: noise index out of range");
  return {fam.sigma(k, x), fam.sigma_bar(k, x), fam.h(k, x, y), fam.h_bar(k, x, y), fam.f(x, y)};
}

bool AssumptionReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const AssumptionCheck& AssumptionReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return c;
  }
  throw Error("assumption report has no check named '" + name + "'");
}

AssumptionReport validate_assumptions(const CoefficientFamily& fam, const GridSpec& g,
                                      int n_samples, RngStream& rng) {
  if (n_samples < 1) throw Error("validate_assumptions: n_samples must be at least 1");
  g.validate();
  const auto& meta = fam.metadata();

  struct Tracker {
    AssumptionCheck check;
    double slack;
    void add(double observed, double allowed) {
      check.observed = std::max(check.observed, observed);
      check.worst_ratio = std::max(check.worst_ratio, quotient(observed, allowed));
    }
  };
  std::vector<Tracker> t = {
      {{"sigma_mass"}, 1e-12},       {{"sigma_derivative"}, 1e-6}, {{"f_growth"}, 1e-12},
      {{"f_lipschitz"}, 1e-6},       {{"H_growth"}, 1e-6},         {{"H_y_derivative"}, 1e-6},
      {{"H_lipschitz"}, 1e-12},      {{"dxH_lipschitz"}, 1e-6},    {{"dyH_lipschitz"}, 1e-6}};
  auto& mass = t[0];
  auto& dsigma = t[1];
  auto& f_growth = t[2];
  auto& f_lip = t[3];
  auto& h_growth = t[4];
  auto& h_dy = t[5];
  auto& h_lip = t[6];
  auto& dxh_lip = t[7];
  auto& dyh_lip = t[8];

  const double h_grid = kTwoPi / g.n;
  for (int s = 0; s < n_samples; ++s) {
    const auto u = rng.draw_uniforms(5);
    const auto z = rng.draw_normals(12);
    Vec3 x{};
    if (s == 0) {
      x = {0.0, 0.0, 0.0};
    } else if (s == 1) {
      x = {std::numbers::pi, std::numbers::pi, std::numbers::pi};
    } else {
      for (int j = 0; j < 3; ++j) x[j] = h_grid * std::floor(u[j] * g.n);
    }
    const double scale = std::pow(10.0, -1.0 + 2.5 * u[3]);
    const double gap = std::pow(10.0, -2.0 + 2.5 * u[4]);
    Vec6 y{}, y2{};
    for (int l = 0; l < 6; ++l) {
      y[l] = scale * z[l];
      y2[l] = y[l] + gap * z[6 + l];
    }
    const double y_sq = norm(y) * norm(y);
    double dy = 0.0;
    for (int l = 0; l < 6; ++l) dy += (y[l] - y2[l]) * (y[l] - y2[l]);
    dy = std::sqrt(dy);

    const auto sig = stacked_sigma(fam, x);
    mass.add(norm(sig) * norm(sig), kSigmaMassLimit);
    for (int j = 0; j < 3; ++j) {
      const auto d = central_difference(
          [&](double h) {
            Vec3 xs = x;
            xs[j] += h;
            return stacked_sigma(fam, xs);
          },
          kStep);
      dsigma.add(norm(d), meta.sigma_derivative);
    }

    const Vec6 fv = fam.f(x, y);
    const Vec6 fv2 = fam.f(x, y2);
    for (int j = 0; j < 3; ++j) {
      Vec3 xp = x, xm = x;
      xp[j] += kStep;
      xm[j] -= kStep;
      const Vec6 a = fam.f(xp, y), b = fam.f(xm, y);
      double grow = 0.0;
      for (int i = 0; i < 6; ++i) {
        const double d = (a[i] - b[i]) / (2.0 * kStep);
        grow += d * d + fv[i] * fv[i];
      }
      f_growth.add(grow, meta.C_f * y_sq + meta.F_f);
    }
    double fdiff = 0.0;
    for (int i = 0; i < 6; ++i) fdiff += (fv[i] - fv2[i]) * (fv[i] - fv2[i]);
    f_lip.add(std::sqrt(fdiff) / dy, meta.C_f);

    const auto H = stacked_H(fam, x, y);
    const auto H2 = stacked_H(fam, x, y2);
    for (int j = 0; j < 3; ++j) {
      const auto d = dx_H(fam, x, y, j);
      h_growth.add(norm(d) * norm(d) + norm(H) * norm(H), meta.C_H * y_sq + meta.F_H);
      const auto d2 = dx_H(fam, x, y2, j);
      std::vector<double> diff(d.size());
      for (std::size_t i = 0; i < d.size(); ++i) diff[i] = d[i] - d2[i];
      dxh_lip.add(norm(diff) / dy, meta.C_H);
    }
    std::vector<double> hdiff(H.size());
    for (std::size_t i = 0; i < H.size(); ++i) hdiff[i] = H[i] - H2[i];
    h_lip.add(norm(hdiff) / dy, meta.C_H);
    for (int l = 0; l < 6; ++l) {
      const auto d = dy_H(fam, x, y, l);
      h_dy.add(norm(d), meta.C_H);
      const auto d2 = dy_H(fam, x, y2, l);
      std::vector<double> diff(d.size());
      for (std::size_t i = 0; i < d.size(); ++i) diff[i] = d[i] - d2[i];
      dyh_lip.add(norm(diff) / dy, meta.C_H);
    }
  }

  AssumptionReport report;
  for (auto& tr : t) {
    tr.check.passed = tr.check.worst_ratio <= 1.0 + tr.slack;
    report.checks.push_back(tr.check);
  }
  return report;
}

}  // namespace tmhd
