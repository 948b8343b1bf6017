#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tmhd/grid.hpp"
#include "tmhd/rng.hpp"

namespace tmhd {

using Vec3 = std::array<double, 3>;
using Vec6 = std::array<double, 6>;
using ParamMap = std::map<std::string, std::string>;

/// Sigma mass ceiling sup_x ||Sigma(x)||^2_{l2} required of every family.
inline constexpr double kSigmaMassLimit = 1.0 / 36.0;

enum class FamilyKind { silent, standard, custom };
enum class HKind { bounded, quadratic };

/// Constants a family reports about itself; validate_assumptions checks them.
struct FamilyMetadata {
  double sigma_mass = 0.0;        // sup_x sum_k |sigma_k|^2 + |sigma_bar_k|^2
  double sigma_mass_v = 0.0;      // velocity sequence alone
  double sigma_mass_B = 0.0;      // magnetic sequence alone
  double sigma_derivative = 0.0;  // bound on sup_x max_j ||d_j Sigma(x)||_{l2}
  double C_H = 0.0;
  double F_H = 0.0;               // constant pointwise bound function
  double C_f = 0.0;
  double F_f = 0.0;               // constant pointwise bound function
  double tail_mass = 0.0;         // sigma mass dropped by truncating at k_noise

  double F_H_L1() const { return F_H * kBoxVolume; }
  double F_f_L1() const { return F_f * kBoxVolume; }
};

/// Pointwise coefficient values for one noise index.
struct FamilyPoint {
  Vec3 sigma{};
  Vec3 sigma_bar{};
  Vec3 h{};
  Vec3 h_bar{};
  Vec6 f{};
};

/// Time-homogeneous coefficient family (Sigma, H, f), k = 0 .. k_noise-1:
///
///   sigma_k(x)     = a    2^{-k/2} (1 + eps cos x_{(k+1)%3}) e_{k%3}
///   sigma_bar_k(x) = abar 2^{-k/2} (1 + eps cos x_{(k+2)%3}) e_{(k+1)%3}
///   h_k(x, y)      = w_k psi(v),  h_bar_k(x, y) = wbar_k psi(B)
///   f_v(x)         = c  (sin x2, sin x3, sin x1)
///   f_B(x)         = cB (sin x3, sin x1, sin x2)
///
/// with psi(u)_i = u_i / sqrt(1 + u_i^2) and w_k = b 2^{-k/2} for the bounded
/// kind, psi(u)_i = u_i^2 and w_k = b for the (non-admissible) quadratic kind.
class CoefficientFamily {
 public:
  CoefficientFamily() = default;

  FamilyKind kind = FamilyKind::silent;
  std::size_t k_noise = 16;
  double sigma_amplitude = 0.0;
  double sigma_bar_amplitude = 0.0;
  double sigma_modulation = 0.0;
  HKind h_kind = HKind::bounded;
  double h_amplitude = 0.0;
  double h_bar_amplitude = 0.0;
  double forcing_v = 0.0;
  double forcing_B = 0.0;

  const FamilyMetadata& metadata() const { return meta_; }
  void refresh_metadata();

  bool sigma_depends_on_x() const { return sigma_modulation != 0.0; }
  bool has_noise() const;
  bool has_forcing() const { return forcing_v != 0.0 || forcing_B != 0.0; }

  Vec3 sigma(std::size_t k, const Vec3& x) const;
  Vec3 sigma_bar(std::size_t k, const Vec3& x) const;
  Vec3 h(std::size_t k, const Vec3& x, const Vec6& y) const;
  Vec3 h_bar(std::size_t k, const Vec3& x, const Vec6& y) const;
  Vec6 f(const Vec3& x, const Vec6& y) const;

  double sigma_weight(std::size_t k) const;
  /// w_k, or wbar_k when bar is true.
  double h_weight(std::size_t k, bool bar = false) const;
  /// psi applied to a 3-vector (the shared shape of h_k and h_bar_k).
  Vec3 psi(const Vec3& u) const;

  /// sum_k dW_k sigma_k(x) has component c equal to A_c (1 + eps cos x_{(c+1)%3});
  /// returns A (for the barred sequence when bar is true).
  Vec3 transport_weights(std::span<const double> dW, bool bar) const;
  /// sum_k dW_k w_k (resp. wbar_k).
  double h_weights(std::span<const double> dW, bool bar) const;

 private:
  FamilyMetadata meta_;
};

/// Builds a family by name ("default", "silent", "custom"). Keys:
///   k_noise, amplitude, amplitude_bar, sigma_mass (custom: total Sigma mass),
///   sigma_modulation, h_kind (bounded|quadratic), h_amplitude, h_amplitude_bar,
///   forcing, forcing_b.
/// Throws Error on unknown keys, malformed values, or Sigma mass above 1/36.
CoefficientFamily make_family(const std::string& name, const ParamMap& params, const GridSpec& g);

FamilyPoint eval_family(const CoefficientFamily& fam, std::size_t k, const Vec3& x, const Vec6& y);

struct AssumptionCheck {
  std::string name;
  double worst_ratio = 0.0;  // observed / allowed; passes when <= 1 (+ slack)
  double observed = 0.0;     // largest raw observed quantity
  bool passed = true;
};

struct AssumptionReport {
  std::vector<AssumptionCheck> checks;
  bool all_passed() const;
  const AssumptionCheck& find(const std::string& name) const;
};

/// Samples grid points and random states and checks the growth, Lipschitz and
/// mass conditions against the family's reported constants.
AssumptionReport validate_assumptions(const CoefficientFamily& fam, const GridSpec& g,
                                      int n_samples, RngStream& rng);

}  // namespace tmhd
