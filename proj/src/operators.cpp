#include "tmhd/operators.hpp"

#include <array>
#include <cmath>

namespace tmhd {

namespace {

void check_same_grid(const GridSpec& a, const GridSpec& b, const char* what) {
  if (!(a == b)) throw GridMismatch(std::string(what) + ": operands on different grids");
}

double grid_coordinate(int i, int m) { return kTwoPi * i / m; }

// y and its first derivatives sampled on an m^3 grid.
struct SampledState {
  int m = 0;
  std::array<PhysicalVector, 2> field;        // v, B
  std::array<std::array<PhysicalVector, 3>, 2> grad;  // grad[f][j].comp[c] = d_j f_c

  SampledState(const StatePair& y, int points) : m(points) {
    for (int f = 0; f < 2; ++f) {
      field[f] = to_physical(y.field(f), m);
      for (int j = 0; j < 3; ++j) grad[f][j] = to_physical(spectral_derivative(y.field(f), j), m);
    }
  }
};

}  // namespace

VectorFieldSpectral convect(const VectorFieldSpectral& a, const VectorFieldSpectral& b) {
  check_same_grid(a.grid(), b.grid(), "convect");
  const GridSpec& g = a.grid();
  const auto pa = to_physical(a, g.n);
  PhysicalVector out(g.n);
  for (int j = 0; j < 3; ++j) {
    const auto db = to_physical(spectral_derivative(b, j), g.n);
    for (int c = 0; c < 3; ++c) {
      auto& dst = out.comp[c];
      const auto& aj = pa.comp[j];
      const auto& src = db.comp[c];
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += aj[i] * src[i];
    }
  }
  return to_spectral(out, g);
}

StatePair bilinear_block(const StatePair& y) {
  return {convect(y.v, y.v) - convect(y.B, y.B), convect(y.v, y.B) - convect(y.B, y.v)};
}

StatePair taming_block(const StatePair& y, const TamingSpec& spec) {
  spec.validate();
  const GridSpec& g = y.grid();
  const int m = g.padded();
  auto pv = to_physical(y.v, m);
  auto pB = to_physical(y.B, m);
  for (std::size_t i = 0; i < pv.size(); ++i) {
    double r = 0.0;
    for (int c = 0; c < 3; ++c) r += pv.comp[c][i] * pv.comp[c][i] + pB.comp[c][i] * pB.comp[c][i];
    const double factor = taming_value(r, spec);
    for (int c = 0; c < 3; ++c) {
      pv.comp[c][i] *= factor;
      pB.comp[c][i] *= factor;
    }
  }
  return {to_spectral(pv, g), to_spectral(pB, g)};
}

DriftParts operator_A_parts(const StatePair& y, const TamingSpec& spec) {
  return {leray_project(laplacian(y)), leray_project(bilinear_block(y)),
          leray_project(taming_block(y, spec))};
}

StatePair operator_A(const StatePair& y, const TamingSpec& spec) {
  const auto parts = operator_A_parts(y, spec);
  return parts.laplacian - parts.bilinear - parts.taming;
}

double taming_integral(const StatePair& y, const TamingSpec& spec, int m) {
  spec.validate();
  const auto pv = to_physical(y.v, m);
  const auto pB = to_physical(y.B, m);
  double sum = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    double r = 0.0;
    for (int c = 0; c < 3; ++c) r += pv.comp[c][i] * pv.comp[c][i] + pB.comp[c][i] * pB.comp[c][i];
    sum += taming_value(r, spec) * r;
  }
  return sum * kBoxVolume / static_cast<double>(pv.size());
}

EnergyPairing energy_pairing(const StatePair& y, const TamingSpec& spec, int quadrature_points) {
  const auto parts = operator_A_parts(y, spec);
  EnergyPairing e;
  e.bilinear_pairing = -sobolev_inner(parts.bilinear, y, 0.0);
  e.gradient_term = gradient_norm_sq(y);
  e.taming_term = taming_integral(y, spec, quadrature_points > 0 ? quadrature_points : 4 * y.grid().n);
  e.drift_pairing = sobolev_inner(parts.laplacian - parts.bilinear - parts.taming, y, 0.0);
  return e;
}

namespace {

// B_k evaluated from pre-sampled fields on the padded grid.
StatePair operator_B_sampled(const SampledState& s, const GridSpec& g, const CoefficientFamily& fam,
                             std::size_t k) {
  const int m = s.m;
  PhysicalVector out_v(m), out_B(m);
  const double wk = fam.h_weight(k, false);
  const double wbk = fam.h_weight(k, true);
  std::size_t i = 0;
  for (int i1 = 0; i1 < m; ++i1) {
    for (int i2 = 0; i2 < m; ++i2) {
      for (int i3 = 0; i3 < m; ++i3, ++i) {
        const Vec3 x{grid_coordinate(i1, m), grid_coordinate(i2, m), grid_coordinate(i3, m)};
        const Vec3 sig = fam.sigma(k, x);
        const Vec3 sigb = fam.sigma_bar(k, x);
        const Vec3 hv = fam.psi({s.field[0].comp[0][i], s.field[0].comp[1][i], s.field[0].comp[2][i]});
        const Vec3 hb = fam.psi({s.field[1].comp[0][i], s.field[1].comp[1][i], s.field[1].comp[2][i]});
        for (int c = 0; c < 3; ++c) {
          double tv = 0.0, tb = 0.0;
          for (int j = 0; j < 3; ++j) {
            tv += sig[j] * s.grad[0][j].comp[c][i];
            tb += sigb[j] * s.grad[1][j].comp[c][i];
          }
          out_v.comp[c][i] = tv + wk * hv[c];
          out_B.comp[c][i] = tb + wbk * hb[c];
        }
      }
    }
  }
  return leray_project(StatePair{to_spectral(out_v, g), to_spectral(out_B, g)});
}

}  // namespace

StatePair operator_B(const StatePair& y, const CoefficientFamily& fam, std::size_t k) {
  if (k >= fam.k_noise) throw Error("operator_B: noise index out of range");
  const SampledState s(y, y.grid().padded());
  return operator_B_sampled(s, y.grid(), fam, k);
}

double hs_norm_B(const StatePair& y, const CoefficientFamily& fam, double order) {
  if (order < 0.0) throw Error("hs_norm_B: order must be nonnegative");
  const SampledState s(y, y.grid().padded());
  double total = 0.0;
  for (std::size_t k = 0; k < fam.k_noise; ++k) {
    total += sobolev_norm_sq(operator_B_sampled(s, y.grid(), fam, k), order);
  }
  return total;
}

}  // namespace tmhd
