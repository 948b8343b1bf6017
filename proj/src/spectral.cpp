#include "tmhd/spectral.hpp"

#include <algorithm>
#include <cmath>

#include "tmhd/fft.hpp"

namespace tmhd {

StatePair::StatePair(VectorFieldSpectral vel, VectorFieldSpectral mag)
    : v(std::move(vel)), B(std::move(mag)) {
  if (!(v.grid() == B.grid())) throw GridMismatch("velocity and magnetic field on different grids");
}

template <int C>
double hermitian_defect(const SpectralArray<C>& s) {
  const auto& table = modes(s.grid());
  double worst = 0.0;
  for (int c = 0; c < C; ++c) {
    for (std::size_t m = 0; m < table.k.size(); ++m) {
      worst = std::max(worst, std::abs(s(c, table.mirror[m]) - std::conj(s(c, m))));
    }
  }
  return worst;
}

template <int C>
SpectralArray<C> to_spectral(const PhysicalArray<C>& p, const GridSpec& g) {
  SpectralArray<C> out(g);
  for (int c = 0; c < C; ++c) fft::physical_to_component(p.comp[c], g, p.m, out.component(c));
  return out;
}

template <int C>
PhysicalArray<C> to_physical(const SpectralArray<C>& s, int m) {
  PhysicalArray<C> out(m);
  for (int c = 0; c < C; ++c) fft::component_to_physical(s.component(c), s.grid(), m, out.comp[c]);
  return out;
}

VectorFieldSpectral forward_transform(const PhysicalVector& p, const GridSpec& g) {
  g.validate();
  if (p.m != g.n) {
    throw GridMismatch("forward_transform: samples on " + std::to_string(p.m) +
                       "^3 but grid is " + describe(g));
  }
  for (const auto& c : p.comp) {
    if (c.size() != p.size()) throw GridMismatch("forward_transform: sample count mismatch");
  }
  return to_spectral(p, g);
}

PhysicalVector inverse_transform(const VectorFieldSpectral& s) {
  const double defect = hermitian_defect(s);
  if (defect > 1e-12 * std::max(1.0, s.max_abs())) {
    throw Error("inverse_transform: coefficients violate Hermitian symmetry (defect " +
                std::to_string(defect) + ")");
  }
  return to_physical(s, s.grid().n);
}

template <int C>
SpectralArray<C> spectral_derivative(const SpectralArray<C>& s, int axis) {
  if (axis < 0 || axis > 2) throw Error("spectral_derivative: axis must be 0, 1 or 2");
  const auto& table = modes(s.grid());
  SpectralArray<C> out(s.grid());
  for (int c = 0; c < C; ++c) {
    for (std::size_t m = 0; m < table.k.size(); ++m) {
      out(c, m) = Complex(0.0, table.k[m][axis]) * s(c, m);
    }
  }
  return out;
}

VectorFieldSpectral leray_project(const VectorFieldSpectral& s) {
  const auto& table = modes(s.grid());
  VectorFieldSpectral out(s.grid());
  for (std::size_t m = 0; m < table.k.size(); ++m) {
    const auto& k = table.k[m];
    const Complex u[3] = {s(0, m), s(1, m), s(2, m)};
    if (table.k_sq[m] == 0.0) {
      for (int c = 0; c < 3; ++c) out(c, m) = u[c];
      continue;
    }
    const Complex kdotu = static_cast<double>(k[0]) * u[0] + static_cast<double>(k[1]) * u[1] +
                          static_cast<double>(k[2]) * u[2];
    const Complex factor = kdotu / table.k_sq[m];
    for (int c = 0; c < 3; ++c) out(c, m) = u[c] - static_cast<double>(k[c]) * factor;
  }
  return out;
}

StatePair leray_project(const StatePair& y) { return {leray_project(y.v), leray_project(y.B)}; }

VectorFieldSpectral laplacian(const VectorFieldSpectral& s) {
  const auto& table = modes(s.grid());
  VectorFieldSpectral out(s.grid());
  for (int c = 0; c < 3; ++c) {
    for (std::size_t m = 0; m < table.k.size(); ++m) out(c, m) = -table.k_sq[m] * s(c, m);
  }
  return out;
}

StatePair laplacian(const StatePair& y) { return {laplacian(y.v), laplacian(y.B)}; }

template <int C>
SpectralArray<C> truncate_modes(const SpectralArray<C>& s, int n_keep) {
  if (n_keep < 0) throw Error("truncate_modes: n_keep must be nonnegative");
  SpectralArray<C> out = s;
  if (n_keep >= s.grid().cutoff) return out;
  const auto& table = modes(s.grid());
  for (std::size_t m = 0; m < table.k.size(); ++m) {
    if (table.max_abs(m) > n_keep) {
      for (int c = 0; c < C; ++c) out(c, m) = 0.0;
    }
  }
  return out;
}

StatePair truncate_modes(const StatePair& y, int n_keep) {
  return {truncate_modes(y.v, n_keep), truncate_modes(y.B, n_keep)};
}

double divergence_residual(const VectorFieldSpectral& s) {
  const auto& table = modes(s.grid());
  double worst = 0.0;
  for (std::size_t m = 0; m < table.k.size(); ++m) {
    const auto& k = table.k[m];
    const Complex d = static_cast<double>(k[0]) * s(0, m) + static_cast<double>(k[1]) * s(1, m) +
                      static_cast<double>(k[2]) * s(2, m);
    worst = std::max(worst, std::abs(d));
  }
  return worst;
}

double divergence_residual(const StatePair& y) {
  return std::max(divergence_residual(y.v), divergence_residual(y.B));
}

namespace {

template <typename Weight>
double weighted_inner(const VectorFieldSpectral& a, const VectorFieldSpectral& b, Weight w) {
  if (!(a.grid() == b.grid())) throw GridMismatch("inner product of fields on different grids");
  const auto& table = modes(a.grid());
  double sum = 0.0;
  for (std::size_t m = 0; m < table.k.size(); ++m) {
    double local = 0.0;
    for (int c = 0; c < 3; ++c) local += (std::conj(a(c, m)) * b(c, m)).real();
    sum += w(m, table) * local;
  }
  return sum * kBoxVolume;
}

}  // namespace

double sobolev_inner(const VectorFieldSpectral& a, const VectorFieldSpectral& b, double order) {
  if (order < 0.0) throw Error("sobolev_inner: order must be nonnegative");
  if (order == 0.0) return weighted_inner(a, b, [](std::size_t, const ModeTable&) { return 1.0; });
  if (order == 1.0) {
    return weighted_inner(a, b, [](std::size_t m, const ModeTable& t) { return 1.0 + t.k_sq[m]; });
  }
  if (order == 2.0) {
    return weighted_inner(a, b, [](std::size_t m, const ModeTable& t) {
      const double w = 1.0 + t.k_sq[m];
      return w * w;
    });
  }
  return weighted_inner(a, b, [order](std::size_t m, const ModeTable& t) {
    return std::pow(1.0 + t.k_sq[m], order);
  });
}

double sobolev_inner(const StatePair& a, const StatePair& b, double order) {
  if (!(a.grid() == b.grid())) throw GridMismatch("sobolev_inner: states on different grids");
  return sobolev_inner(a.v, b.v, order) + sobolev_inner(a.B, b.B, order);
}

double sobolev_norm_sq(const StatePair& y, double order) { return sobolev_inner(y, y, order); }

double gradient_norm_sq(const StatePair& y) {
  auto w = [](std::size_t m, const ModeTable& t) { return t.k_sq[m]; };
  return weighted_inner(y.v, y.v, w) + weighted_inner(y.B, y.B, w);
}

double hessian_norm_sq(const StatePair& y) {
  // sum_{i,j} k_i^2 k_j^2 = |k|^4
  auto w = [](std::size_t m, const ModeTable& t) { return t.k_sq[m] * t.k_sq[m]; };
  return weighted_inner(y.v, y.v, w) + weighted_inner(y.B, y.B, w);
}

ScalarSpectral dealiased_product(const ScalarSpectral& a, const ScalarSpectral& b) {
  if (!(a.grid() == b.grid())) throw GridMismatch("dealiased_product: operands on different grids");
  const int n = a.grid().n;
  auto pa = to_physical(a, n);
  const auto pb = to_physical(b, n);
  for (std::size_t i = 0; i < pa.size(); ++i) pa.comp[0][i] *= pb.comp[0][i];
  return to_spectral(pa, a.grid());
}

ScalarSpectral component(const VectorFieldSpectral& s, int c) {
  ScalarSpectral out(s.grid());
  std::ranges::copy(s.component(c), out.component(0).begin());
  return out;
}

template double hermitian_defect(const SpectralArray<1>&);
template double hermitian_defect(const SpectralArray<3>&);
template SpectralArray<1> to_spectral(const PhysicalArray<1>&, const GridSpec&);
template SpectralArray<3> to_spectral(const PhysicalArray<3>&, const GridSpec&);
template PhysicalArray<1> to_physical(const SpectralArray<1>&, int);
template PhysicalArray<3> to_physical(const SpectralArray<3>&, int);
template SpectralArray<1> spectral_derivative(const SpectralArray<1>&, int);
template SpectralArray<3> spectral_derivative(const SpectralArray<3>&, int);
template SpectralArray<1> truncate_modes(const SpectralArray<1>&, int);
template SpectralArray<3> truncate_modes(const SpectralArray<3>&, int);

}  // namespace tmhd
