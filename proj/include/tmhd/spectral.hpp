#pragma once

#include <algorithm>
#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "tmhd/grid.hpp"

namespace tmhd {

using Complex = std::complex<double>;

/// Fourier coefficients of a real field with Components components, restricted
/// to the retained cube of its grid. Coefficients are true Fourier
/// coefficients: u(x) = sum_k u_k exp(i k.x).
template <int Components>
class SpectralArray {
 public:
  SpectralArray() = default;
  explicit SpectralArray(const GridSpec& g) : grid_(g), data_(Components * g.mode_count()) {}

  const GridSpec& grid() const { return grid_; }
  std::size_t mode_count() const { return grid_.mode_count(); }

  Complex& operator()(int c, std::size_t m) { return data_[c * mode_count() + m]; }
  const Complex& operator()(int c, std::size_t m) const { return data_[c * mode_count() + m]; }
  Complex& at(int c, const Wavevector& k) { return (*this)(c, mode_index(grid_, k)); }
  const Complex& at(int c, const Wavevector& k) const { return (*this)(c, mode_index(grid_, k)); }

  std::span<Complex> component(int c) { return {data_.data() + c * mode_count(), mode_count()}; }
  std::span<const Complex> component(int c) const {
    return {data_.data() + c * mode_count(), mode_count()};
  }
  std::span<Complex> data() { return data_; }
  std::span<const Complex> data() const { return data_; }

  double max_abs() const {
    double m = 0.0;
    for (const auto& z : data_) m = std::max(m, std::abs(z));
    return m;
  }

  SpectralArray& operator+=(const SpectralArray& o) {
    check_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  SpectralArray& operator-=(const SpectralArray& o) {
    check_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  SpectralArray& operator*=(double s) {
    for (auto& z : data_) z *= s;
    return *this;
  }
  friend SpectralArray operator+(SpectralArray a, const SpectralArray& b) { return a += b; }
  friend SpectralArray operator-(SpectralArray a, const SpectralArray& b) { return a -= b; }
  friend SpectralArray operator*(double s, SpectralArray a) { return a *= s; }

  bool operator==(const SpectralArray&) const = default;

 private:
  void check_same(const SpectralArray& o) const {
    if (!(o.grid_ == grid_)) throw GridMismatch("spectral fields live on different grids");
  }

  GridSpec grid_;
  std::vector<Complex> data_;
};

using ScalarSpectral = SpectralArray<1>;
using VectorFieldSpectral = SpectralArray<3>;

/// Real samples on an m^3 uniform grid, x_j = 2 pi i_j / m, row-major with i1 slowest.
template <int Components>
struct PhysicalArray {
  int m = 0;
  std::array<std::vector<double>, Components> comp;

  PhysicalArray() = default;
  explicit PhysicalArray(int points) : m(points) {
    const auto total = static_cast<std::size_t>(points) * points * points;
    for (auto& c : comp) c.assign(total, 0.0);
  }
  std::size_t size() const { return static_cast<std::size_t>(m) * m * m; }
};

using PhysicalScalar = PhysicalArray<1>;
using PhysicalVector = PhysicalArray<3>;

/// Velocity and magnetic field on a shared grid.
struct StatePair {
  VectorFieldSpectral v;
  VectorFieldSpectral B;

  StatePair() = default;
  explicit StatePair(const GridSpec& g) : v(g), B(g) {}
  StatePair(VectorFieldSpectral vel, VectorFieldSpectral mag);

  const GridSpec& grid() const { return v.grid(); }
  VectorFieldSpectral& field(int i) { return i == 0 ? v : B; }
  const VectorFieldSpectral& field(int i) const { return i == 0 ? v : B; }
  double max_abs() const { return std::max(v.max_abs(), B.max_abs()); }

  StatePair& operator+=(const StatePair& o) {
    v += o.v;
    B += o.B;
    return *this;
  }
  StatePair& operator-=(const StatePair& o) {
    v -= o.v;
    B -= o.B;
    return *this;
  }
  StatePair& operator*=(double s) {
    v *= s;
    B *= s;
    return *this;
  }
  friend StatePair operator+(StatePair a, const StatePair& b) { return a += b; }
  friend StatePair operator-(StatePair a, const StatePair& b) { return a -= b; }
  friend StatePair operator*(double s, StatePair a) { return a *= s; }
  bool operator==(const StatePair&) const = default;
};

// Transforms -----------------------------------------------------------------

/// Forward transform of samples on the n^3 grid; throws GridMismatch when p.m != g.n.
VectorFieldSpectral forward_transform(const PhysicalVector& p, const GridSpec& g);
/// Inverse transform onto the n^3 grid. Throws Error on Hermitian symmetry violation.
PhysicalVector inverse_transform(const VectorFieldSpectral& s);

/// Largest |u(-k) - conj(u(k))| over all components and modes.
template <int C>
double hermitian_defect(const SpectralArray<C>& s);

/// Forward/inverse transform on an arbitrary grid of m >= 2*cutoff+1 points per axis.
template <int C>
SpectralArray<C> to_spectral(const PhysicalArray<C>& p, const GridSpec& g);
template <int C>
PhysicalArray<C> to_physical(const SpectralArray<C>& s, int m);

// Per-mode operators ---------------------------------------------------------

template <int C>
SpectralArray<C> spectral_derivative(const SpectralArray<C>& s, int axis);
VectorFieldSpectral leray_project(const VectorFieldSpectral& s);
StatePair leray_project(const StatePair& y);
VectorFieldSpectral laplacian(const VectorFieldSpectral& s);
StatePair laplacian(const StatePair& y);

/// Zero all modes with max_j |k_j| > n_keep. n_keep at or above the cutoff is the identity.
template <int C>
SpectralArray<C> truncate_modes(const SpectralArray<C>& s, int n_keep);
StatePair truncate_modes(const StatePair& y, int n_keep);

/// Largest |k . u_k| over the retained modes.
double divergence_residual(const VectorFieldSpectral& s);
double divergence_residual(const StatePair& y);

// Sobolev structure ----------------------------------------------------------

/// Bessel-potential inner product sum_k (1+|k|^2)^s <a_k, b_k> (2 pi)^3 over v and B.
double sobolev_inner(const StatePair& a, const StatePair& b, double order);
double sobolev_norm_sq(const StatePair& y, double order);
double sobolev_inner(const VectorFieldSpectral& a, const VectorFieldSpectral& b, double order);
/// ||grad y||^2 in L^2.
double gradient_norm_sq(const StatePair& y);
/// Homogeneous second-order seminorm sum_{i,j} ||d_i d_j y||^2.
double hessian_norm_sq(const StatePair& y);

// Products -------------------------------------------------------------------

/// Pseudo-spectral product of two scalar fields on the n^3 grid, truncated to the cutoff.
ScalarSpectral dealiased_product(const ScalarSpectral& a, const ScalarSpectral& b);
ScalarSpectral component(const VectorFieldSpectral& s, int c);

}  // namespace tmhd
