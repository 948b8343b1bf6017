#pragma once

#include <cstddef>

#include "tmhd/family.hpp"
#include "tmhd/spectral.hpp"
#include "tmhd/taming.hpp"

namespace tmhd {

/// (a . grad) b, pseudo-spectral on the n^3 grid, truncated to the cutoff, not projected.
VectorFieldSpectral convect(const VectorFieldSpectral& a, const VectorFieldSpectral& b);

/// Unprojected MHD coupling: ((v.grad)v - (B.grad)B, (v.grad)B - (B.grad)v).
StatePair bilinear_block(const StatePair& y);

/// Unprojected taming force g_N(|y|^2) y, sampled on the 3/2-padded grid and truncated.
StatePair taming_block(const StatePair& y, const TamingSpec& spec);

/// The three projected pieces of the drift: A = laplacian - bilinear - taming.
struct DriftParts {
  StatePair laplacian;  // P Lap y
  StatePair bilinear;   // P bilinear_block(y)
  StatePair taming;     // P taming_block(y)
};

DriftParts operator_A_parts(const StatePair& y, const TamingSpec& spec);
StatePair operator_A(const StatePair& y, const TamingSpec& spec);

struct EnergyPairing {
  double bilinear_pairing = 0.0;  // <-P bilinear_block(y), y>, vanishes for exact arithmetic
  double gradient_term = 0.0;     // ||grad y||^2
  double taming_term = 0.0;       // int g_N(|y|^2) |y|^2 by fine quadrature
  double drift_pairing = 0.0;     // <A(y), y> as evaluated by operator_A

  /// <A(y), y> + ||grad y||^2 + taming_term; zero up to quadrature error.
  double residual() const { return drift_pairing + gradient_term + taming_term; }
  double scale() const { return gradient_term + taming_term; }
};

/// quadrature_points: samples per axis for the taming integral (0 picks 4n).
EnergyPairing energy_pairing(const StatePair& y, const TamingSpec& spec, int quadrature_points = 0);

/// int_T3 g_N(|y|^2) |y|^2 dx by the trapezoid rule on an m^3 grid.
double taming_integral(const StatePair& y, const TamingSpec& spec, int m);

/// B_k(y) = P[(sigma_k . grad) v + h_k(y), (sigma_bar_k . grad) B + h_bar_k(y)].
StatePair operator_B(const StatePair& y, const CoefficientFamily& fam, std::size_t k);

/// sum_k ||B_k(y)||^2 in the Bessel-potential norm of the given order.
double hs_norm_B(const StatePair& y, const CoefficientFamily& fam, double order);

}  // namespace tmhd
