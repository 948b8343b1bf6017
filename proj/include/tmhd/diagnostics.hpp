#pragma once

#include <string_view>

#include "tmhd/spectral.hpp"
#include "tmhd/taming.hpp"

namespace tmhd {

struct DiagnosticsRecord {
  double t = 0.0;
  double E_kin = 0.0;           // 1/2 ||v||^2
  double E_mag = 0.0;           // 1/2 ||B||^2
  double h1_sq = 0.0;
  double h2_sq = 0.0;
  double l4_fourth = 0.0;       // int |y|^4
  double grad_ysq_sq = 0.0;     // ||grad |y|^2||^2
  double taming_fraction = 0.0; // share of padded-grid points with |y|^2 > N
  double div_residual = 0.0;    // max_k |k . y_k| over v and B
  double cross_helicity = 0.0;  // <v, B>

  bool finite() const;
};

inline constexpr std::string_view kDiagnosticsHeader =
    "t,E_kin,E_mag,h1_sq,h2_sq,l4_fourth,grad_ysq_sq,taming_fraction,div_residual,cross_helicity";

/// Norms spectrally; l4_fourth, grad_ysq_sq and taming_fraction on the
/// 3/2-padded grid, where the first two are exact for band-limited y.
DiagnosticsRecord diagnostics_record(const StatePair& y, double t, const TamingSpec& spec);

}  // namespace tmhd
