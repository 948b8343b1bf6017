#include "tmhd/diagnostics.hpp"

#include <cmath>

#include "tmhd/fft.hpp"

namespace tmhd {

bool DiagnosticsRecord::finite() const {
  for (double v : {t, E_kin, E_mag, h1_sq, h2_sq, l4_fourth, grad_ysq_sq, taming_fraction,
                   div_residual, cross_helicity}) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

DiagnosticsRecord diagnostics_record(const StatePair& y, double t, const TamingSpec& spec) {
  DiagnosticsRecord d;
  d.t = t;
  d.E_kin = 0.5 * sobolev_inner(y.v, y.v, 0.0);
  d.E_mag = 0.5 * sobolev_inner(y.B, y.B, 0.0);
  d.h1_sq = sobolev_norm_sq(y, 1.0);
  d.h2_sq = sobolev_norm_sq(y, 2.0);
  d.div_residual = divergence_residual(y);
  d.cross_helicity = sobolev_inner(y.v, y.B, 0.0);

  const int m = y.grid().padded();
  const auto pv = to_physical(y.v, m);
  const auto pB = to_physical(y.B, m);
  std::vector<double> r(pv.size());
  double l4 = 0.0;
  std::size_t tamed = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    double s = 0.0;
    for (int c = 0; c < 3; ++c) s += pv.comp[c][i] * pv.comp[c][i] + pB.comp[c][i] * pB.comp[c][i];
    r[i] = s;
    l4 += s * s;
    if (s > spec.N) ++tamed;
  }
  d.l4_fourth = l4 * kBoxVolume / static_cast<double>(r.size());
  d.taming_fraction = static_cast<double>(tamed) / static_cast<double>(r.size());
  d.grad_ysq_sq = fft::gradient_norm_sq_of_samples(r, m);
  return d;
}

}  // namespace tmhd
