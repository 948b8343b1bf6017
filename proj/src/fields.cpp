#include "tmhd/fields.hpp"

#include <cmath>

namespace tmhd {

Vec3 polarization(const Wavevector& k, int which) {
  const double kn = std::sqrt(static_cast<double>(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]));
  if (kn == 0.0) throw Error("polarization: undefined at k = 0");
  if (which != 0 && which != 1) throw Error("polarization: index must be 0 or 1");
  const Vec3 khat{k[0] / kn, k[1] / kn, k[2] / kn};
  const bool along_e3 = k[0] == 0 && k[1] == 0;
  const Vec3 ref = along_e3 ? Vec3{1.0, 0.0, 0.0} : Vec3{0.0, 0.0, 1.0};
  const double proj = ref[0] * khat[0] + ref[1] * khat[1] + ref[2] * khat[2];
  Vec3 p{ref[0] - proj * khat[0], ref[1] - proj * khat[1], ref[2] - proj * khat[2]};
  const double pn = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
  for (auto& c : p) c /= pn;
  if (which == 0) return p;
  return {khat[1] * p[2] - khat[2] * p[1], khat[2] * p[0] - khat[0] * p[2],
          khat[0] * p[1] - khat[1] * p[0]};
}

StatePair single_mode_state(const GridSpec& g, const Wavevector& k, int which, double amplitude,
                            FieldSlot slot) {
  g.validate();
  if (!in_cube(g, k)) throw Error("single_mode_state: wavevector outside the retained cube");
  const Vec3 e = polarization(k, which);
  StatePair y(g);
  const Wavevector mk{-k[0], -k[1], -k[2]};
  for (int f = 0; f < 2; ++f) {
    if ((f == 0 && slot == FieldSlot::magnetic) || (f == 1 && slot == FieldSlot::velocity)) continue;
    for (int c = 0; c < 3; ++c) {
      y.field(f).at(c, k) += 0.5 * amplitude * e[c];
      y.field(f).at(c, mk) += 0.5 * amplitude * e[c];
    }
  }
  return y;
}

double rms_amplitude(const StatePair& y) { return std::sqrt(sobolev_norm_sq(y, 0.0) / kBoxVolume); }

StatePair random_state(const GridSpec& g, RngStream& rng, double slope, double rms, int n_keep) {
  g.validate();
  if (!(rms >= 0.0)) throw Error("random_state: rms amplitude must be nonnegative");
  const auto& table = modes(g);
  const auto z = rng.draw_normals(12 * table.k.size());
  StatePair y(g);
  for (std::size_t m = 0; m < table.k.size(); ++m) {
    const std::size_t mm = table.mirror[m];
    if (table.k_sq[m] == 0.0 || mm < m) continue;
    if (n_keep >= 0 && table.max_abs(m) > n_keep) continue;
    const double weight = std::pow(table.k_sq[m], -0.5 * slope);
    for (int f = 0; f < 2; ++f) {
      for (int c = 0; c < 3; ++c) {
        const std::size_t at = 12 * m + 6 * f + 2 * c;
        const Complex value(weight * z[at], weight * z[at + 1]);
        y.field(f)(c, m) = value;
        y.field(f)(c, mm) = std::conj(value);
      }
    }
  }
  y = leray_project(y);
  const double now = rms_amplitude(y);
  if (now > 0.0) y *= rms / now;
  return y;
}

StatePair embed(const StatePair& y, const GridSpec& target) {
  target.validate();
  const GridSpec& src = y.grid();
  if (target.cutoff < src.cutoff) throw GridMismatch("embed: target cutoff below the source cutoff");
  const auto& table = modes(src);
  StatePair out(target);
  for (int f = 0; f < 2; ++f) {
    for (int c = 0; c < 3; ++c) {
      for (std::size_t m = 0; m < table.k.size(); ++m) out.field(f).at(c, table.k[m]) = y.field(f)(c, m);
    }
  }
  return out;
}

}  // namespace tmhd
