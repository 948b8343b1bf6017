#pragma once

#include <cmath>
#include <complex>

#include "tmhd/fields.hpp"
#include "tmhd/spectral.hpp"

namespace tmhd::testing {

/// Direct Fourier sum of component c at x, independent of FFTW.
inline double evaluate_at(const VectorFieldSpectral& s, int c, const Vec3& x) {
  const auto& table = modes(s.grid());
  std::complex<double> sum = 0.0;
  for (std::size_t m = 0; m < table.k.size(); ++m) {
    const auto& k = table.k[m];
    const double phase = k[0] * x[0] + k[1] * x[1] + k[2] * x[2];
    sum += s(c, m) * std::complex<double>(std::cos(phase), std::sin(phase));
  }
  return sum.real();
}

inline double max_diff(const StatePair& a, const StatePair& b) { return (a - b).max_abs(); }

inline StatePair random_pair(const GridSpec& g, std::uint64_t seed, double rms = 1.0, double slope = 1.0) {
  RngStream rng{seed, 7, 0};
  return random_state(g, rng, slope, rms);
}

}  // namespace tmhd::testing
