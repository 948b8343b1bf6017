#pragma once

#include "tmhd/family.hpp"
#include "tmhd/rng.hpp"
#include "tmhd/spectral.hpp"

namespace tmhd {

/// Divergence-free polarization vectors for k != 0: the first is the
/// normalized projection of e3 onto k-perp (e1 when k is parallel to e3), the
/// second is khat x first.
Vec3 polarization(const Wavevector& k, int which);

enum class FieldSlot { velocity, magnetic, both };

/// Real field amplitude * e_p cos(k.x) placed in v, B or both.
StatePair single_mode_state(const GridSpec& g, const Wavevector& k, int which, double amplitude,
                            FieldSlot slot = FieldSlot::velocity);

/// Random divergence-free pair with Gaussian coefficients decaying like
/// |k|^{-slope}, zero mean, modes with max_j |k_j| <= n_keep (n_keep < 0: all),
/// rescaled to root-mean-square amplitude rms. Draws from rng's general substream.
StatePair random_state(const GridSpec& g, RngStream& rng, double slope, double rms, int n_keep = -1);

/// Root-mean-square pointwise amplitude sqrt(||y||^2 / vol).
double rms_amplitude(const StatePair& y);

/// Re-expresses y on a grid with at least its cutoff (zero padding of new modes).
StatePair embed(const StatePair& y, const GridSpec& target);

}  // namespace tmhd
