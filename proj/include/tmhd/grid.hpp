#pragma once

#include <array>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tmhd {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
/// Volume of the periodic box [0, 2pi)^3.
inline constexpr double kBoxVolume = kTwoPi * kTwoPi * kTwoPi;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GridMismatch : public Error {
 public:
  using Error::Error;
};

/// Uniform grid on the 3-torus together with the retained spectral cube
/// |k_j| <= cutoff. The cutoff obeys the 2/3 rule so quadratic products of
/// retained modes are alias free on the n^3 grid.
struct GridSpec {
  int n = 16;
  int cutoff = 5;

  static GridSpec with_default_cutoff(int n) { return GridSpec{n, n / 3}; }

  /// Throws Error when n is not a power of two >= 8 or the cutoff violates the 2/3 rule.
  void validate() const;

  /// Points per axis of the 3/2-padded grid used for non-polynomial terms.
  int padded() const { return 3 * n / 2; }
  int side() const { return 2 * cutoff + 1; }
  std::size_t mode_count() const {
    const auto s = static_cast<std::size_t>(side());
    return s * s * s;
  }

  bool operator==(const GridSpec&) const = default;
};

std::string describe(const GridSpec& g);

using Wavevector = std::array<int, 3>;

/// Precomputed geometry of the retained cube. Modes are ordered like an FFT
/// array restricted to the cube: k1 slowest, each axis 0..c, -c..-1.
struct ModeTable {
  GridSpec grid;
  std::vector<Wavevector> k;
  std::vector<double> k_sq;
  std::vector<std::size_t> mirror;  // index of -k
  int max_abs(std::size_t m) const;
};

const ModeTable& modes(const GridSpec& g);

std::size_t mode_index(const GridSpec& g, const Wavevector& k);
bool in_cube(const GridSpec& g, const Wavevector& k);

}  // namespace tmhd
