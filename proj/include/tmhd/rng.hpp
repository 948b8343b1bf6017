#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace tmhd {

/// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

std::uint64_t splitmix64(std::uint64_t x);

inline constexpr std::string_view kRngAlgorithm =
    "philox4x32-10; key=splitmix64(seed ^ splitmix64(stream)); "
    "counter=(block, substream, draw_lo, draw_hi); gaussian=box-muller on 53-bit uniforms";

/// Counter-based stream: every draw is a pure function of
/// (master_seed, stream_id, counter, substream, position). Single owner.
struct RngStream {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;
  std::uint64_t counter = 0;

  /// Substreams partition each counter value into disjoint Philox counters.
  enum Substream : std::uint32_t { kW = 0, kWBar = 1, kGeneral = 2, kUniform = 3 };

  /// Standard normals for the current counter and substream; does not advance.
  void normals(std::span<double> out, std::uint32_t substream) const;
  /// Uniforms in (0, 1) for the current counter and substream; does not advance.
  void uniforms(std::span<double> out, std::uint32_t substream) const;

  /// Draw n standard normals from the general substream and advance the counter.
  std::vector<double> draw_normals(std::size_t n);
  std::vector<double> draw_uniforms(std::size_t n);
};

/// One step of Brownian increments for the two independent noise sequences.
struct NoiseIncrements {
  std::vector<double> dW;
  std::vector<double> dW_bar;
  double dt = 0.0;

  static NoiseIncrements zero(std::size_t k_noise, double dt);
  NoiseIncrements& operator+=(const NoiseIncrements& o);
};

/// 2*K independent N(0, dt) variates; W and W-bar come from disjoint substreams.
/// Advances the counter by one.
NoiseIncrements sample_increments(RngStream& rng, double dt, std::size_t k_noise);

}  // namespace tmhd
