#include "tmhd/rng.hpp"

#include <cmath>
#include <numbers>

#include "tmhd/grid.hpp"

namespace tmhd {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

std::array<std::uint32_t, 2> stream_key(std::uint64_t seed, std::uint64_t stream) {
  const std::uint64_t k = splitmix64(seed ^ splitmix64(stream));
  return {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

template <typename Emit>
void generate(const RngStream& rng, std::uint32_t substream, std::size_t count, Emit emit) {
  const auto key = stream_key(rng.master_seed, rng.stream_id);
  const auto lo = static_cast<std::uint32_t>(rng.counter);
  const auto hi = static_cast<std::uint32_t>(rng.counter >> 32);
  std::size_t produced = 0;
  for (std::uint32_t block = 0; produced < count; ++block) {
    const auto r = philox4x32({block, substream, lo, hi}, key);
    const double u1 = to_unit(r[0], r[1]);
    const double u2 = to_unit(r[2], r[3]);
    produced += emit(u1, u2, produced);
  }
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

void RngStream::normals(std::span<double> out, std::uint32_t substream) const {
  generate(*this, substream, out.size(), [&](double u1, double u2, std::size_t at) {
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    out[at] = radius * std::cos(angle);
    if (at + 1 < out.size()) {
      out[at + 1] = radius * std::sin(angle);
      return std::size_t{2};
    }
    return std::size_t{1};
  });
}

void RngStream::uniforms(std::span<double> out, std::uint32_t substream) const {
  generate(*this, substream, out.size(), [&](double u1, double u2, std::size_t at) {
    out[at] = u1;
    if (at + 1 < out.size()) {
      out[at + 1] = u2;
      return std::size_t{2};
    }
    return std::size_t{1};
  });
}

std::vector<double> RngStream::draw_normals(std::size_t n) {
  std::vector<double> out(n);
  normals(out, kGeneral);
  ++counter;
  return out;
}

std::vector<double> RngStream::draw_uniforms(std::size_t n) {
  std::vector<double> out(n);
  uniforms(out, kUniform);
  ++counter;
  return out;
}

NoiseIncrements NoiseIncrements::zero(std::size_t k_noise, double dt) {
  return {std::vector<double>(k_noise, 0.0), std::vector<double>(k_noise, 0.0), dt};
}

NoiseIncrements& NoiseIncrements::operator+=(const NoiseIncrements& o) {
  if (o.dW.size() != dW.size()) throw Error("noise increments: size mismatch");
  for (std::size_t k = 0; k < dW.size(); ++k) {
    dW[k] += o.dW[k];
    dW_bar[k] += o.dW_bar[k];
  }
  dt += o.dt;
  return *this;
}

NoiseIncrements sample_increments(RngStream& rng, double dt, std::size_t k_noise) {
  if (!(dt > 0.0)) throw Error("sample_increments: dt must be positive");
  NoiseIncrements inc{std::vector<double>(k_noise), std::vector<double>(k_noise), dt};
  rng.normals(inc.dW, RngStream::kW);
  rng.normals(inc.dW_bar, RngStream::kWBar);
  const double scale = std::sqrt(dt);
  for (std::size_t k = 0; k < k_noise; ++k) {
    inc.dW[k] *= scale;
    inc.dW_bar[k] *= scale;
  }
  ++rng.counter;
  return inc;
}

}  // namespace tmhd
