#include "tmhd/fft.hpp"

#include <algorithm>
#include <cstring>
#include <map>
#include <mutex>
#include <tuple>

namespace tmhd::fft {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

int wrap(int k, int m) { return k >= 0 ? k : k + m; }

}  // namespace

RealFft3::RealFft3(int m)
    : m_(m),
      real_size_(static_cast<std::size_t>(m) * m * m),
      half_size_(static_cast<std::size_t>(m) * m * (m / 2 + 1)) {
  FftwPtr<double> r(fftw_alloc_real(real_size_));
  FftwPtr<fftw_complex> c(fftw_alloc_complex(half_size_));
  r2c_ = fftw_plan_dft_r2c_3d(m, m, m, r.get(), c.get(), FFTW_ESTIMATE);
  c2r_ = fftw_plan_dft_c2r_3d(m, m, m, c.get(), r.get(), FFTW_ESTIMATE);
  if (r2c_ == nullptr || c2r_ == nullptr) throw Error("fftw: plan creation failed");
}

RealFft3::~RealFft3() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(r2c_);
  fftw_destroy_plan(c2r_);
}

const RealFft3& RealFft3::get(int m) {
  auto& mutex = planner_mutex();  // constructed before the cache, so it outlives it
  static std::map<int, std::unique_ptr<RealFft3>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[m];
  if (!slot) slot.reset(new RealFft3(m));
  return *slot;
}

void RealFft3::forward(double* in, fftw_complex* out) const { fftw_execute_dft_r2c(r2c_, in, out); }

void RealFft3::backward(fftw_complex* in, double* out) const { fftw_execute_dft_c2r(c2r_, in, out); }

Buffers& scratch(int m) {
  thread_local std::map<int, Buffers> pool;
  auto& b = pool[m];
  if (b.m == 0) {
    const auto& plan = RealFft3::get(m);
    b.m = m;
    b.real.reset(fftw_alloc_real(plan.real_size()));
    b.half.reset(fftw_alloc_complex(plan.half_size()));
  }
  return b;
}

const HalfSpectrumMap& half_map(const GridSpec& g, int m) {
  static std::mutex mutex;
  static std::map<std::tuple<int, int, int>, std::unique_ptr<HalfSpectrumMap>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{g.n, g.cutoff, m}];
  if (!slot) {
    if (m < 2 * g.cutoff + 1) throw Error("transform grid too coarse for the retained cube");
    const auto& table = modes(g);
    slot = std::make_unique<HalfSpectrumMap>();
    slot->index.resize(table.k.size());
    slot->conjugate.resize(table.k.size());
    const auto hm = static_cast<std::size_t>(m / 2 + 1);
    for (std::size_t i = 0; i < table.k.size(); ++i) {
      auto k = table.k[i];
      const bool conj = k[2] < 0;
      if (conj) k = {-k[0], -k[1], -k[2]};
      slot->index[i] =
          (static_cast<std::size_t>(wrap(k[0], m)) * m + static_cast<std::size_t>(wrap(k[1], m))) *
              hm +
          static_cast<std::size_t>(k[2]);
      slot->conjugate[i] = conj ? 1 : 0;
    }
  }
  return *slot;
}

void component_to_physical(std::span<const Complex> coeffs, const GridSpec& g, int m,
                           std::span<double> out) {
  const auto& plan = RealFft3::get(m);
  const auto& map = half_map(g, m);
  auto& buf = scratch(m);
  std::memset(buf.half.get(), 0, sizeof(fftw_complex) * plan.half_size());
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    if (map.conjugate[i]) continue;
    buf.half[map.index[i]][0] = coeffs[i].real();
    buf.half[map.index[i]][1] = coeffs[i].imag();
  }
  plan.backward(buf.half.get(), buf.real.get());
  std::copy_n(buf.real.get(), plan.real_size(), out.begin());
}

void physical_to_component(std::span<const double> values, const GridSpec& g, int m,
                           std::span<Complex> coeffs) {
  const auto& plan = RealFft3::get(m);
  const auto& map = half_map(g, m);
  auto& buf = scratch(m);
  std::copy_n(values.begin(), plan.real_size(), buf.real.get());
  plan.forward(buf.real.get(), buf.half.get());
  const double scale = 1.0 / static_cast<double>(plan.real_size());
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    const auto& h = buf.half[map.index[i]];
    coeffs[i] = map.conjugate[i] ? Complex(h[0], -h[1]) * scale : Complex(h[0], h[1]) * scale;
  }
}

double gradient_norm_sq_of_samples(std::span<const double> values, int m) {
  const auto& plan = RealFft3::get(m);
  auto& buf = scratch(m);
  std::copy_n(values.begin(), plan.real_size(), buf.real.get());
  plan.forward(buf.real.get(), buf.half.get());
  const double scale = 1.0 / static_cast<double>(plan.real_size());
  const int hm = m / 2 + 1;
  double sum = 0.0;
  for (int i1 = 0; i1 < m; ++i1) {
    const int k1 = i1 <= m / 2 ? i1 : i1 - m;
    for (int i2 = 0; i2 < m; ++i2) {
      const int k2 = i2 <= m / 2 ? i2 : i2 - m;
      for (int k3 = 0; k3 < hm; ++k3) {
        const auto& h = buf.half[(static_cast<std::size_t>(i1) * m + i2) * hm + k3];
        const double weight = (k3 == 0 || 2 * k3 == m) ? 1.0 : 2.0;
        const double ksq = static_cast<double>(k1 * k1 + k2 * k2 + k3 * k3);
        sum += weight * ksq * (h[0] * h[0] + h[1] * h[1]);
      }
    }
  }
  return sum * scale * scale * kBoxVolume;
}

}  // namespace tmhd::fft
