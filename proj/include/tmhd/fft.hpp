#pragma once

// Thin RAII layer over FFTW's real-to-complex 3-D transforms. Plans are built
// once per grid size with FFTW_ESTIMATE (deterministic plan choice) and
// executed through the new-array interface, so any thread may use them with
// its own buffers.

#include <fftw3.h>

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "tmhd/grid.hpp"
#include "tmhd/spectral.hpp"

namespace tmhd::fft {

template <typename T>
struct FftwDeleter {
  void operator()(T* p) const { fftw_free(p); }
};

template <typename T>
using FftwPtr = std::unique_ptr<T[], FftwDeleter<T>>;

/// Real 3-D transform pair on an m^3 grid. forward() is unnormalized.
class RealFft3 {
 public:
  static const RealFft3& get(int m);

  ~RealFft3();
  RealFft3(const RealFft3&) = delete;
  RealFft3& operator=(const RealFft3&) = delete;

  int m() const { return m_; }
  std::size_t real_size() const { return real_size_; }
  std::size_t half_size() const { return half_size_; }

  void forward(double* in, fftw_complex* out) const;
  /// Destroys the contents of `in`.
  void backward(fftw_complex* in, double* out) const;

 private:
  explicit RealFft3(int m);

  int m_;
  std::size_t real_size_;
  std::size_t half_size_;
  fftw_plan r2c_ = nullptr;
  fftw_plan c2r_ = nullptr;
};

/// Aligned scratch for one grid size, owned by the calling thread.
struct Buffers {
  int m = 0;
  FftwPtr<double> real;
  FftwPtr<fftw_complex> half;
};

Buffers& scratch(int m);

/// Where each retained mode of grid g lives in the half-spectrum of an m^3 transform.
struct HalfSpectrumMap {
  std::vector<std::size_t> index;
  std::vector<unsigned char> conjugate;  // mode read as conj of its mirror
};

const HalfSpectrumMap& half_map(const GridSpec& g, int m);

/// Inverse-transform one spectral component onto `out` (m^3 samples).
void component_to_physical(std::span<const Complex> coeffs, const GridSpec& g, int m,
                           std::span<double> out);
/// Forward-transform m^3 samples and keep the retained cube, normalized by m^3.
void physical_to_component(std::span<const double> values, const GridSpec& g, int m,
                           std::span<Complex> coeffs);

/// ||grad f||_{L^2}^2 for a real scalar sampled on an m^3 grid, evaluated
/// spectrally using every resolved wavenumber of that grid.
double gradient_norm_sq_of_samples(std::span<const double> values, int m);

}  // namespace tmhd::fft
