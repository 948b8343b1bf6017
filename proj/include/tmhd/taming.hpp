#pragma once

namespace tmhd {

/// Taming function g_N: zero on [0, N], affine with slope c_taming on
/// [N+1, inf) with value c_taming (r - N - 1/2), and on (N, N+1) the
/// polynomial c_taming (s^3 - s^4/2), s = r - N. That blend is the quintic
/// Hermite interpolant of (g, g', g'') = (0, 0, 0) at N and
/// (c/2, c, 0) at N+1; its quintic coefficient vanishes.
struct TamingSpec {
  double N = 100.0;
  double c_taming = 2.0;
  double c1 = 2.0;

  void validate() const;
};

double eval_taming(double r, const TamingSpec& spec);
double eval_taming_derivative(double r, const TamingSpec& spec);
double eval_taming_second_derivative(double r, const TamingSpec& spec);

/// Unchecked evaluation for inner loops (r >= 0 assumed).
inline double taming_value(double r, const TamingSpec& spec) {
  const double s = r - spec.N;
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return spec.c_taming * (s - 0.5);
  return spec.c_taming * s * s * s * (1.0 - 0.5 * s);
}

}  // namespace tmhd
