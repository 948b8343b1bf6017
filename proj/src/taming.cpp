#include "tmhd/taming.hpp"

#include <cmath>
#include <string>

#include "tmhd/grid.hpp"

namespace tmhd {

void TamingSpec::validate() const {
  if (!(N > 0.0) || !std::isfinite(N)) throw Error("taming: N must be positive");
  if (!(c_taming > 0.0)) throw Error("taming: c_taming must be positive");
  if (!(c1 > 0.0)) throw Error("taming: c1 must be positive");
  // The blend's largest slope is c_taming, reached at r = N+1.
  if (c_taming > c1) {
    throw Error("taming: slope c_taming=" + std::to_string(c_taming) +
                " exceeds the derivative bound c1=" + std::to_string(c1));
  }
}

double eval_taming(double r, const TamingSpec& spec) {
  if (r < 0.0 || std::isnan(r)) throw Error("eval_taming: argument must be nonnegative");
  return taming_value(r, spec);
}

double eval_taming_derivative(double r, const TamingSpec& spec) {
  if (r < 0.0 || std::isnan(r)) throw Error("eval_taming_derivative: argument must be nonnegative");
  const double s = r - spec.N;
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return spec.c_taming;
  return spec.c_taming * s * s * (3.0 - 2.0 * s);
}

double eval_taming_second_derivative(double r, const TamingSpec& spec) {
  if (r < 0.0 || std::isnan(r)) throw Error("eval_taming_second_derivative: argument must be nonnegative");
  const double s = r - spec.N;
  if (s <= 0.0 || s >= 1.0) return 0.0;
  return spec.c_taming * 6.0 * s * (1.0 - s);
}

}  // namespace tmhd
