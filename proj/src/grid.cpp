#include "tmhd/grid.hpp"

#include <cstdlib>
#include <map>
#include <memory>
#include <mutex>

namespace tmhd {

void GridSpec::validate() const {
  if (n < 8 || (n & (n - 1)) != 0) {
    throw Error("grid: n_per_axis must be a power of two >= 8, got " + std::to_string(n));
  }
  if (cutoff < 1 || cutoff > n / 3) {
    throw Error("grid: dealias cutoff must lie in [1, n/3], got " + std::to_string(cutoff) +
                " for n=" + std::to_string(n));
  }
}

std::string describe(const GridSpec& g) {
  return std::to_string(g.n) + "^3 (cutoff " + std::to_string(g.cutoff) + ")";
}

int ModeTable::max_abs(std::size_t m) const {
  const auto& w = k[m];
  return std::max({std::abs(w[0]), std::abs(w[1]), std::abs(w[2])});
}

namespace {

int axis_offset(int kj, int side) { return kj >= 0 ? kj : kj + side; }

std::unique_ptr<ModeTable> build_table(const GridSpec& g) {
  auto t = std::make_unique<ModeTable>();
  t->grid = g;
  const int side = g.side();
  const int c = g.cutoff;
  const std::size_t count = g.mode_count();
  t->k.resize(count);
  t->k_sq.resize(count);
  t->mirror.resize(count);
  std::size_t m = 0;
  for (int a1 = 0; a1 < side; ++a1) {
    for (int a2 = 0; a2 < side; ++a2) {
      for (int a3 = 0; a3 < side; ++a3, ++m) {
        const Wavevector w{a1 <= c ? a1 : a1 - side, a2 <= c ? a2 : a2 - side,
                           a3 <= c ? a3 : a3 - side};
        t->k[m] = w;
        t->k_sq[m] = static_cast<double>(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
      }
    }
  }
  for (std::size_t i = 0; i < count; ++i) {
    const auto& w = t->k[i];
    t->mirror[i] = mode_index(g, {-w[0], -w[1], -w[2]});
  }
  return t;
}

}  // namespace

const ModeTable& modes(const GridSpec& g) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<ModeTable>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{g.n, g.cutoff}];
  if (!slot) slot = build_table(g);
  return *slot;
}

bool in_cube(const GridSpec& g, const Wavevector& k) {
  for (int j = 0; j < 3; ++j) {
    if (std::abs(k[j]) > g.cutoff) return false;
  }
  return true;
}

std::size_t mode_index(const GridSpec& g, const Wavevector& k) {
  if (!in_cube(g, k)) throw Error("wavevector outside the retained cube");
  const auto side = static_cast<std::size_t>(g.side());
  return (static_cast<std::size_t>(axis_offset(k[0], g.side())) * side +
          static_cast<std::size_t>(axis_offset(k[1], g.side()))) *
             side +
         static_cast<std::size_t>(axis_offset(k[2], g.side()));
}

}  // namespace tmhd
