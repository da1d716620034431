#ifndef DKP_TESTUTIL_HPP
#define DKP_TESTUTIL_HPP

#include <cmath>
#include <cstdint>

#include "dkp/field.hpp"

namespace dkp::test {

// fixed-seed generator for reproducible property tests
struct Rng {
  std::uint64_t s;
  explicit Rng(std::uint64_t seed = 0x9e3779b97f4a7c15ull) : s(seed) {}
  std::uint64_t next() {
    s ^= s << 13;
    s ^= s >> 7;
    s ^= s << 17;
    return s;
  }
  double uniform(double lo = 0.0, double hi = 1.0) {
    return lo + (hi - lo) * (static_cast<double>(next() >> 11) * 0x1.0p-53);
  }
  int integer(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
  }
};

inline Field random_scalar_field(GridPtr grid, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Field f = Field::scalar(grid, "random");
  for (std::size_t node = 0; node < grid->node_count(); ++node) f.at(node) = rng.uniform(lo, hi);
  return f;
}

inline Field constant_matrix_field(GridPtr grid, const MatN& m, std::string name = "const") {
  Field f = Field::matrix(grid, m.n, std::move(name));
  for (std::size_t node = 0; node < grid->node_count(); ++node) f.set_mat(node, m);
  return f;
}

inline MatN mat2(double a, double b, double c, double d) {
  MatN m(2);
  m(0, 0) = a;
  m(0, 1) = b;
  m(1, 0) = c;
  m(1, 1) = d;
  return m;
}

}  // namespace dkp::test

#endif
