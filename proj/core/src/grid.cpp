#include "dkp/grid.hpp"

#include <cmath>

#include "dkp/errors.hpp"

namespace dkp {

Grid::Grid(int n, int x_count, double T, int m, int J)
    : n_(n), x_count_(x_count), T_(T), m_(m), J_(J) {
  if (n < 2) throw ValidationError("grid: ambient dimension n must be >= 2");
  if (n > 4) throw ValidationError("grid: ambient dimension n > 4 not supported");
  if (x_count < 4) throw ValidationError("grid: x_count must be >= 4");
  if (m < 1) throw ValidationError("grid: m must be >= 1");
  if (J < 0) throw ValidationError("grid: J must be >= 0");
  if (!(T > 0) || !std::isfinite(T)) throw ValidationError("grid: T must be positive");

  dx_ = 1.0 / x_count_;
  x_total_ = 1;
  for (int a = 0; a < n_ - 1; ++a) x_total_ *= static_cast<std::size_t>(x_count_);

  t_levels_.resize(static_cast<std::size_t>(J_ + 1));
  for (int j = 0; j <= J_; ++j)
    t_levels_[static_cast<std::size_t>(j)] = T_ * std::exp2(-static_cast<double>(j) / m_);
  if (!(t_levels_.back() > 0)) throw ValidationError("grid: t_min must be positive");
}

Grid Grid::from_t_min(int n, int x_count, double T, double t_min, int m) {
  if (!(t_min > 0) || !(t_min <= T))
    throw ValidationError("grid: t_min must satisfy 0 < t_min <= T");
  const int J = static_cast<int>(std::lround(m * std::log2(T / t_min)));
  return Grid(n, x_count, T, m, J);
}

void Grid::x_indices(std::size_t xflat, std::vector<int>& out) const {
  out.resize(static_cast<std::size_t>(n_ - 1));
  for (int a = n_ - 2; a >= 0; --a) {
    out[static_cast<std::size_t>(a)] = static_cast<int>(xflat % x_count_);
    xflat /= static_cast<std::size_t>(x_count_);
  }
}

std::size_t Grid::x_flatten(const std::vector<int>& idx) const {
  std::size_t f = 0;
  for (int a = 0; a < n_ - 1; ++a)
    f = f * static_cast<std::size_t>(x_count_) + static_cast<std::size_t>(wrap(idx[static_cast<std::size_t>(a)]));
  return f;
}

std::size_t Grid::x_shift(std::size_t xflat, int axis, int delta) const {
  // stride of `axis` in the row-major flat index
  std::size_t stride = 1;
  for (int a = n_ - 2; a > axis; --a) stride *= static_cast<std::size_t>(x_count_);
  const int i = static_cast<int>((xflat / stride) % static_cast<std::size_t>(x_count_));
  const int k = wrap(i + delta);
  return xflat + (static_cast<std::size_t>(k) - static_cast<std::size_t>(i)) * stride;
}

int Grid::first_level_below(double r) const {
  if (r >= T_) return 0;
  // t_j <= r  <=>  j >= m log2(T/r)
  const double jr = m_ * std::log2(T_ / r);
  int j = static_cast<int>(std::ceil(jr - 1e-9));
  if (j < 0) j = 0;
  return j;  // may equal levels() when r < t_min
}

bool Grid::same_layout(const Grid& other) const {
  return n_ == other.n_ && x_count_ == other.x_count_ && m_ == other.m_ && J_ == other.J_ &&
         T_ == other.T_;
}

GridPtr make_grid(int n, int x_count, double T, int m, int J) {
  return std::make_shared<const Grid>(n, x_count, T, m, J);
}

GridPtr make_grid_t_min(int n, int x_count, double T, double t_min, int m) {
  return std::make_shared<const Grid>(Grid::from_t_min(n, x_count, T, t_min, m));
}

}  // namespace dkp
