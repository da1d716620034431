#ifndef DKP_GRID_HPP
#define DKP_GRID_HPP

#include <cmath>
#include <cstddef>
#include <memory>
#include <vector>

namespace dkp {

// Tensor discretization of the strip [0,1)^{n-1} x [t_min, T].
//
// Tangential axes are uniform and periodic with x_count nodes each
// (spacing dx = 1/x_count). The vertical axis is a geometric ladder
// t_j = T * 2^{-j/m} for j = 0..J, so spacing is uniform in log t with
// step log(2)/m and t_min = T * 2^{-J/m}.
class Grid {
public:
  Grid(int n, int x_count, double T, int m, int J);

  // Derives J from t_min: smallest ladder reaching down to t_min.
  static Grid from_t_min(int n, int x_count, double T, double t_min, int m);

  int n() const { return n_; }
  int tangential_axes() const { return n_ - 1; }
  int x_count() const { return x_count_; }
  double dx() const { return dx_; }
  double T() const { return T_; }
  int m() const { return m_; }
  int levels() const { return J_ + 1; }
  int J() const { return J_; }
  double t_min() const { return t_levels_.back(); }
  double dlog_t() const { return std::log(2.0) / m_; }

  double t_level(int j) const { return t_levels_[static_cast<std::size_t>(j)]; }
  double x_coord(int i) const { return i * dx_; }

  std::size_t x_total() const { return x_total_; }
  std::size_t node_count() const { return x_total_ * static_cast<std::size_t>(J_ + 1); }

  std::size_t node(std::size_t xflat, int j) const {
    return static_cast<std::size_t>(j) * x_total_ + xflat;
  }
  int node_level(std::size_t node) const { return static_cast<int>(node / x_total_); }
  std::size_t node_xflat(std::size_t node) const { return node % x_total_; }

  // Row-major decomposition of a flat tangential index (axis 0 outermost).
  void x_indices(std::size_t xflat, std::vector<int>& out) const;
  std::size_t x_flatten(const std::vector<int>& idx) const;

  int wrap(int i) const {
    i %= x_count_;
    return i < 0 ? i + x_count_ : i;
  }

  // Index shift along one tangential axis with periodic wrap.
  std::size_t x_shift(std::size_t xflat, int axis, int delta) const;

  // Torus distance between node indices along one axis, in index units.
  int index_distance(int i, int k) const {
    int d = std::abs(i - k) % x_count_;
    return std::min(d, x_count_ - d);
  }

  // Smallest j with t_j <= r (levels+0 if none).
  int first_level_below(double r) const;

  bool same_layout(const Grid& other) const;

private:
  int n_;
  int x_count_;
  double T_;
  int m_;
  int J_;
  double dx_;
  std::size_t x_total_;
  std::vector<double> t_levels_;
};

using GridPtr = std::shared_ptr<const Grid>;

GridPtr make_grid(int n, int x_count, double T, int m, int J);
GridPtr make_grid_t_min(int n, int x_count, double T, double t_min, int m);

}  // namespace dkp

#endif
