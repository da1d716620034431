#include "dkp/carleson.hpp"

#include <algorithm>
#include <cmath>

#include "dkp/errors.hpp"
#include "dkp/parallel.hpp"

namespace dkp {

namespace {

// Per-axis index window of nodes with torus distance <= radius from a
// coordinate center. Returns [lo, hi] in unwrapped index space (hi - lo + 1
// capped at x_count by the caller).
struct AxisWindow {
  int lo, hi;
};

AxisWindow axis_window(const Grid& g, double center, double radius) {
  const int lo = static_cast<int>(std::ceil((center - radius) * g.x_count() - 1e-9));
  const int hi = static_cast<int>(std::floor((center + radius) * g.x_count() + 1e-9));
  if (hi - lo + 1 >= g.x_count()) return {0, g.x_count() - 1};
  return {lo, hi};
}

// Vertical suffix sums of |f|^2 with per-level prefix tables along the last
// tangential axis: fast window sums for box scans.
class BoxSums {
public:
  explicit BoxSums(const Field& f) : g_(f.grid()) {
    const std::size_t xt = g_.x_total();
    const int levels = g_.levels();
    data_.assign(static_cast<std::size_t>(levels) * xt, 0.0);
    // suffix over levels
    for (int j = levels - 1; j >= 0; --j)
      for (std::size_t x = 0; x < xt; ++x) {
        const double m = f.magnitude_at(g_.node(x, j));
        data_[static_cast<std::size_t>(j) * xt + x] =
            m * m + (j + 1 < levels ? data_[static_cast<std::size_t>(j + 1) * xt + x] : 0.0);
      }
    // prefix along the innermost axis
    prefix_ = data_;
    const std::size_t rows = prefix_.size() / static_cast<std::size_t>(g_.x_count());
    for (std::size_t r = 0; r < rows; ++r) {
      double acc = 0;
      const std::size_t base = r * static_cast<std::size_t>(g_.x_count());
      for (int i = 0; i < g_.x_count(); ++i) {
        acc += data_[base + static_cast<std::size_t>(i)];
        prefix_[base + static_cast<std::size_t>(i)] = acc;
      }
    }
  }

  // Sum of |f|^2 over nodes z in the per-axis window around `center` with
  // radius `radius`, over levels j >= j_min.
  double window_sum(std::span<const double> center, double radius, int j_min) const {
    if (j_min >= g_.levels()) return 0.0;
    AxisWindow w[3];
    const int axes = g_.tangential_axes();
    for (int a = 0; a < axes; ++a) w[a] = axis_window(g_, center[static_cast<std::size_t>(a)], radius);
    const std::size_t level_base = static_cast<std::size_t>(j_min) * g_.x_total();
    if (axes == 1) return row_range(level_base / static_cast<std::size_t>(g_.x_count()), w[0]);
    double total = 0;
    if (axes == 2) {
      for (int i0 = w[0].lo; i0 <= w[0].hi; ++i0) {
        const std::size_t row =
            level_base / static_cast<std::size_t>(g_.x_count()) + static_cast<std::size_t>(g_.wrap(i0));
        total += row_range(row, w[1]);
      }
      return total;
    }
    for (int i0 = w[0].lo; i0 <= w[0].hi; ++i0)
      for (int i1 = w[1].lo; i1 <= w[1].hi; ++i1) {
        const std::size_t row = level_base / static_cast<std::size_t>(g_.x_count()) +
                                static_cast<std::size_t>(g_.wrap(i0)) * static_cast<std::size_t>(g_.x_count()) +
                                static_cast<std::size_t>(g_.wrap(i1));
        total += row_range(row, w[2]);
      }
    return total;
  }

private:
  // prefix row index = (level * x_total + outer indices) / x_count
  double row_range(std::size_t row, AxisWindow w) const {
    const std::size_t base = row * static_cast<std::size_t>(g_.x_count());
    if (w.lo == 0 && w.hi == g_.x_count() - 1) return prefix_[base + static_cast<std::size_t>(g_.x_count() - 1)];
    const int lo = g_.wrap(w.lo), hi = g_.wrap(w.hi);
    if (lo <= hi) {
      double s = prefix_[base + static_cast<std::size_t>(hi)];
      if (lo > 0) s -= prefix_[base + static_cast<std::size_t>(lo - 1)];
      return s;
    }
    // wrapped range [lo, end] + [0, hi]
    double s = prefix_[base + static_cast<std::size_t>(g_.x_count() - 1)] -
               prefix_[base + static_cast<std::size_t>(lo - 1)];
    s += prefix_[base + static_cast<std::size_t>(hi)];
    return s;
  }

  const Grid& g_;
  std::vector<double> data_;    // suffix sums over levels
  std::vector<double> prefix_;  // + prefix along innermost axis
};

struct Box {
  std::vector<double> center;
  double radius;      // integration radius
  double norm_radius; // normalization radius (differs for the dyadic family)
};

CarlesonReport scan(const Field& f, const std::vector<Box>& boxes, const char* family_name) {
  const Grid& g = f.grid();
  if (boxes.empty()) throw ResolutionError("no admissible boxes");
  double max_r = 0;
  for (const auto& b : boxes) max_r = std::max(max_r, b.radius);
  if (g.first_level_below(max_r) >= g.levels())
    throw ResolutionError("no admissible boxes");

  const BoxSums sums(f);
  const double w_level = std::log(2.0) / g.m();
  double cell = w_level;
  for (int a = 0; a < g.tangential_axes(); ++a) cell *= g.dx();

  std::vector<double> values(boxes.size());
  parallel_chunks(boxes.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const Box& b = boxes[i];
      const int j_min = g.first_level_below(b.radius);
      const double integral = cell * sums.window_sum(b.center, b.radius, j_min);
      values[i] = integral * std::pow(b.norm_radius, -(g.n() - 1));
    }
  });

  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;

  CarlesonReport rep;
  rep.constant = values[best];
  rep.argmax_center = boxes[best].center;
  rep.argmax_radius = boxes[best].radius;
  rep.t_min = g.t_min();
  rep.T = g.T();
  rep.family = family_name;

  // profile: max value per distinct radius, in increasing radius order
  std::vector<std::pair<double, double>> prof;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const double r = boxes[i].radius;
    auto it = std::find_if(prof.begin(), prof.end(), [&](const auto& p) { return p.first == r; });
    if (it == prof.end())
      prof.emplace_back(r, values[i]);
    else
      it->second = std::max(it->second, values[i]);
  }
  std::sort(prof.begin(), prof.end());
  rep.profile = std::move(prof);
  return rep;
}

std::vector<Box> dense_family(const Grid& g) {
  std::vector<Box> boxes;
  const int k_max = g.x_count() / 2;
  std::vector<int> idx;
  std::vector<double> center(static_cast<std::size_t>(g.tangential_axes()));
  for (int k = 1; k <= k_max; ++k) {
    const double r = k * g.dx();
    for (std::size_t x = 0; x < g.x_total(); ++x) {
      g.x_indices(x, idx);
      for (int a = 0; a < g.tangential_axes(); ++a)
        center[static_cast<std::size_t>(a)] = g.x_coord(idx[static_cast<std::size_t>(a)]);
      boxes.push_back(Box{center, r, r});
    }
  }
  return boxes;
}

// Dyadic family: cubes of sidelength l = 2^{-k} (2 dx <= l <= 1/2) evaluated
// as the covering ball of radius l around the cube center, normalized by
// (l/4)^{n-1}, plus whole-torus scales l = 2^e up to max(T, 1). The covering
// argument gives dense M <= dyadic M' <= 4^{n-1} dense M on grids with
// T <= 1/2 and power-of-two x_count.
std::vector<Box> dyadic_family(const Grid& g) {
  std::vector<Box> boxes;
  const int axes = g.tangential_axes();
  for (double l = 0.5; l >= 2.0 * g.dx() - 1e-12; l /= 2) {
    const int cubes = static_cast<int>(std::lround(1.0 / l));
    std::vector<int> a(static_cast<std::size_t>(axes), 0);
    for (;;) {
      std::vector<double> center(static_cast<std::size_t>(axes));
      for (int d = 0; d < axes; ++d) center[static_cast<std::size_t>(d)] = (a[static_cast<std::size_t>(d)] + 0.5) * l;
      boxes.push_back(Box{center, l, l / 4.0});
      int d = axes - 1;
      while (d >= 0 && ++a[static_cast<std::size_t>(d)] == cubes) {
        a[static_cast<std::size_t>(d)] = 0;
        --d;
      }
      if (d < 0) break;
    }
  }
  const int e_top = std::max(0, static_cast<int>(std::ceil(std::log2(std::max(g.T(), 1.0)) - 1e-9)));
  for (int e = 0; e <= e_top; ++e) {
    const double l = std::exp2(e);
    boxes.push_back(Box{std::vector<double>(static_cast<std::size_t>(axes), 0.5), l, l / 4.0});
  }
  return boxes;
}

}  // namespace

Field fsup_field(const Field& f) {
  const Grid& g = f.grid();
  const std::size_t xt = g.x_total();
  const int axes = g.tangential_axes();

  Field mag = magnitude(f);
  Field out = Field::scalar(f.grid_ptr(), f.name().empty() ? std::string{} : "sup(" + f.name() + ")");

  std::vector<double> band(xt), swap_buf(xt);
  for (int j = 0; j < g.levels(); ++j) {
    const double t = g.t_level(j);
    // levels whose band [t_k 2^{-1/2m}, t_k 2^{1/2m}] meets [t/2, 2t]
    int k_lo = static_cast<int>(std::ceil(g.m() * std::log2(g.T() / (2.0 * t)) - 0.5 - 1e-9));
    int k_hi = static_cast<int>(std::floor(g.m() * std::log2(2.0 * g.T() / t) + 0.5 + 1e-9));
    k_lo = std::max(k_lo, 0);
    k_hi = std::min(k_hi, g.J());

    for (std::size_t x = 0; x < xt; ++x) {
      double m = 0;
      for (int k = k_lo; k <= k_hi; ++k) m = std::max(m, mag.at(g.node(x, k)));
      band[x] = m;
    }

    // tangential window: cells within t + dx/2 per axis
    int k_f = static_cast<int>(std::floor(t * g.x_count() + 0.5 + 1e-9));
    if (2 * k_f + 1 >= g.x_count()) k_f = g.x_count() / 2;  // whole axis
    for (int a = 0; a < axes; ++a) {
      for (std::size_t x = 0; x < xt; ++x) {
        double m = band[x];
        for (int d = 1; d <= k_f; ++d) {
          m = std::max(m, band[g.x_shift(x, a, d)]);
          m = std::max(m, band[g.x_shift(x, a, -d)]);
        }
        swap_buf[x] = m;
      }
      std::swap(band, swap_buf);
    }

    for (std::size_t x = 0; x < xt; ++x) out.at(g.node(x, j)) = band[x];
  }
  return out;
}

CarlesonReport carleson_constant(const Field& f, BoxFamily family) {
  const Grid& g = f.grid();
  const auto boxes = family == BoxFamily::Dense ? dense_family(g) : dyadic_family(g);
  return scan(f, boxes, family == BoxFamily::Dense ? "dense" : "dyadic");
}

CarlesonReport cmsup_constant(const Field& f) {
  return carleson_constant(fsup_field(f), BoxFamily::Dyadic);
}

}  // namespace dkp
