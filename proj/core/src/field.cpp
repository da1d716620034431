#include "dkp/field.hpp"

#include <cmath>

#include "dkp/errors.hpp"
#include "dkp/parallel.hpp"

namespace dkp {

Field::Field(GridPtr grid, FieldKind kind, int rows, int cols, std::string name)
    : grid_(std::move(grid)),
      kind_(kind),
      rows_(rows),
      cols_(cols),
      comps_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)),
      name_(std::move(name)),
      values_(grid_->node_count() * comps_, 0.0) {}

Field Field::scalar(GridPtr grid, std::string name) {
  return Field(std::move(grid), FieldKind::Scalar, 1, 1, std::move(name));
}

Field Field::vector(GridPtr grid, int len, std::string name) {
  return Field(std::move(grid), FieldKind::Vector, len, 1, std::move(name));
}

Field Field::matrix(GridPtr grid, int order, std::string name) {
  return Field(std::move(grid), FieldKind::Matrix, order, order, std::move(name));
}

namespace {

template <typename F>
void for_each_node(const Grid& g, F&& body) {
  std::vector<double> y(static_cast<std::size_t>(g.tangential_axes()));
  std::vector<int> idx;
  for (int j = 0; j < g.levels(); ++j) {
    const double t = g.t_level(j);
    for (std::size_t x = 0; x < g.x_total(); ++x) {
      g.x_indices(x, idx);
      for (int a = 0; a < g.tangential_axes(); ++a)
        y[static_cast<std::size_t>(a)] = g.x_coord(idx[static_cast<std::size_t>(a)]);
      body(g.node(x, j), y, t);
    }
  }
}

}  // namespace

Field Field::sample_scalar(GridPtr grid, const std::function<double(std::span<const double>, double)>& f,
                           std::string name) {
  Field out = scalar(grid, std::move(name));
  for_each_node(*grid, [&](std::size_t node, std::span<const double> y, double t) {
    out.at(node) = f(y, t);
  });
  out.validate_finite();
  return out;
}

Field Field::sample_vector(GridPtr grid, int len,
                           const std::function<void(std::span<const double>, double, std::span<double>)>& f,
                           std::string name) {
  Field out = vector(grid, len, std::move(name));
  std::vector<double> buf(static_cast<std::size_t>(len));
  for_each_node(*grid, [&](std::size_t node, std::span<const double> y, double t) {
    f(y, t, buf);
    out.set_vec(node, buf);
  });
  out.validate_finite();
  return out;
}

Field Field::sample_matrix(GridPtr grid, int order,
                           const std::function<MatN(std::span<const double>, double)>& f,
                           std::string name) {
  Field out = matrix(grid, order, std::move(name));
  for_each_node(*grid, [&](std::size_t node, std::span<const double> y, double t) {
    out.set_mat(node, f(y, t));
  });
  out.validate_finite();
  return out;
}

MatN Field::mat_at(std::size_t node) const {
  MatN m(rows_);
  for (int r = 0; r < rows_; ++r)
    for (int c = 0; c < cols_; ++c) m(r, c) = at(node, r * cols_ + c);
  return m;
}

void Field::set_mat(std::size_t node, const MatN& m) {
  for (int r = 0; r < rows_; ++r)
    for (int c = 0; c < cols_; ++c) at(node, r * cols_ + c) = m(r, c);
}

void Field::vec_at(std::size_t node, std::span<double> out) const {
  for (int c = 0; c < comps(); ++c) out[static_cast<std::size_t>(c)] = at(node, c);
}

void Field::set_vec(std::size_t node, std::span<const double> v) {
  for (int c = 0; c < comps(); ++c) at(node, c) = v[static_cast<std::size_t>(c)];
}

double Field::magnitude_at(std::size_t node) const {
  double s = 0;
  const std::size_t base = node * comps_;
  for (std::size_t c = 0; c < comps_; ++c) s += values_[base + c] * values_[base + c];
  return std::sqrt(s);
}

void Field::validate_finite() const {
  for (double v : values_)
    if (!std::isfinite(v))
      throw ValidationError("field '" + name_ + "': non-finite value");
}

Field& Field::operator+=(const Field& other) {
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

Field& Field::operator-=(const Field& other) {
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

Field& Field::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double s, Field a) { return a *= s; }

Field t_gradient(const Field& f) {
  const Grid& g = f.grid();
  if (g.x_count() < 3 || g.levels() < 3)
    throw ResolutionError("insufficient resolution");

  const int nc = f.comps();
  const int n = g.n();
  Field out =
      Field::vector(f.grid_ptr(), nc * n, f.name().empty() ? std::string{} : "tgrad(" + f.name() + ")");

  const double inv_2dx = 1.0 / (2.0 * g.dx());
  const double inv_2dlog = 1.0 / (2.0 * g.dlog_t());
  const double inv_dlog = 1.0 / g.dlog_t();
  const int J = g.J();

  parallel_chunks(g.node_count(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t node = lo; node < hi; ++node) {
      const int j = g.node_level(node);
      const std::size_t x = g.node_xflat(node);
      const double t = g.t_level(j);
      for (int a = 0; a < n - 1; ++a) {
        const std::size_t xp = g.x_shift(x, a, +1);
        const std::size_t xm = g.x_shift(x, a, -1);
        const std::size_t np = g.node(xp, j), nm = g.node(xm, j);
        for (int c = 0; c < nc; ++c)
          out.at(node, c * n + a) = t * (f.at(np, c) - f.at(nm, c)) * inv_2dx;
      }
      // t d/dt = d/d(log t); ladder index increases as t decreases
      if (j == 0) {
        const std::size_t nd = g.node(x, 1);
        for (int c = 0; c < nc; ++c)
          out.at(node, c * n + (n - 1)) = (f.at(node, c) - f.at(nd, c)) * inv_dlog;
      } else if (j == J) {
        const std::size_t nu = g.node(x, J - 1);
        for (int c = 0; c < nc; ++c)
          out.at(node, c * n + (n - 1)) = (f.at(nu, c) - f.at(node, c)) * inv_dlog;
      } else {
        const std::size_t nu = g.node(x, j - 1), nd = g.node(x, j + 1);
        for (int c = 0; c < nc; ++c)
          out.at(node, c * n + (n - 1)) = (f.at(nu, c) - f.at(nd, c)) * inv_2dlog;
      }
    }
  });
  return out;
}

Field magnitude(const Field& f) {
  Field out = Field::scalar(f.grid_ptr(), f.name().empty() ? std::string{} : "|" + f.name() + "|");
  parallel_chunks(f.grid().node_count(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t node = lo; node < hi; ++node) out.at(node) = f.magnitude_at(node);
  });
  return out;
}

double sup_norm(const Field& f) {
  const std::size_t n = f.grid().node_count();
  if (n == 0) return 0.0;
  return parallel_argmax(n, [&](std::size_t node) { return f.magnitude_at(node); }).value;
}

Field BlockDecomposition::reassemble() const {
  const Grid& g = B1.grid();
  const int n = g.n();
  Field out = Field::matrix(B1.grid_ptr(), n);
  for (std::size_t node = 0; node < g.node_count(); ++node) {
    for (int r = 0; r < n - 1; ++r)
      for (int c = 0; c < n - 1; ++c) out.at(node, r * n + c) = B1.at(node, r * (n - 1) + c);
    for (int r = 0; r < n - 1; ++r) out.at(node, r * n + (n - 1)) = B2.at(node, r);
    for (int c = 0; c < n - 1; ++c) out.at(node, (n - 1) * n + c) = B3.at(node, c);
    out.at(node, n * n - 1) = b.at(node);
  }
  return out;
}

BlockDecomposition block_decompose(const Field& B) {
  const Grid& g = B.grid();
  const int n = g.n();
  if (B.kind() != FieldKind::Matrix || B.rows() != n)
    throw ValidationError("block_decompose: expected an n x n matrix field");

  BlockDecomposition d{Field::matrix(B.grid_ptr(), n - 1, B.name() + ".B1"),
                       Field::vector(B.grid_ptr(), n - 1, B.name() + ".B2"),
                       Field::vector(B.grid_ptr(), n - 1, B.name() + ".B3"),
                       Field::scalar(B.grid_ptr(), B.name() + ".b")};
  for (std::size_t node = 0; node < g.node_count(); ++node) {
    for (int r = 0; r < n - 1; ++r)
      for (int c = 0; c < n - 1; ++c) d.B1.at(node, r * (n - 1) + c) = B.at(node, r * n + c);
    for (int r = 0; r < n - 1; ++r) d.B2.at(node, r) = B.at(node, r * n + (n - 1));
    for (int c = 0; c < n - 1; ++c) d.B3.at(node, c) = B.at(node, (n - 1) * n + c);
    d.b.at(node) = B.at(node, n * n - 1);
  }
  return d;
}

EllipticityReport ellipticity_constants(const Field& A) {
  if (A.kind() != FieldKind::Matrix || A.rows() != A.cols())
    throw ValidationError("ellipticity_constants: expected a square matrix field");
  const std::size_t count = A.grid().node_count();

  std::vector<double> lam(count), Lam(count);
  parallel_chunks(count, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t node = lo; node < hi; ++node) {
      const MatN m = A.mat_at(node);
      lam[node] = symmetric_eig_range(symmetric_part(m)).min;
      Lam[node] = spectral_norm(m);
    }
  });
  EllipticityReport r{lam[0], Lam[0]};
  for (std::size_t i = 1; i < count; ++i) {
    r.lambda = std::min(r.lambda, lam[i]);
    r.Lambda = std::max(r.Lambda, Lam[i]);
  }
  if (!(r.lambda > 0)) throw PreconditionError("not uniformly elliptic");
  return r;
}

void FieldInterpolator::eval(std::span<const double> y, double t, std::span<double> out,
                             bool* clamped) const {
  const Field& f = *f_;
  const Grid& g = f.grid();
  const int axes = g.tangential_axes();
  const int nc = f.comps();

  // vertical position in ladder index space: t_j = T 2^{-j/m}
  double jr = g.m() * std::log2(g.T() / t);
  bool clip = false;
  if (jr < 0) {
    jr = 0;
    clip = true;
  }
  if (jr > g.J()) {
    jr = g.J();
    clip = true;
  }
  if (clamped) *clamped = clip;
  const int j0 = std::min(static_cast<int>(jr), g.J() == 0 ? 0 : g.J() - 1);
  const double wj = jr - j0;

  // tangential cell and weight per axis
  int base_idx[4] = {0, 0, 0, 0};
  double wx[4] = {0, 0, 0, 0};
  for (int a = 0; a < axes; ++a) {
    const double s = y[static_cast<std::size_t>(a)] * g.x_count();
    const double fl = std::floor(s);
    base_idx[a] = g.wrap(static_cast<int>(fl));
    wx[a] = s - fl;
  }

  for (int c = 0; c < nc; ++c) out[static_cast<std::size_t>(c)] = 0.0;

  const int corners = 1 << axes;
  std::vector<int> idx(static_cast<std::size_t>(axes));
  for (int corner = 0; corner < corners; ++corner) {
    double w = 1.0;
    for (int a = 0; a < axes; ++a) {
      const bool hi = corner & (1 << a);
      w *= hi ? wx[a] : 1.0 - wx[a];
      idx[static_cast<std::size_t>(a)] = hi ? g.wrap(base_idx[a] + 1) : base_idx[a];
    }
    if (w == 0.0) continue;
    const std::size_t x = g.x_flatten(idx);
    const std::size_t n0 = g.node(x, j0);
    const std::size_t n1 = g.node(x, std::min(j0 + 1, g.J()));
    for (int c = 0; c < nc; ++c)
      out[static_cast<std::size_t>(c)] += w * ((1.0 - wj) * f.at(n0, c) + wj * f.at(n1, c));
  }
}

double FieldInterpolator::eval_scalar(std::span<const double> y, double t, bool* clamped) const {
  double v;
  eval(y, t, std::span<double>(&v, 1), clamped);
  return v;
}

MatN FieldInterpolator::eval_matrix(std::span<const double> y, double t, bool* clamped) const {
  MatN m(f_->rows());
  std::vector<double> buf(static_cast<std::size_t>(f_->comps()));
  eval(y, t, buf, clamped);
  for (int r = 0; r < m.n; ++r)
    for (int c = 0; c < m.n; ++c) m(r, c) = buf[static_cast<std::size_t>(r * m.n + c)];
  return m;
}

Field pow_field(const Field& f, double exponent, std::string name) {
  Field out = Field::scalar(f.grid_ptr(), std::move(name));
  for (std::size_t node = 0; node < f.grid().node_count(); ++node) {
    const double v = f.at(node);
    if (!(v > 0)) throw PreconditionError("pow_field: base must be positive");
    out.at(node) = std::pow(v, exponent);
  }
  return out;
}

}  // namespace dkp
