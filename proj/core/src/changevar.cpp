#include "dkp/changevar.hpp"

#include <cmath>

#include "dkp/errors.hpp"
#include "dkp/parallel.hpp"

namespace dkp {

double default_eps0(double h_min, double h_max, double v_sup, int n) {
  return h_min / (8.0 * n * (1.0 + h_max + v_sup));
}

double neumann_c0(double h_min, double v_sup, int n) {
  const double k1 = std::sqrt(static_cast<double>(n - 1)) + (1.0 + v_sup) / h_min;
  return 2.0 * k1 * k1;
}

ChangeOfVariable::ChangeOfVariable(Field v, Field h)
    : v_(std::move(v)),
      h_(std::move(h)),
      tgrad_v_(t_gradient(v_)),
      tgrad_h_(t_gradient(h_)) {}

ChangeOfVariable ChangeOfVariable::build(Field v, Field h, std::optional<double> eps0_opt) {
  const Grid& g = v.grid();
  const int n = g.n();
  if (v.comps() != n - 1) throw ValidationError("change of variable: v must have n-1 components");
  if (h.comps() != 1) throw ValidationError("change of variable: h must be scalar");

  double h_min = h.at(0), h_max = h.at(0);
  for (std::size_t node = 0; node < g.node_count(); ++node) {
    h_min = std::min(h_min, h.at(node));
    h_max = std::max(h_max, h.at(node));
  }
  if (!(h_min > 0)) throw PreconditionError("not a graph map");

  ChangeOfVariable rho(std::move(v), std::move(h));
  MapCertificate& c = rho.cert_;
  c.h_min = h_min;
  c.h_max = h_max;
  c.v_sup = sup_norm(rho.v_);
  c.eps = sup_norm(rho.tgrad_h_) + sup_norm(rho.tgrad_v_);
  c.eps0 = eps0_opt.value_or(default_eps0(h_min, h_max, c.v_sup, n));
  c.C0 = neumann_c0(h_min, c.v_sup, n);

  bool nodewise_ok = true;
  std::string nodewise_msg;
  double det_min = 0, det_max = 0, jac_sup = 0, jac_inv_sup = 0, ell = 0;
  bool first = true;
  for (std::size_t node = 0; node < g.node_count(); ++node) {
    const MatN jac = rho.jacobian_at(node);
    const double det = determinant(jac);
    const double hval = rho.h_.at(node);
    if (!(det > 0)) {
      nodewise_ok = false;
      nodewise_msg = "det(Jac) <= 0";
      break;
    }
    const MatN jac_inv = inverse(jac);
    const MatN j0_inv = inverse(rho.zero_order_at(node));
    const double grad_mag = rho.tgrad_h_.magnitude_at(node) + rho.tgrad_v_.magnitude_at(node);
    if (std::fabs(det - hval) > 0.5 * h_min + 1e-14) {
      nodewise_ok = false;
      nodewise_msg = "|det(Jac) - h| exceeds h_min/2";
      break;
    }
    if ((jac_inv - j0_inv).frobenius() > c.C0 * grad_mag + 1e-12) {
      nodewise_ok = false;
      nodewise_msg = "inverse deviation exceeds C0 (|t grad h| + |t grad v|)";
      break;
    }
    const double jn = spectral_norm(jac);
    const double jin = spectral_norm(jac_inv);
    const double e = det / (jn * jn);
    if (first) {
      det_min = det_max = det;
      jac_sup = jn;
      jac_inv_sup = jin;
      ell = e;
      first = false;
    } else {
      det_min = std::min(det_min, det);
      det_max = std::max(det_max, det);
      jac_sup = std::max(jac_sup, jn);
      jac_inv_sup = std::max(jac_inv_sup, jin);
      ell = std::min(ell, e);
    }
  }
  c.det_min = det_min;
  c.det_max = det_max;
  c.jac_sup = jac_sup;
  c.jac_inv_sup = jac_inv_sup;
  c.ellipticity_factor = ell;

  if (c.eps >= c.eps0) {
    c.certified = false;
    c.diagnostic = "eps >= eps0";
  } else if (!nodewise_ok) {
    c.certified = false;
    c.diagnostic = nodewise_msg;
  } else {
    c.certified = true;
  }
  return rho;
}

ChangeOfVariable ChangeOfVariable::identity(GridPtr grid) {
  const int n = grid->n();
  Field v = Field::vector(grid, n - 1, "v");
  Field h = Field::scalar(grid, "h");
  for (std::size_t node = 0; node < grid->node_count(); ++node) h.at(node) = 1.0;
  return build(std::move(v), std::move(h));
}

MatN ChangeOfVariable::jacobian_at(std::size_t node) const {
  const int n = grid().n();
  MatN jac(n);
  for (int a = 0; a < n - 1; ++a) {
    for (int cc = 0; cc < n - 1; ++cc)
      jac(a, cc) = (a == cc ? 1.0 : 0.0) + tgrad_v_.at(node, cc * n + a);
    jac(a, n - 1) = tgrad_h_.at(node, a);
  }
  for (int cc = 0; cc < n - 1; ++cc)
    jac(n - 1, cc) = v_.at(node, cc) + tgrad_v_.at(node, cc * n + (n - 1));
  jac(n - 1, n - 1) = h_.at(node) + tgrad_h_.at(node, n - 1);
  return jac;
}

MatN ChangeOfVariable::zero_order_at(std::size_t node) const {
  const int n = grid().n();
  MatN j(n);
  for (int a = 0; a < n - 1; ++a) j(a, a) = 1.0;
  for (int cc = 0; cc < n - 1; ++cc) j(n - 1, cc) = v_.at(node, cc);
  j(n - 1, n - 1) = h_.at(node);
  return j;
}

void ChangeOfVariable::image_at(std::size_t node, std::span<double> y_out, double& t_out) const {
  const Grid& g = grid();
  const int j = g.node_level(node);
  const double t = g.t_level(j);
  std::vector<int> idx;
  g.x_indices(g.node_xflat(node), idx);
  for (int a = 0; a < g.n() - 1; ++a)
    y_out[static_cast<std::size_t>(a)] = g.x_coord(idx[static_cast<std::size_t>(a)]) + t * v_.at(node, a);
  t_out = h_.at(node) * t;
}

MapPoint ChangeOfVariable::eval(std::span<const double> y, double t) const {
  const int n = grid().n();
  MapPoint p;
  p.y.resize(static_cast<std::size_t>(n - 1));
  bool cl_v = false, cl_h = false;
  std::vector<double> vv(static_cast<std::size_t>(n - 1));
  FieldInterpolator(v_).eval(y, t, vv, &cl_v);
  const double hh = FieldInterpolator(h_).eval_scalar(y, t, &cl_h);
  for (int a = 0; a < n - 1; ++a) p.y[static_cast<std::size_t>(a)] = y[static_cast<std::size_t>(a)] + t * vv[static_cast<std::size_t>(a)];
  p.t = hh * t;
  p.clamped = cl_v || cl_h;
  return p;
}

MatN ChangeOfVariable::jacobian(std::span<const double> y, double t) const {
  const int n = grid().n();
  std::vector<double> vv(static_cast<std::size_t>(n - 1));
  std::vector<double> tgv(static_cast<std::size_t>((n - 1) * n));
  std::vector<double> tgh(static_cast<std::size_t>(n));
  FieldInterpolator(v_).eval(y, t, vv);
  FieldInterpolator(tgrad_v_).eval(y, t, tgv);
  FieldInterpolator(tgrad_h_).eval(y, t, tgh);
  const double hh = FieldInterpolator(h_).eval_scalar(y, t);
  MatN jac(n);
  for (int a = 0; a < n - 1; ++a) {
    for (int cc = 0; cc < n - 1; ++cc)
      jac(a, cc) = (a == cc ? 1.0 : 0.0) + tgv[static_cast<std::size_t>(cc * n + a)];
    jac(a, n - 1) = tgh[static_cast<std::size_t>(a)];
  }
  for (int cc = 0; cc < n - 1; ++cc)
    jac(n - 1, cc) = vv[static_cast<std::size_t>(cc)] + tgv[static_cast<std::size_t>(cc * n + (n - 1))];
  jac(n - 1, n - 1) = hh + tgh[static_cast<std::size_t>(n - 1)];
  return jac;
}

JacobianPair jacobian_pair(const ChangeOfVariable& rho) {
  const std::size_t count = rho.grid().node_count();
  JacobianPair p;
  p.jac.resize(count);
  p.zero.resize(count);
  p.det.resize(count);
  p.jac_inv.resize(count);
  p.zero_inv.resize(count);
  parallel_chunks(count, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t node = lo; node < hi; ++node) {
      p.jac[node] = rho.jacobian_at(node);
      p.zero[node] = rho.zero_order_at(node);
      p.det[node] = determinant(p.jac[node]);
      p.jac_inv[node] = inverse(p.jac[node]);
      p.zero_inv[node] = inverse(p.zero[node]);
    }
  });
  return p;
}

Field conjugate(const Field& A, const ChangeOfVariable& rho, ConjugateStats* stats) {
  if (!rho.certificate().certified)
    throw PreconditionError("uncertified change of variable: " + rho.certificate().diagnostic);
  const Grid& g = A.grid();
  const int n = g.n();
  Field out = Field::matrix(A.grid_ptr(), n, A.name().empty() ? std::string{} : A.name() + "_rho");
  const FieldInterpolator interp(A);

  std::vector<unsigned char> clamp_flags(g.node_count(), 0);
  std::vector<double> dets(g.node_count(), 0.0);

  parallel_chunks(g.node_count(), [&](std::size_t lo, std::size_t hi) {
    std::vector<double> y(static_cast<std::size_t>(n - 1));
    for (std::size_t node = lo; node < hi; ++node) {
      const MatN jac = rho.jacobian_at(node);
      const double det = determinant(jac);
      const MatN jac_inv = inverse(jac);
      double t_im;
      rho.image_at(node, y, t_im);
      bool clamped = false;
      const MatN a_comp = interp.eval_matrix(y, t_im, &clamped);
      clamp_flags[node] = clamped ? 1 : 0;
      dets[node] = det;
      out.set_mat(node, det * (jac_inv.transpose() * a_comp * jac_inv));
    }
  });

  if (stats) {
    stats->clamped_nodes = 0;
    for (unsigned char f : clamp_flags) stats->clamped_nodes += f;
    stats->min_det = dets[0];
    for (double d : dets) stats->min_det = std::min(stats->min_det, d);
    stats->output = ellipticity_constants(out);
  }
  return out;
}

ResidualSplit residual_split(const Field& B, const Field& C, const ChangeOfVariable& rho) {
  if (!rho.certificate().certified)
    throw PreconditionError("uncertified change of variable: " + rho.certificate().diagnostic);
  const Grid& g = B.grid();
  const int n = g.n();

  const Field A = B + C;
  Field A_rho = conjugate(A, rho);

  Field B_rho = Field::matrix(B.grid_ptr(), n, B.name().empty() ? std::string{} : B.name() + "_rho");
  double last_row_dev = 0;

  for (std::size_t node = 0; node < g.node_count(); ++node) {
    const double hval = rho.h().at(node);
    const MatN j0 = rho.zero_order_at(node);
    const MatN j0_inv = inverse(j0);
    const MatN prod = hval * (j0_inv.transpose() * B.mat_at(node) * j0_inv);

    MatN out = prod;
    // closed-form last row: (B3 - (b/h) v, b/h)
    const double s = B.at(node, n * n - 1) / hval;
    for (int cc = 0; cc < n - 1; ++cc) {
      const double closed = B.at(node, (n - 1) * n + cc) - s * rho.v().at(node, cc);
      last_row_dev = std::max(last_row_dev, std::fabs(closed - prod(n - 1, cc)));
      out(n - 1, cc) = closed;
    }
    last_row_dev = std::max(last_row_dev, std::fabs(s - prod(n - 1, n - 1)));
    out(n - 1, n - 1) = s;
    B_rho.set_mat(node, out);
  }

  Field C_rho = A_rho - B_rho;
  C_rho.set_name("C_rho");

  // majorant: |B o rho - B| + |C o rho| + |t grad h| + |t grad v|
  Field majorant = Field::scalar(B.grid_ptr(), "majorant");
  const FieldInterpolator interp_b(B), interp_c(C);
  std::vector<double> y(static_cast<std::size_t>(n - 1));
  double ratio = 0;
  for (std::size_t node = 0; node < g.node_count(); ++node) {
    double t_im;
    rho.image_at(node, y, t_im);
    const MatN b_comp = interp_b.eval_matrix(y, t_im);
    const MatN c_comp = interp_c.eval_matrix(y, t_im);
    const double mj = (b_comp - B.mat_at(node)).frobenius() + c_comp.frobenius() +
                      rho.tgrad_h().magnitude_at(node) + rho.tgrad_v().magnitude_at(node);
    majorant.at(node) = mj;
    if (mj > 1e-13) ratio = std::max(ratio, C_rho.magnitude_at(node) / mj);
  }

  CarlesonReport cm_c = cmsup_constant(C_rho);
  CarlesonReport cm_majorant = cmsup_constant(majorant);
  return ResidualSplit{std::move(B_rho), std::move(C_rho), last_row_dev,
                       std::move(cm_c), std::move(cm_majorant), ratio};
}

void CompositeMap::push_applied_first(std::shared_ptr<const ChangeOfVariable> stage) {
  stages_.insert(stages_.begin(), std::move(stage));
}

MapPoint CompositeMap::eval(std::span<const double> y, double t) const {
  MapPoint p;
  p.y.assign(y.begin(), y.end());
  p.t = t;
  for (const auto& s : stages_) {
    MapPoint q = s->eval(p.y, p.t);
    q.clamped = q.clamped || p.clamped;
    p = std::move(q);
  }
  return p;
}

MatN CompositeMap::jacobian(std::span<const double> y, double t) const {
  std::vector<double> cy(y.begin(), y.end());
  double ct = t;
  MatN total;
  bool first = true;
  for (const auto& s : stages_) {
    const MatN j = s->jacobian(cy, ct);
    total = first ? j : total * j;
    first = false;
    const MapPoint p = s->eval(cy, ct);
    cy = p.y;
    ct = p.t;
  }
  if (first) {
    const int n = stages_.empty() ? 2 : stages_[0]->grid().n();
    total = MatN::identity(n);
  }
  return total;
}

MapCertificate CompositeMap::aggregate_certificate() const {
  MapCertificate c;
  if (stages_.empty()) {
    c.certified = true;
    return c;
  }
  c.certified = true;
  for (const auto& s : stages_) {
    c.certified = c.certified && s->certificate().certified;
    c.eps += s->certificate().eps;
    c.C0 = std::max(c.C0, s->certificate().C0);
  }
  const Grid& g = stages_[0]->grid();
  const int n = g.n();
  bool first = true;
  std::vector<int> idx;
  std::vector<double> y(static_cast<std::size_t>(n - 1));
  for (int j = 0; j < g.levels(); ++j)
    for (std::size_t x = 0; x < g.x_total(); ++x) {
      g.x_indices(x, idx);
      for (int a = 0; a < n - 1; ++a) y[static_cast<std::size_t>(a)] = g.x_coord(idx[static_cast<std::size_t>(a)]);
      const MatN jac = jacobian(y, g.t_level(j));
      const double det = determinant(jac);
      const double jn = spectral_norm(jac);
      const double jin = spectral_norm(inverse(jac));
      const double e = det / (jn * jn);
      if (first) {
        c.det_min = c.det_max = det;
        c.jac_sup = jn;
        c.jac_inv_sup = jin;
        c.ellipticity_factor = e;
        first = false;
      } else {
        c.det_min = std::min(c.det_min, det);
        c.det_max = std::max(c.det_max, det);
        c.jac_sup = std::max(c.jac_sup, jn);
        c.jac_inv_sup = std::max(c.jac_inv_sup, jin);
        c.ellipticity_factor = std::min(c.ellipticity_factor, e);
      }
    }
  return c;
}

CompositeMap compose(const ChangeOfVariable& r1, const ChangeOfVariable& r2) {
  std::vector<std::shared_ptr<const ChangeOfVariable>> stages;
  stages.push_back(std::make_shared<ChangeOfVariable>(r2));
  stages.push_back(std::make_shared<ChangeOfVariable>(r1));
  return CompositeMap(std::move(stages));
}

ChangeOfVariable resample(const CompositeMap& map, GridPtr grid) {
  const int n = grid->n();
  Field v = Field::vector(grid, n - 1, "v_resampled");
  Field h = Field::scalar(grid, "h_resampled");
  std::vector<int> idx;
  std::vector<double> y(static_cast<std::size_t>(n - 1));
  for (int j = 0; j < grid->levels(); ++j) {
    const double t = grid->t_level(j);
    for (std::size_t x = 0; x < grid->x_total(); ++x) {
      grid->x_indices(x, idx);
      for (int a = 0; a < n - 1; ++a) y[static_cast<std::size_t>(a)] = grid->x_coord(idx[static_cast<std::size_t>(a)]);
      const MapPoint p = map.eval(y, t);
      const std::size_t node = grid->node(x, j);
      for (int a = 0; a < n - 1; ++a)
        v.at(node, a) = (p.y[static_cast<std::size_t>(a)] - y[static_cast<std::size_t>(a)]) / t;
      h.at(node) = p.t / t;
    }
  }
  return ChangeOfVariable::build(std::move(v), std::move(h));
}

DriftTransform kp_drift_transform(const Field& B) {
  const Grid& g = B.grid();
  const int n = g.n();
  const BlockDecomposition blocks = block_decompose(B);

  double b_min = blocks.b.at(0);
  for (std::size_t node = 0; node < g.node_count(); ++node) b_min = std::min(b_min, blocks.b.at(node));
  if (!(b_min > 0)) throw PreconditionError("degenerate lower-right entry");

  Field B_tilde = Field::matrix(B.grid_ptr(), n, "B_tilde");
  Field T = Field::matrix(B.grid_ptr(), n, "T");
  for (std::size_t node = 0; node < g.node_count(); ++node) {
    const double binv = 1.0 / blocks.b.at(node);
    for (int r = 0; r < n - 1; ++r) {
      for (int cc = 0; cc < n - 1; ++cc)
        B_tilde.at(node, r * n + cc) = binv * blocks.B1.at(node, r * (n - 1) + cc);
      B_tilde.at(node, r * n + (n - 1)) =
          binv * (blocks.B2.at(node, r) + blocks.B3.at(node, r));
      T.at(node, r * n + (n - 1)) = blocks.B3.at(node, r);
      T.at(node, (n - 1) * n + r) = -blocks.B3.at(node, r);
    }
    B_tilde.at(node, n * n - 1) = 1.0;
  }

  // D = div(T / b) - B^T grad b / b^2 (divergence per column, raw gradients)
  Field G = Field::matrix(B.grid_ptr(), n, "T_over_b");
  for (std::size_t node = 0; node < g.node_count(); ++node) {
    const double binv = 1.0 / blocks.b.at(node);
    for (int c = 0; c < n * n; ++c) G.at(node, c) = binv * T.at(node, c);
  }
  const Field tgG = t_gradient(G);
  const Field tgb = t_gradient(blocks.b);

  Field D = Field::vector(B.grid_ptr(), n, "D");
  for (std::size_t node = 0; node < g.node_count(); ++node) {
    const int j = g.node_level(node);
    const double inv_t = 1.0 / g.t_level(j);
    const double b = blocks.b.at(node);
    for (int col = 0; col < n; ++col) {
      double div = 0;
      for (int i = 0; i < n; ++i) div += tgG.at(node, (i * n + col) * n + i) * inv_t;
      double btg = 0;
      for (int i = 0; i < n; ++i) btg += B.at(node, i * n + col) * tgb.at(node, i) * inv_t;
      D.at(node, col) = div - btg / (b * b);
    }
  }
  return DriftTransform{std::move(B_tilde), std::move(T), std::move(D)};
}

}  // namespace dkp
