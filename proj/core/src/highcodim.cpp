#include <cmath>

#include "dkp/errors.hpp"
#include "dkp/pipeline.hpp"

namespace dkp {

namespace {

double dv_entry(const HighCodimMap& map, int var, int beta, int c) {
  if (map.dv.empty()) return 0.0;
  return map.dv[static_cast<std::size_t>(var)][static_cast<std::size_t>(beta)][static_cast<std::size_t>(c)];
}

double dh_entry(const HighCodimMap& map, int var) {
  if (map.dh.empty()) return 0.0;
  return map.dh[static_cast<std::size_t>(var)];
}

MatN highcodim_jacobian(const HighCodimMap& map, std::span<const double> t) {
  const int n = map.n, d = map.d, nd = n - d;
  MatN jac(n);
  // rows = differentiation variables (y then t), cols = image components
  for (int a = 0; a < d; ++a) {
    for (int c = 0; c < d; ++c) {
      double s = (a == c) ? 1.0 : 0.0;
      for (int beta = 0; beta < nd; ++beta) s += t[static_cast<std::size_t>(beta)] * dv_entry(map, a, beta, c);
      jac(a, c) = s;
    }
    for (int gamma = 0; gamma < nd; ++gamma)
      jac(a, d + gamma) = t[static_cast<std::size_t>(gamma)] * dh_entry(map, a);
  }
  for (int beta = 0; beta < nd; ++beta) {
    for (int c = 0; c < d; ++c) {
      double s = map.v[static_cast<std::size_t>(beta)][static_cast<std::size_t>(c)];
      for (int gamma = 0; gamma < nd; ++gamma)
        s += t[static_cast<std::size_t>(gamma)] * dv_entry(map, d + beta, gamma, c);
      jac(d + beta, c) = s;
    }
    for (int gamma = 0; gamma < nd; ++gamma)
      jac(d + beta, d + gamma) = (beta == gamma ? map.h : 0.0) +
                                 t[static_cast<std::size_t>(gamma)] * dh_entry(map, d + beta);
  }
  return jac;
}

void validate(const HighCodimMap& map) {
  if (map.n < 2 || map.d < 1 || map.d > map.n - 1)
    throw ValidationError("higher-codimension map: need 1 <= d <= n-1");
  if (!(map.h > 0)) throw PreconditionError("not a graph map");
  if (map.v.size() != static_cast<std::size_t>(map.n - map.d))
    throw ValidationError("higher-codimension map: v must be (n-d) x d");
}

}  // namespace

MatN highcodim_conjugate(const HighCodimMatrixEval& A, const HighCodimMap& map,
                         std::span<const double> y, std::span<const double> t) {
  validate(map);
  const int n = map.n, d = map.d, nd = n - d;

  std::vector<double> y_im(static_cast<std::size_t>(d));
  std::vector<double> t_im(static_cast<std::size_t>(nd));
  for (int c = 0; c < d; ++c) {
    double s = y[static_cast<std::size_t>(c)];
    for (int beta = 0; beta < nd; ++beta)
      s += t[static_cast<std::size_t>(beta)] * map.v[static_cast<std::size_t>(beta)][static_cast<std::size_t>(c)];
    y_im[static_cast<std::size_t>(c)] = s;
  }
  for (int beta = 0; beta < nd; ++beta) t_im[static_cast<std::size_t>(beta)] = map.h * t[static_cast<std::size_t>(beta)];

  const MatN jac = highcodim_jacobian(map, t);
  const double det = determinant(jac);
  if (!(det > 0)) throw PreconditionError("higher-codimension map: det(Jac) <= 0");
  const MatN jac_inv = inverse(jac);
  const MatN a_comp = A(y_im, t_im);
  const double weight = std::pow(map.h, static_cast<double>(d + 1 - n));
  return (weight * det) * (jac_inv.transpose() * a_comp * jac_inv);
}

MatN highcodim_block_form(const MatN& B, const HighCodimMap& map) {
  validate(map);
  const int n = map.n, d = map.d;
  MatN j0(n);
  for (int a = 0; a < d; ++a) j0(a, a) = 1.0;
  for (int beta = 0; beta < n - d; ++beta) {
    for (int c = 0; c < d; ++c) j0(d + beta, c) = map.v[static_cast<std::size_t>(beta)][static_cast<std::size_t>(c)];
    j0(d + beta, d + beta) = map.h;
  }
  const MatN j0_inv = inverse(j0);
  return map.h * (j0_inv.transpose() * B * j0_inv);
}

MatN highcodim_conjugate_matrix_dilation(const HighCodimMatrixEval& A, const HighCodimMap& map,
                                         const MatN& H, std::span<const double> y,
                                         std::span<const double> t) {
  const int nd = map.n - map.d;
  if (H.n != nd) throw ValidationError("dilation matrix must act on the normal coordinates");
  const double h = H(0, 0);
  for (int r = 0; r < nd; ++r)
    for (int c = 0; c < nd; ++c)
      if (H(r, c) != (r == c ? h : 0.0))
        throw PreconditionError(
            "matrix-valued dilation must be a scalar multiple of the identity");
  HighCodimMap scalar_map = map;
  scalar_map.h = h;
  return highcodim_conjugate(A, scalar_map, y, t);
}

}  // namespace dkp
