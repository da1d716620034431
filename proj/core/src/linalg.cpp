#include "dkp/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace dkp {

MatN MatN::identity(int dim) {
  MatN m(dim);
  for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
  return m;
}

MatN MatN::transpose() const {
  MatN r(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) r(j, i) = (*this)(i, j);
  return r;
}

double MatN::frobenius() const {
  double s = 0;
  for (int i = 0; i < n * n; ++i) s += a[i] * a[i];
  return std::sqrt(s);
}

double MatN::max_abs_entry() const {
  double s = 0;
  for (int i = 0; i < n * n; ++i) s = std::max(s, std::fabs(a[i]));
  return s;
}

MatN operator+(const MatN& x, const MatN& y) {
  MatN r(x.n);
  for (int i = 0; i < x.n * x.n; ++i) r.a[i] = x.a[i] + y.a[i];
  return r;
}

MatN operator-(const MatN& x, const MatN& y) {
  MatN r(x.n);
  for (int i = 0; i < x.n * x.n; ++i) r.a[i] = x.a[i] - y.a[i];
  return r;
}

MatN operator*(const MatN& x, const MatN& y) {
  MatN r(x.n);
  for (int i = 0; i < x.n; ++i)
    for (int k = 0; k < x.n; ++k) {
      const double xik = x(i, k);
      if (xik == 0.0) continue;
      for (int j = 0; j < x.n; ++j) r(i, j) += xik * y(k, j);
    }
  return r;
}

MatN operator*(double s, const MatN& x) {
  MatN r(x.n);
  for (int i = 0; i < x.n * x.n; ++i) r.a[i] = s * x.a[i];
  return r;
}

void matvec(const MatN& m, std::span<const double> x, std::span<double> y) {
  for (int i = 0; i < m.n; ++i) {
    double s = 0;
    for (int j = 0; j < m.n; ++j) s += m(i, j) * x[j];
    y[i] = s;
  }
}

double determinant(MatN m) {
  const int n = m.n;
  double det = 1.0;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::fabs(m(r, col)) > std::fabs(m(piv, col))) piv = r;
    if (m(piv, col) == 0.0) return 0.0;
    if (piv != col) {
      for (int c = 0; c < n; ++c) std::swap(m(piv, c), m(col, c));
      det = -det;
    }
    det *= m(col, col);
    const double inv = 1.0 / m(col, col);
    for (int r = col + 1; r < n; ++r) {
      const double f = m(r, col) * inv;
      if (f == 0.0) continue;
      for (int c = col; c < n; ++c) m(r, c) -= f * m(col, c);
    }
  }
  return det;
}

MatN inverse(const MatN& m) {
  const int n = m.n;
  MatN work = m;
  MatN inv = MatN::identity(n);
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::fabs(work(r, col)) > std::fabs(work(piv, col))) piv = r;
    if (work(piv, col) == 0.0) throw std::domain_error("singular matrix");
    if (piv != col)
      for (int c = 0; c < n; ++c) {
        std::swap(work(piv, c), work(col, c));
        std::swap(inv(piv, c), inv(col, c));
      }
    const double d = 1.0 / work(col, col);
    for (int c = 0; c < n; ++c) {
      work(col, c) *= d;
      inv(col, c) *= d;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = work(r, col);
      if (f == 0.0) continue;
      for (int c = 0; c < n; ++c) {
        work(r, c) -= f * work(col, c);
        inv(r, c) -= f * inv(col, c);
      }
    }
  }
  return inv;
}

MatN symmetric_part(const MatN& m) {
  MatN r(m.n);
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) r(i, j) = 0.5 * (m(i, j) + m(j, i));
  return r;
}

EigRange symmetric_eig_range(MatN m) {
  const int n = m.n;
  // Cyclic Jacobi sweeps; terminates quickly for the tiny orders used here.
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += m(p, q) * m(p, q);
    if (off < 1e-30) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (m(p, q) == 0.0) continue;
        const double theta = (m(q, q) - m(p, p)) / (2.0 * m(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double mkp = m(k, p), mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (int k = 0; k < n; ++k) {
          const double mpk = m(p, k), mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
      }
  }
  EigRange r{m(0, 0), m(0, 0)};
  for (int i = 1; i < n; ++i) {
    r.min = std::min(r.min, m(i, i));
    r.max = std::max(r.max, m(i, i));
  }
  return r;
}

double spectral_norm(const MatN& m) {
  const MatN mtm = m.transpose() * m;
  const double lam = symmetric_eig_range(mtm).max;
  return std::sqrt(std::max(0.0, lam));
}

}  // namespace dkp
