#ifndef DKP_LINALG_HPP
#define DKP_LINALG_HPP

#include <array>
#include <cstddef>
#include <span>

namespace dkp {

// Dense matrices of order <= kMaxDim, stored row-major on the stack.
// Coefficient matrices here are tiny (the ambient dimension), so a fixed
// capacity avoids heap traffic in per-node loops.
inline constexpr int kMaxDim = 6;

struct MatN {
  int n = 0;
  std::array<double, kMaxDim * kMaxDim> a{};

  MatN() = default;
  explicit MatN(int dim) : n(dim) {}

  double& operator()(int r, int c) { return a[static_cast<std::size_t>(r) * n + c]; }
  double operator()(int r, int c) const { return a[static_cast<std::size_t>(r) * n + c]; }

  static MatN identity(int dim);
  static MatN zero(int dim) { return MatN(dim); }

  MatN transpose() const;
  double frobenius() const;
  double max_abs_entry() const;
};

MatN operator+(const MatN& x, const MatN& y);
MatN operator-(const MatN& x, const MatN& y);
MatN operator*(const MatN& x, const MatN& y);
MatN operator*(double s, const MatN& x);

// y = M x for x of length M.n.
void matvec(const MatN& m, std::span<const double> x, std::span<double> y);

double determinant(MatN m);        // LU with partial pivoting
MatN inverse(const MatN& m);       // Gauss-Jordan with partial pivoting; throws on singular
MatN symmetric_part(const MatN& m);

// Eigenvalue range of a symmetric matrix (cyclic Jacobi).
struct EigRange {
  double min = 0;
  double max = 0;
};
EigRange symmetric_eig_range(MatN m);

double spectral_norm(const MatN& m);  // largest singular value

}  // namespace dkp

#endif
