#include "bandlu.hpp"

#include <cmath>
#include <stdexcept>

namespace dkp {

BandLU::BandLU(std::size_t n, std::size_t kl)
    : n_(n), kl_(kl), rows_(3 * kl + 1), a_(n * (3 * kl + 1), 0.0), piv_(n, 0) {}

double& BandLU::at(std::size_t i, std::size_t j) {
  // stored when j - 2kl <= i <= j + kl
  return a_[j * rows_ + (i + 2 * kl_ - j)];
}

void BandLU::add(std::size_t i, std::size_t j, double v) { at(i, j) += v; }

double BandLU::get(std::size_t i, std::size_t j) const {
  if (j > i + 2 * kl_ || i > j + kl_) return 0.0;  // U-fill reaches j <= i + 2kl
  return a_[j * rows_ + (i + 2 * kl_ - j)];
}

void BandLU::factor() {
  for (std::size_t col = 0; col < n_; ++col) {
    const std::size_t last = std::min(n_ - 1, col + kl_);
    std::size_t piv = col;
    double best = std::fabs(at(col, col));
    for (std::size_t r = col + 1; r <= last; ++r) {
      const double v = std::fabs(at(r, col));
      if (v > best) {
        best = v;
        piv = r;
      }
    }
    if (best == 0.0) throw std::runtime_error("banded solve: singular matrix");
    piv_[col] = piv;
    const std::size_t row_end = std::min(n_ - 1, col + 2 * kl_);
    if (piv != col)
      for (std::size_t j = col; j <= row_end; ++j) {
        const double tmp = get(col, j);
        const double pv = get(piv, j);
        at(col, j) = pv;
        at(piv, j) = tmp;
      }
    const double d = 1.0 / at(col, col);
    for (std::size_t r = col + 1; r <= last; ++r) {
      const double f = at(r, col) * d;
      at(r, col) = f;
      if (f == 0.0) continue;
      for (std::size_t j = col + 1; j <= row_end; ++j) at(r, j) -= f * get(col, j);
    }
  }
  factored_ = true;
}

void BandLU::solve(std::span<double> rhs) {
  if (!factored_) factor();
  for (std::size_t col = 0; col < n_; ++col) {
    if (piv_[col] != col) std::swap(rhs[col], rhs[piv_[col]]);
    const std::size_t last = std::min(n_ - 1, col + kl_);
    const double x = rhs[col];
    for (std::size_t r = col + 1; r <= last; ++r) rhs[r] -= get(r, col) * x;
  }
  for (std::size_t col = n_; col-- > 0;) {
    const std::size_t row_end = std::min(n_ - 1, col + 2 * kl_);
    double s = rhs[col];
    for (std::size_t j = col + 1; j <= row_end; ++j) s -= get(col, j) * rhs[j];
    rhs[col] = s / get(col, col);
  }
}

}  // namespace dkp
