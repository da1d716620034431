#ifndef DKP_BANDLU_HPP
#define DKP_BANDLU_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace dkp {

// Banded LU with partial pivoting (LAPACK gbtrf-style storage). Row i of the
// matrix occupies band entries |i - j| <= kl (= ku); pivoting can push fill
// one band further, so storage holds 3*kl + 1 diagonals.
class BandLU {
public:
  BandLU(std::size_t n, std::size_t kl);

  void add(std::size_t i, std::size_t j, double v);
  double get(std::size_t i, std::size_t j) const;

  void factor();                     // throws std::runtime_error on singular
  void solve(std::span<double> rhs); // in place

private:
  double& at(std::size_t i, std::size_t j);
  std::size_t n_, kl_, rows_;
  std::vector<double> a_;       // column-major bands: a_[j * rows_ + (i - j + 2*kl)]
  std::vector<std::size_t> piv_;
  bool factored_ = false;
};

}  // namespace dkp

#endif
