#ifndef DKP_MOLLIFY_HPP
#define DKP_MOLLIFY_HPP

#include "dkp/carleson.hpp"
#include "dkp/field.hpp"

namespace dkp {

// Smooth bump profile supported in the ball of radius 1/2:
//   theta(X) = exp(-1 / (1 - |2X|^2)) for |X| < 1/2, 0 otherwise,
// normalized discretely wherever it is sampled.
struct BumpKernel {
  double operator()(double norm_sq) const;  // unnormalized profile at |X|^2

  // Reference discretization on a symmetric lattice in [-1/2, 1/2]^dim with
  // (2*half+1) points per axis, weights normalized to unit mass. Used by the
  // kernel's own diagnostics (mass, first moment).
  struct Stencil {
    std::vector<std::vector<double>> points;  // lattice points X
    std::vector<double> weights;              // normalized
    double mass() const;                      // = 1 after normalization
    std::vector<double> first_moment() const;
  };
  Stencil reference_stencil(int dim, int half = 8) const;
};

BumpKernel make_bump();

// t-scaled average of A: for each node (y,t), a weighted average of A over
// grid nodes with |z-y| <= t/2 and s in [t/2, 3t/2], weights from the bump
// profile in scaled coordinates ((z-y)/t, (s-t)/t) and renormalized to unit
// mass. The vertical window rides the ladder (level offsets are uniform in
// log t) and clamps to [t_min, T] at the ends.
//
// Requires the grid to resolve the stencil: at least 2 nodes per half-width
// per axis at every level (t_min >= 4 dx, m >= 4); otherwise throws
// ResolutionError("kernel under-resolved").
Field mollify(const Field& A, const BumpKernel& k);

struct MollifyCertificate {
  EllipticityReport input;
  EllipticityReport output;
  double sup_tgrad = 0;            // ||t grad B~||_inf
  CarlesonReport cm_tgrad;         // cmsup of t grad B~
  CarlesonReport cm_residual;      // cmsup of A - B~
  double kernel_deriv_l1 = 0;      // C_theta: L1 bound of the derivative stencil
  bool ellipticity_preserved = false;  // lambda(B~) >= lambda(A) - 1e-10
};

MollifyCertificate mollify_certificate(const Field& A, const Field& Bt, const BumpKernel& k);

// Measured L1 norm of the discrete t-scaled derivative of the mollification
// stencil (max over directions and levels, combined over directions in
// Frobenius style). Bounds ||t grad mollify(A)||_inf by C_theta * ||A||_inf.
double kernel_derivative_l1(const BumpKernel& k, const Grid& g);

}  // namespace dkp

#endif
