#ifndef DKP_PDELAB_HPP
#define DKP_PDELAB_HPP

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dkp/linalg.hpp"

namespace dkp {

// Desk-scale Dirichlet solver on the rectangle [0,1] x [0, T_s], uniform
// spacing delta in both axes. Distinct from the analysis ladder: this module
// is n = 2 only.
struct SolverGrid {
  double Ts = 1.0;
  double delta = 1.0 / 32;

  SolverGrid() = default;
  SolverGrid(double Ts_, double delta_);

  int nx() const { return nx_; }
  int nt() const { return nt_; }
  double x(int i) const { return i * delta; }
  double t(int j) const { return j * delta; }
  std::size_t node(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(i);
  }
  std::size_t node_count() const { return static_cast<std::size_t>(nx_) * static_cast<std::size_t>(nt_); }

private:
  int nx_ = 0, nt_ = 0;
};

using MatrixEval = std::function<MatN(double x, double t)>;
using ScalarEval = std::function<double(double, double)>;

// Boundary data on all four edges of the rectangle. bottom/top take x,
// left/right take t.
struct BoundaryData {
  ScalarEval bottom;  // g, the datum of interest
  ScalarEval top;
  ScalarEval left, right;

  static BoundaryData from_function(const ScalarEval& u);  // trace of a known u
  static BoundaryData bottom_only(const std::function<double(double)>& g);  // zero elsewhere
};

struct DirichletSolution {
  SolverGrid grid;
  std::vector<double> u;
  double rel_residual = 0;
  bool max_principle_ok = false;
  double boundary_min = 0, boundary_max = 0;
};

// Conservative flux-form 9-point discretization of -div(A grad u) = 0 with
// Dirichlet data on all four edges; direct banded solve. Refuses non-elliptic
// A; throws ResolutionError if the algebraic residual exceeds 1e-10 relative.
DirichletSolution solve_dirichlet(const MatrixEval& A, const BoundaryData& g, const SolverGrid& grid);

// Applies the same flux-form stencil to nodal values; interior residuals
// (zero-filled on the boundary ring).
std::vector<double> operator_residual(const MatrixEval& A, const SolverGrid& grid,
                                      std::span<const double> u);

// Point map on the rectangle (n = 2): used to form u o rho.
struct MapEval {
  std::function<std::pair<double, double>(double x, double t)> eval;
};

// u given either in closed form or as nodal values on a (possibly different)
// solver grid, read back by bilinear interpolation.
struct NodalU {
  SolverGrid grid;
  std::vector<double> u;
  double x0 = 0;  // left edge of the nodal rectangle (shear images may need x0 < 0)
};
using UAccess = std::variant<ScalarEval, NodalU>;

struct ConjugationCheck {
  std::vector<double> residual;  // interior nodes of `grid`
  double linf = 0;
  double l2 = 0;
  std::size_t outside_points = 0;  // nodal-u evaluations outside the solved region
};

// Forms v = u o rho and applies the flux-form operator of A (the conjugated
// coefficients) to it.
ConjugationCheck verify_conjugation(const MatrixEval& A, const MapEval& rho, const UAccess& u,
                                    const SolverGrid& grid);

struct OrderStudy {
  std::vector<double> deltas;
  std::vector<double> linf;
  double observed_order = 0;  // from the last pair; +inf when at floor
  bool at_floor = false;      // all residuals below 1e-11
};

OrderStudy conjugation_order(const MatrixEval& A, const MapEval& rho, const ScalarEval& u,
                             double Ts, std::span<const double> deltas);

// Non-tangential maximal function over cones |x - y| < K t truncated at T_s.
// A grid cell enters the cone when its center does; the cell value is the max
// of |u| over its corners. Returned per bottom-edge node.
std::vector<double> ntmax(const SolverGrid& grid, std::span<const double> u, double K);

// Averaged variant for gradients: at each cone cell-center (y,t), the rms of
// |grad u| over nodes with |z - y| <= t and s in [t/2, 2t] (band clamped to
// the rectangle); gradients by centered differences (one-sided at edges).
std::vector<double> ntmax_avg(const SolverGrid& grid, std::span<const double> u, double K);

double boundary_q_norm(std::span<const double> vals, double spacing, double q);

struct RegularityProbe {
  double ratio = 0;  // max over the family of ||N~(grad u_g)||_q / ||grad g||_q
  std::vector<double> per_datum;
  std::size_t skipped = 0;        // zero-gradient data
  bool max_principle_all = true;  // across the internal solves
};

RegularityProbe regularity_ratio(const MatrixEval& A, const std::vector<BoundaryData>& family,
                                 double q, double aperture, const SolverGrid& grid);

}  // namespace dkp

#endif
