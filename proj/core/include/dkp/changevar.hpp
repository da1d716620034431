#ifndef DKP_CHANGEVAR_HPP
#define DKP_CHANGEVAR_HPP

#include <memory>
#include <optional>
#include <string>

#include "dkp/carleson.hpp"
#include "dkp/field.hpp"

namespace dkp {

// Certificate of the graph map rho(y,t) = (y + t v(y,t), h(y,t) t).
//
// eps = ||t grad h||_inf + ||t grad v||_inf. When eps < eps0 the Neumann
// series of Jac_rho around its zeroth-order part J_rho = [[I,0],[v,h]]
// converges, and the per-node bounds below are verified numerically:
//   det(Jac) > 0,
//   |det(Jac) - h| <= h_min / 2,
//   |Jac^{-1} - J^{-1}|_F <= C0 (|t grad h| + |t grad v|).
struct MapCertificate {
  bool certified = false;
  double eps = 0;
  double eps0 = 0;
  double C0 = 0;
  double h_min = 0, h_max = 0;
  double v_sup = 0;
  double det_min = 0, det_max = 0;
  double jac_sup = 0;      // max ||Jac||_2 over nodes
  double jac_inv_sup = 0;  // max ||Jac^{-1}||_2 over nodes
  // min over nodes of det(Jac)/||Jac||^2: ellipticity transfer constant
  double ellipticity_factor = 0;
  std::string diagnostic;
};

// Default certification threshold. Derived from the Neumann-series bound
// ||J^{-1} (Jac - J)|| < 1/2: eps0* = h_min / (8 n (1 + h_max + ||v||_inf)).
double default_eps0(double h_min, double h_max, double v_sup, int n);

// C0 = 2 (sqrt(n-1) + (1 + ||v||_inf)/h_min)^2 from the same bound.
double neumann_c0(double h_min, double v_sup, int n);

struct MapPoint {
  std::vector<double> y;
  double t = 0;
  bool clamped = false;
};

class ChangeOfVariable {
public:
  // Builds and certifies the map. h must be positive everywhere (else
  // PreconditionError "not a graph map"). When eps >= eps0 the map is
  // returned uncertified with a diagnostic.
  static ChangeOfVariable build(Field v, Field h, std::optional<double> eps0 = std::nullopt);

  static ChangeOfVariable identity(GridPtr grid);

  const Field& v() const { return v_; }
  const Field& h() const { return h_; }
  const Field& tgrad_v() const { return tgrad_v_; }
  const Field& tgrad_h() const { return tgrad_h_; }
  const MapCertificate& certificate() const { return cert_; }
  const Grid& grid() const { return v_.grid(); }

  // node-level data
  MatN jacobian_at(std::size_t node) const;       // Jac_rho, rows = variables
  MatN zero_order_at(std::size_t node) const;     // J_rho = [[I,0],[v,h]]
  void image_at(std::size_t node, std::span<double> y_out, double& t_out) const;

  // evaluation at arbitrary points (fields interpolated, clamped in t)
  MapPoint eval(std::span<const double> y, double t) const;
  MatN jacobian(std::span<const double> y, double t) const;

private:
  ChangeOfVariable(Field v, Field h);

  Field v_, h_;
  Field tgrad_v_, tgrad_h_;
  MapCertificate cert_;
};

// Materialized per-node Jacobian data of a map.
struct JacobianPair {
  std::vector<MatN> jac;       // Jac_rho
  std::vector<MatN> zero;      // J_rho
  std::vector<double> det;     // det(Jac_rho)
  std::vector<MatN> jac_inv;
  std::vector<MatN> zero_inv;
};

JacobianPair jacobian_pair(const ChangeOfVariable& rho);

struct ConjugateStats {
  std::size_t clamped_nodes = 0;
  EllipticityReport output;
  double min_det = 0;
};

// A_rho = det(Jac) Jac^{-T} (A o rho) Jac^{-1} per node; A o rho by
// interpolation (periodic in x, clamped in t with per-node flagging).
// Refuses uncertified maps.
Field conjugate(const Field& A, const ChangeOfVariable& rho, ConjugateStats* stats = nullptr);

struct ResidualSplit {
  Field B_rho;  // h J^{-T} B J^{-1}, uncomposed coefficients; last row stored
                // in closed form (B3 - b h^{-1} v, b h^{-1})
  Field C_rho;  // conjugate(B + C, rho) - B_rho
  double last_row_dev = 0;         // max |closed form - matrix product|
  CarlesonReport cm_c;             // cmsup of C_rho
  CarlesonReport cm_majorant;      // cmsup of |B o rho - B| + |C o rho| + |t grad h| + |t grad v|
  double nodewise_ratio = 0;       // max |C_rho| / majorant where majorant > 1e-13
};

ResidualSplit residual_split(const Field& B, const Field& C, const ChangeOfVariable& rho);

// Ordered composition. Maps are stored in application order: stages[0] acts
// first, so conjugate(A, compose(r1, r2)) matches
// conjugate(conjugate(A, r1), r2), whose solutions are u o r1 o r2.
class CompositeMap {
public:
  CompositeMap() = default;
  explicit CompositeMap(std::vector<std::shared_ptr<const ChangeOfVariable>> stages_in_application_order)
      : stages_(std::move(stages_in_application_order)) {}

  void push_applied_first(std::shared_ptr<const ChangeOfVariable> stage);
  const std::vector<std::shared_ptr<const ChangeOfVariable>>& stages() const { return stages_; }
  bool empty() const { return stages_.empty(); }

  MapPoint eval(std::span<const double> y, double t) const;
  MatN jacobian(std::span<const double> y, double t) const;  // chain rule

  // scans grid nodes of the first stage's grid
  MapCertificate aggregate_certificate() const;

private:
  std::vector<std::shared_ptr<const ChangeOfVariable>> stages_;
};

// compose(r1, r2): r2 applied first, matching
// conjugate(A, compose(r1, r2)) == conjugate(conjugate(A, r1), r2).
CompositeMap compose(const ChangeOfVariable& r1, const ChangeOfVariable& r2);

// Collapses a composite onto one graph map by sampling its action on grid
// nodes: v(y,t) = (rho_y - y)/t, h(y,t) = rho_t/t. Lossy (stage-by-stage
// interpolation error is baked into the samples); the result is re-certified.
ChangeOfVariable resample(const CompositeMap& map, GridPtr grid);

// Drift rewrite of -div B grad: B~ = [[b^{-1} B1, b^{-1}(B2 + B3^T)], [0, 1]],
// T = [[0, B3^T], [-B3, 0]], D = div(T/b) - B^T grad b / b^2, so that
// -div B grad u = -b div(B~ grad u) + b D . grad u.
struct DriftTransform {
  Field B_tilde;  // unit last row
  Field T;        // antisymmetric
  Field D;        // drift vector, n components
};

DriftTransform kp_drift_transform(const Field& B);

}  // namespace dkp

#endif
