#ifndef DKP_FIELD_HPP
#define DKP_FIELD_HPP

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dkp/grid.hpp"
#include "dkp/linalg.hpp"

namespace dkp {

enum class FieldKind { Scalar, Vector, Matrix };

// Per-node ellipticity certificate of a matrix field:
//   lambda = min over nodes of the smallest eigenvalue of the symmetric part,
//   Lambda = max over nodes of the spectral norm.
struct EllipticityReport {
  double lambda = 0;
  double Lambda = 0;
  double constant() const { return std::max(1.0 / lambda, Lambda); }
};

// Sampled field on a Grid. Scalars hold one value per node, vectors `len`
// values, matrices rows*cols values (row-major). All values must be finite;
// construction rejects NaN/Inf.
class Field {
public:
  static Field scalar(GridPtr grid, std::string name = {});
  static Field vector(GridPtr grid, int len, std::string name = {});
  static Field matrix(GridPtr grid, int order, std::string name = {});

  // Analytic samplers. The callback receives tangential coordinates y
  // (length n-1) and the level value t.
  static Field sample_scalar(GridPtr grid, const std::function<double(std::span<const double>, double)>& f,
                             std::string name = {});
  static Field sample_vector(GridPtr grid, int len,
                             const std::function<void(std::span<const double>, double, std::span<double>)>& f,
                             std::string name = {});
  static Field sample_matrix(GridPtr grid, int order,
                             const std::function<MatN(std::span<const double>, double)>& f,
                             std::string name = {});

  const Grid& grid() const { return *grid_; }
  GridPtr grid_ptr() const { return grid_; }
  FieldKind kind() const { return kind_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int comps() const { return rows_ * cols_; }
  const std::string& name() const { return name_; }
  void set_name(std::string s) { name_ = std::move(s); }

  double& at(std::size_t node, int c = 0) { return values_[node * comps_ + static_cast<std::size_t>(c)]; }
  double at(std::size_t node, int c = 0) const { return values_[node * comps_ + static_cast<std::size_t>(c)]; }

  MatN mat_at(std::size_t node) const;
  void set_mat(std::size_t node, const MatN& m);
  void vec_at(std::size_t node, std::span<double> out) const;
  void set_vec(std::size_t node, std::span<const double> v);

  std::span<const double> raw() const { return values_; }
  std::span<double> raw() { return values_; }

  // Euclidean/Frobenius magnitude of the per-node component vector.
  double magnitude_at(std::size_t node) const;

  void validate_finite() const;  // throws ValidationError on NaN/Inf

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(double s);

private:
  Field(GridPtr grid, FieldKind kind, int rows, int cols, std::string name);

  GridPtr grid_;
  FieldKind kind_;
  int rows_, cols_;
  std::size_t comps_;
  std::string name_;
  std::vector<double> values_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double s, Field a);

// ---- fields module operations ----

// t-scaled gradient: output component (c*n + a) is t * d f_c / d x_a, with
// a = n-1 the vertical direction. Tangential derivatives are centered with
// periodic wrap; the vertical derivative is centered in log t (one-sided at
// the ladder ends), which equals t d/dt directly. Requires >= 3 nodes per
// axis.
Field t_gradient(const Field& f);

// Per-node Frobenius magnitude as a scalar field.
Field magnitude(const Field& f);

// max over nodes of the per-node magnitude
double sup_norm(const Field& f);

struct BlockDecomposition {
  Field B1;  // (n-1) x (n-1) matrix field
  Field B2;  // column vector, length n-1
  Field B3;  // row vector, length n-1
  Field b;   // scalar

  Field reassemble() const;  // bit-exact inverse of block_decompose
};

BlockDecomposition block_decompose(const Field& B);

// Throws PreconditionError("not uniformly elliptic") when lambda <= 0.
EllipticityReport ellipticity_constants(const Field& A);

// Multilinear interpolation in (x, log t): periodic tangentially, clamped to
// [t_min, T] vertically. `clamped` (optional) reports whether t was clamped.
class FieldInterpolator {
public:
  explicit FieldInterpolator(const Field& f) : f_(&f) {}

  void eval(std::span<const double> y, double t, std::span<double> out, bool* clamped = nullptr) const;
  double eval_scalar(std::span<const double> y, double t, bool* clamped = nullptr) const;
  MatN eval_matrix(std::span<const double> y, double t, bool* clamped = nullptr) const;

private:
  const Field* f_;
};

// Nodewise power of a positive scalar field.
Field pow_field(const Field& f, double exponent, std::string name = {});

}  // namespace dkp

#endif
