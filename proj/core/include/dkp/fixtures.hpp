#ifndef DKP_FIXTURES_HPP
#define DKP_FIXTURES_HPP

#include <functional>
#include <string>
#include <vector>

#include "dkp/field.hpp"
#include "dkp/pdelab.hpp"

namespace dkp {

// Built-in analytic coefficient fields with known-by-construction properties.
// Closures take strip coordinates (y, t) and the grid top T; DKP-class
// fixtures use factors vanishing linearly in t near the boundary so truncated
// Carleson constants converge.
struct OperatorFixture {
  std::string name;
  std::string description;
  std::function<MatN(double y, double t, double T)> A;
  bool has_split = false;  // declared split A = B + C
  std::function<MatN(double, double, double)> B;
  std::function<MatN(double, double, double)> C;

  Field sample_A(GridPtr grid) const;
  Field sample_B(GridPtr grid) const;
  Field sample_C(GridPtr grid) const;
  // evaluator on the solver rectangle (clamped into the strip vertically)
  MatrixEval rectangle_eval(double T) const;
};

const OperatorFixture& operator_fixture(const std::string& name);  // unknown -> ValidationError
std::vector<std::string> operator_fixture_names();

// Scalar test fields for the estimator suites.
Field field_fixture(const std::string& name, GridPtr grid);
std::vector<std::string> field_fixture_names();

}  // namespace dkp

#endif
