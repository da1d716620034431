#include "dkp/fixtures.hpp"

#include <cmath>

#include "dkp/errors.hpp"

namespace dkp {

namespace {

constexpr double kTwoPi = 6.283185307179586;

double smooth_bump(double u) {  // supported in |u| < 1
  const double s = u * u;
  if (s >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - s));
}

// compact bump on the strip, centered at y = 1/2 and t = T/8 (two octaves
// wide in log t)
double strip_bump(double y, double t, double T) {
  const double dy = (y - 0.5) / 0.2;
  const double dt = (std::log2(t / T) + 3.0) / 2.0;
  return smooth_bump(dy) * smooth_bump(dt) / smooth_bump(0.0);
}

double diag_b_profile(double y, double t, double T) {
  return 2.0 + 0.5 * std::tanh(t / T) * std::cos(kTwoPi * y);
}

double dkp_b_profile(double y, double t, double T) {
  return 2.0 + 0.5 * std::sin(kTwoPi * y) * t / T;
}

MatN diag2(double a, double d) {
  MatN m(2);
  m(0, 0) = a;
  m(1, 1) = d;
  return m;
}

const std::vector<OperatorFixture>& registry() {
  static const std::vector<OperatorFixture> fixtures = [] {
    std::vector<OperatorFixture> v;

    OperatorFixture identity;
    identity.name = "identity";
    identity.description = "A = I; trivial pipeline, zero Carleson constants";
    identity.A = [](double, double, double) { return MatN::identity(2); };
    identity.has_split = true;
    identity.B = identity.A;
    identity.C = [](double, double, double) { return MatN(2); };
    v.push_back(identity);

    OperatorFixture diag14;
    diag14.name = "diag-14";
    diag14.description = "A = diag(1, 4) constant; closed-form stage matrices";
    diag14.A = [](double, double, double) { return diag2(1.0, 4.0); };
    diag14.has_split = true;
    diag14.B = diag14.A;
    diag14.C = [](double, double, double) { return MatN(2); };
    v.push_back(diag14);

    OperatorFixture diagb;
    diagb.name = "diag-b";
    diagb.description = "A = diag(1/b, b), b = 2 + 0.5 tanh(t/T) cos(2 pi y)";
    diagb.A = [](double y, double t, double T) {
      const double b = diag_b_profile(y, t, T);
      return diag2(1.0 / b, b);
    };
    diagb.has_split = true;
    diagb.B = diagb.A;
    diagb.C = [](double, double, double) { return MatN(2); };
    v.push_back(diagb);

    OperatorFixture dkp;
    dkp.name = "dkp-generic";
    dkp.description =
        "B with last row (0.3 t/T, 2 + 0.5 sin(2 pi y) t/T) plus a compact bump C";
    dkp.has_split = true;
    dkp.B = [](double y, double t, double T) {
      MatN m(2);
      m(0, 0) = 1.0;
      m(1, 0) = 0.3 * t / T;
      m(1, 1) = dkp_b_profile(y, t, T);
      return m;
    };
    dkp.C = [](double y, double t, double T) {
      MatN m(2);
      const double c = 0.2 * strip_bump(y, t, T);
      m(0, 0) = c;
      m(1, 1) = c;
      return m;
    };
    dkp.A = [B = dkp.B, C = dkp.C](double y, double t, double T) {
      return B(y, t, T) + C(y, t, T);
    };
    v.push_back(dkp);

    return v;
  }();
  return fixtures;
}

Field sample(const std::function<MatN(double, double, double)>& f, GridPtr grid,
             const std::string& name) {
  if (grid->n() != 2) throw ValidationError("fixture '" + name + "' is defined for n = 2");
  const double T = grid->T();
  return Field::sample_matrix(
      grid, 2, [&](std::span<const double> y, double t) { return f(y[0], t, T); }, name);
}

}  // namespace

Field OperatorFixture::sample_A(GridPtr grid) const { return sample(A, grid, name); }

Field OperatorFixture::sample_B(GridPtr grid) const {
  if (!has_split) throw ValidationError("fixture '" + name + "' has no declared split");
  return sample(B, grid, name + ".B");
}

Field OperatorFixture::sample_C(GridPtr grid) const {
  if (!has_split) throw ValidationError("fixture '" + name + "' has no declared split");
  return sample(C, grid, name + ".C");
}

MatrixEval OperatorFixture::rectangle_eval(double T) const {
  auto f = A;
  return [f, T](double x, double t) {
    const double tc = std::max(t, 1e-9 * T);
    return f(x, tc, T);
  };
}

const OperatorFixture& operator_fixture(const std::string& name) {
  for (const auto& f : registry())
    if (f.name == name) return f;
  throw ValidationError("unknown fixture '" + name + "'");
}

std::vector<std::string> operator_fixture_names() {
  std::vector<std::string> names;
  for (const auto& f : registry()) names.push_back(f.name);
  return names;
}

Field field_fixture(const std::string& name, GridPtr grid) {
  const double T = grid->T();
  auto scalar = [&](const std::function<double(double, double)>& f) {
    return Field::sample_scalar(
        grid, [&](std::span<const double> y, double t) { return f(y[0], t); }, name);
  };
  if (grid->n() != 2) throw ValidationError("field fixtures are defined for n = 2");

  if (name == "zero") return scalar([](double, double) { return 0.0; });
  if (name == "const-1") return scalar([](double, double) { return 1.0; });
  if (name == "linear-t") return scalar([&](double, double t) { return t / T; });
  if (name == "t-cos")
    return scalar([&](double y, double t) { return (t / T) * std::cos(kTwoPi * y); });
  if (name == "sin-x") return scalar([](double y, double) { return std::sin(kTwoPi * y); });
  if (name == "bump") return scalar([&](double y, double t) { return strip_bump(y, t, T); });
  if (name == "tanh-profile") return scalar([&](double, double t) { return std::tanh(t / T); });
  if (name == "t-sq") return scalar([&](double, double t) { return (t / T) * (t / T); });
  if (name == "diag-b-profile")
    return scalar([&](double y, double t) { return diag_b_profile(y, t, T) - 2.0; });
  if (name == "spike") {
    Field f = Field::scalar(grid, name);
    f.at(grid->node(grid->x_total() / 2, grid->levels() / 2)) = 1.0;
    return f;
  }
  if (name == "checker") {
    Field f = Field::scalar(grid, name);
    for (int j = 0; j < grid->levels(); ++j)
      for (std::size_t x = 0; x < grid->x_total(); ++x)
        f.at(grid->node(x, j)) = ((x + static_cast<std::size_t>(j)) % 2 == 0) ? 1.0 : -1.0;
    return f;
  }
  throw ValidationError("unknown field fixture '" + name + "'");
}

std::vector<std::string> field_fixture_names() {
  return {"zero",  "const-1", "linear-t",     "t-cos",   "sin-x",
          "bump",  "tanh-profile", "t-sq",    "diag-b-profile", "spike",
          "checker"};
}

}  // namespace dkp
