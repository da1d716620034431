#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dkp/errors.hpp"
#include "dkp/mollify.hpp"
#include "testutil.hpp"

using namespace dkp;
using namespace dkp::test;

namespace {

// ladder bottom pinned at t_min = 4 dx so the stencil is resolved everywhere
GridPtr mollify_grid(int x_count = 32, int m = 4) {
  const int octaves = static_cast<int>(std::lround(std::log2(2.0 * x_count / 4.0)));
  return make_grid(2, x_count, 2.0, m, octaves * m);
}

}  // namespace

TEST_CASE("bump kernel: shape") {
  const BumpKernel k = make_bump();
  CHECK(k(0.0) > 0);
  CHECK(k(0.24) > 0);
  CHECK(k(0.25) == 0.0);
  CHECK(k(0.5) == 0.0);
}

TEST_CASE("bump kernel: reference stencil mass and first moment") {
  const BumpKernel k = make_bump();
  for (int dim : {2, 3}) {
    const BumpKernel::Stencil st = k.reference_stencil(dim);
    CHECK(std::fabs(st.mass() - 1.0) <= 1e-12);
    for (double m : st.first_moment()) CHECK(std::fabs(m) <= 1e-12);
    // support inside the ball of radius 1/2
    for (const auto& p : st.points) {
      double nsq = 0;
      for (double c : p) nsq += c * c;
      CHECK(nsq < 0.25);
    }
  }
}

TEST_CASE("mollify: averages of constant matrices are exact") {
  GridPtr g = mollify_grid();
  const BumpKernel k = make_bump();
  {
    Field A = constant_matrix_field(g, MatN::identity(2));
    const Field B = mollify(A, k);
    for (std::size_t node = 0; node < g->node_count(); ++node) {
      CHECK(B.at(node, 0) == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(B.at(node, 1) == doctest::Approx(0.0));
      CHECK(B.at(node, 3) == doctest::Approx(1.0).epsilon(1e-14));
    }
  }
  {
    Field A = constant_matrix_field(g, mat2(2.5, -0.3, 0.7, 4.0));
    const Field B = mollify(A, k);
    for (int c = 0; c < 4; ++c)
      CHECK(B.at(g->node(7, 5), c) == doctest::Approx(A.at(0, c)).epsilon(1e-14));
  }
}

TEST_CASE("mollify: linear-in-y inputs are reproduced at interior nodes") {
  GridPtr g = mollify_grid();
  const BumpKernel k = make_bump();
  const double eps = 0.125;
  Field A = Field::sample_matrix(g, 2, [&](std::span<const double> y, double) {
    MatN m = MatN::identity(2);
    m(0, 0) = 1.0 + eps * y[0];
    m(1, 1) = 1.0 + eps * y[0];
    return m;
  });
  const Field B = mollify(A, k);
  // interior: tangential stencil must not cross the periodic seam where the
  // sampled linear profile wraps
  for (int j = 2; j <= g->J() - 2; ++j) {
    const double reach = g->t_level(j) / 2.0;
    for (std::size_t x = 0; x < g->x_total(); ++x) {
      const double y = x * g->dx();
      if (y - reach < 0.0 || y + reach > 1.0 - g->dx()) continue;
      CHECK(std::fabs(B.at(g->node(x, j), 0) - (1.0 + eps * y)) <= 1e-10);
    }
  }
}

TEST_CASE("mollify: ellipticity preserved within 1e-10") {
  GridPtr g = mollify_grid();
  const BumpKernel k = make_bump();
  Field A = Field::sample_matrix(g, 2, [](std::span<const double> y, double t) {
    MatN m(2);
    m(0, 0) = 2.0 + 0.5 * std::sin(6.283185307179586 * y[0]);
    m(0, 1) = 0.2 * t / 2.0;
    m(1, 0) = 0.2 * t / 2.0;
    m(1, 1) = 3.0 - std::cos(6.283185307179586 * y[0]);
    return m;
  });
  const Field B = mollify(A, k);
  const MollifyCertificate cert = mollify_certificate(A, B, k);
  CHECK(cert.ellipticity_preserved);
  CHECK(cert.output.lambda >= cert.input.lambda - 1e-10);
  CHECK(cert.output.Lambda <= cert.input.Lambda + 1e-10);
}

TEST_CASE("mollify: linear in the input") {
  GridPtr g = mollify_grid(16, 4);
  const BumpKernel k = make_bump();
  Rng rng(53);
  Field A1 = Field::matrix(g, 2), A2 = Field::matrix(g, 2);
  for (std::size_t node = 0; node < g->node_count(); ++node)
    for (int c = 0; c < 4; ++c) {
      A1.at(node, c) = rng.uniform(-1, 1);
      A2.at(node, c) = rng.uniform(-1, 1);
    }
  const Field lhs = mollify(A1 + A2, k);
  const Field rhs = mollify(A1, k) + mollify(A2, k);
  double worst = 0;
  for (std::size_t node = 0; node < g->node_count(); ++node)
    for (int c = 0; c < 4; ++c) worst = std::max(worst, std::fabs(lhs.at(node, c) - rhs.at(node, c)));
  CHECK(worst <= 1e-12);
}

TEST_CASE("mollify: locality, values outside the support do not matter") {
  GridPtr g = mollify_grid(16, 4);
  const BumpKernel k = make_bump();
  Field A = constant_matrix_field(g, MatN::identity(2));
  const Field B1 = mollify(A, k);

  // probe node in the middle of the ladder; perturb far outside its window
  const int j_probe = g->J() / 2;
  const std::size_t x_probe = 3;
  const double t = g->t_level(j_probe);
  const int window = static_cast<int>(std::ceil(t / (2.0 * g->dx()))) - 1;
  const std::size_t x_far = g->x_shift(x_probe, 0, window + 3);
  Field A2 = A;
  A2.at(g->node(x_far, j_probe), 0) += 100.0;
  const Field B2 = mollify(A2, k);
  CHECK(B2.at(g->node(x_probe, j_probe), 0) == B1.at(g->node(x_probe, j_probe), 0));
  CHECK(B2.at(g->node(x_far, j_probe), 0) != B1.at(g->node(x_far, j_probe), 0));
}

TEST_CASE("mollify: derivative bound |t grad B~| <= C_theta ||A||_inf") {
  GridPtr g = mollify_grid();
  const BumpKernel k = make_bump();
  const double c_theta = kernel_derivative_l1(k, *g);
  CHECK(c_theta > 0);

  Rng rng(59);
  Field A = Field::matrix(g, 2);
  for (std::size_t node = 0; node < g->node_count(); ++node)
    for (int c = 0; c < 4; ++c) A.at(node, c) = rng.uniform(-1, 1);
  const Field B = mollify(A, k);
  const double lhs = sup_norm(t_gradient(B));
  CHECK(lhs <= c_theta * sup_norm(A) * (1.0 + 1e-9));
}

TEST_CASE("mollify: under-resolved grids are rejected") {
  const BumpKernel k = make_bump();
  {
    // t_min < 4 dx
    GridPtr g = make_grid(2, 32, 0.5, 4, 16);
    Field A = constant_matrix_field(g, MatN::identity(2));
    CHECK_THROWS_AS(mollify(A, k), ResolutionError);
  }
  {
    // m too small for two levels per vertical side
    GridPtr g = make_grid(2, 8, 2.0, 2, 6);
    Field A = constant_matrix_field(g, MatN::identity(2));
    CHECK_THROWS_AS(mollify(A, k), ResolutionError);
  }
}

TEST_CASE("mollify: n = 3 constant matrices are reproduced exactly") {
  GridPtr g = make_grid(3, 8, 2.0, 4, 8);  // t_min = 0.5 = 4 dx
  const BumpKernel k = make_bump();
  MatN m = MatN::identity(3);
  m(0, 2) = 0.3;
  m(2, 1) = -0.2;
  Field A = constant_matrix_field(g, m);
  const Field B = mollify(A, k);
  for (std::size_t node = 0; node < g->node_count(); ++node)
    for (int c = 0; c < 9; ++c)
      CHECK(B.at(node, c) == doctest::Approx(A.at(0, c)).epsilon(1e-13));
}

TEST_CASE("mollify certificate: identity input gives zero Carleson constants") {
  GridPtr g = mollify_grid(16, 4);
  const BumpKernel k = make_bump();
  Field A = constant_matrix_field(g, MatN::identity(2));
  const Field B = mollify(A, k);
  const MollifyCertificate cert = mollify_certificate(A, B, k);
  CHECK(cert.cm_tgrad.constant <= 1e-24);
  CHECK(cert.cm_residual.constant <= 1e-24);
  CHECK(cert.output.lambda == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cert.sup_tgrad <= 1e-13);
}

TEST_CASE("mollify certificate: residual controlled by the input bump") {
  // A = I + C with C a compact bump: cmsup(A - B~) stays within a measured
  // factor of cmsup(C)
  GridPtr g = mollify_grid();
  const BumpKernel k = make_bump();
  auto bump = [](double y, double t) {
    const double dy = (y - 0.5) / 0.2;
    const double dt = (std::log2(t / 2.0) + 3.0) / 2.0;
    const double sy = dy * dy < 1 ? std::exp(-1.0 / (1.0 - dy * dy)) : 0.0;
    const double st = dt * dt < 1 ? std::exp(-1.0 / (1.0 - dt * dt)) : 0.0;
    return 0.5 * sy * st / std::exp(-2.0);
  };
  Field C = Field::sample_matrix(g, 2, [&](std::span<const double> y, double t) {
    MatN m(2);
    m(0, 0) = bump(y[0], t);
    m(1, 1) = bump(y[0], t);
    return m;
  });
  Field A = constant_matrix_field(g, MatN::identity(2)) + C;
  const Field B = mollify(A, make_bump());
  const MollifyCertificate cert = mollify_certificate(A, B, k);
  const double cm_c = cmsup_constant(C).constant;
  CHECK(cert.cm_residual.constant > 0);
  const double K = cert.cm_residual.constant / cm_c;
  INFO("measured residual factor ", K);
  CHECK(K <= 4.0);  // measured on this fixture family; generous margin
}
