#include "dkp/pdelab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bandlu.hpp"
#include "dkp/errors.hpp"

namespace dkp {

namespace {

constexpr double kEps = 1e-12;

int round_count(double len, double delta, const char* what) {
  const double c = len / delta;
  const int n = static_cast<int>(std::lround(c));
  if (std::fabs(c - n) > 1e-9) throw ValidationError(std::string("solver grid: delta must divide ") + what);
  return n + 1;
}

double eig_min(const MatN& m) { return symmetric_eig_range(symmetric_part(m)).min; }

}  // namespace

SolverGrid::SolverGrid(double Ts_, double delta_) : Ts(Ts_), delta(delta_) {
  if (!(delta > 0) || !(Ts > 0)) throw ValidationError("solver grid: delta and T_s must be positive");
  nx_ = round_count(1.0, delta, "the unit x-range");
  nt_ = round_count(Ts, delta, "T_s");
  if (nx_ < 8 || nt_ < 8) throw ResolutionError("insufficient resolution");
}

BoundaryData BoundaryData::from_function(const ScalarEval& u) {
  BoundaryData b;
  b.bottom = [u](double x, double) { return u(x, 0.0); };
  b.top = u;
  b.left = u;
  b.right = u;
  return b;
}

BoundaryData BoundaryData::bottom_only(const std::function<double(double)>& g) {
  BoundaryData b;
  b.bottom = [g](double x, double) { return g(x); };
  b.top = [](double, double) { return 0.0; };
  b.left = [](double, double) { return 0.0; };
  b.right = [](double, double) { return 0.0; };
  return b;
}

namespace {

// Flux-form 9-point stencil: per interior node, iterates the coefficient of
// every touched neighbor. delta^2-scaled.
template <typename Emit>
void stencil_row(const MatrixEval& A, const SolverGrid& g, int i, int j, Emit&& emit,
                 double* min_eig = nullptr) {
  const double d = g.delta;
  const double xe = g.x(i) + 0.5 * d, xw = g.x(i) - 0.5 * d;
  const double tn = g.t(j) + 0.5 * d, ts = g.t(j) - 0.5 * d;
  const MatN Ae = A(xe, g.t(j)), Aw = A(xw, g.t(j));
  const MatN An = A(g.x(i), tn), As = A(g.x(i), ts);
  if (min_eig) {
    *min_eig = std::min(*min_eig, std::min(std::min(eig_min(Ae), eig_min(Aw)),
                                           std::min(eig_min(An), eig_min(As))));
  }

  // -(Fx_e - Fx_w + Ft_n - Ft_s) * delta, with F assembled from first
  // differences: all coefficients below are O(A).
  // Fx_e = A11_e (u[i+1,j]-u[i,j])/d + A12_e (u[i,j+1]+u[i+1,j+1]-u[i,j-1]-u[i+1,j-1])/(4d)
  emit(i + 1, j, -Ae(0, 0));
  emit(i, j, Ae(0, 0));
  emit(i, j + 1, -0.25 * Ae(0, 1));
  emit(i + 1, j + 1, -0.25 * Ae(0, 1));
  emit(i, j - 1, 0.25 * Ae(0, 1));
  emit(i + 1, j - 1, 0.25 * Ae(0, 1));
  // + Fx_w
  emit(i, j, -(-Aw(0, 0)));
  emit(i - 1, j, -Aw(0, 0));
  emit(i, j + 1, 0.25 * Aw(0, 1));
  emit(i - 1, j + 1, 0.25 * Aw(0, 1));
  emit(i, j - 1, -0.25 * Aw(0, 1));
  emit(i - 1, j - 1, -0.25 * Aw(0, 1));
  // Ft_n = A21_n (u[i+1,j]+u[i+1,j+1]-u[i-1,j]-u[i-1,j+1])/(4d) + A22_n (u[i,j+1]-u[i,j])/d
  emit(i + 1, j, -0.25 * An(1, 0));
  emit(i + 1, j + 1, -0.25 * An(1, 0));
  emit(i - 1, j, 0.25 * An(1, 0));
  emit(i - 1, j + 1, 0.25 * An(1, 0));
  emit(i, j + 1, -An(1, 1));
  emit(i, j, An(1, 1));
  // + Ft_s
  emit(i + 1, j, 0.25 * As(1, 0));
  emit(i + 1, j - 1, 0.25 * As(1, 0));
  emit(i - 1, j, -0.25 * As(1, 0));
  emit(i - 1, j - 1, -0.25 * As(1, 0));
  emit(i, j - 1, -As(1, 1));
  emit(i, j, As(1, 1));
}

}  // namespace

DirichletSolution solve_dirichlet(const MatrixEval& A, const BoundaryData& g, const SolverGrid& grid) {
  const int nx = grid.nx(), nt = grid.nt();
  DirichletSolution sol;
  sol.grid = grid;
  sol.u.assign(grid.node_count(), 0.0);

  // boundary values; bottom/top own the corners
  for (int j = 0; j < nt; ++j) {
    sol.u[grid.node(0, j)] = g.left(0.0, grid.t(j));
    sol.u[grid.node(nx - 1, j)] = g.right(1.0, grid.t(j));
  }
  for (int i = 0; i < nx; ++i) {
    sol.u[grid.node(i, 0)] = g.bottom(grid.x(i), 0.0);
    sol.u[grid.node(i, nt - 1)] = g.top(grid.x(i), grid.Ts);
  }

  const std::size_t unknowns = static_cast<std::size_t>(nx - 2) * static_cast<std::size_t>(nt - 2);
  const std::size_t kl = static_cast<std::size_t>(nx - 1);
  BandLU lu(unknowns, kl);
  std::vector<double> rhs(unknowns, 0.0);

  auto interior_index = [&](int i, int j) {
    return static_cast<std::size_t>(j - 1) * static_cast<std::size_t>(nx - 2) +
           static_cast<std::size_t>(i - 1);
  };

  double min_eig = 1e300;
  for (int j = 1; j < nt - 1; ++j)
    for (int i = 1; i < nx - 1; ++i) {
      const std::size_t row = interior_index(i, j);
      stencil_row(
          A, grid, i, j,
          [&](int ii, int jj, double c) {
            if (c == 0.0) return;
            if (ii == 0 || ii == nx - 1 || jj == 0 || jj == nt - 1)
              rhs[row] -= c * sol.u[grid.node(ii, jj)];
            else
              lu.add(row, interior_index(ii, jj), c);
          },
          &min_eig);
    }
  if (!(min_eig > 0)) throw PreconditionError("not uniformly elliptic");

  lu.factor();
  lu.solve(rhs);
  for (int j = 1; j < nt - 1; ++j)
    for (int i = 1; i < nx - 1; ++i) sol.u[grid.node(i, j)] = rhs[interior_index(i, j)];

  // algebraic residual of the assembled equations
  const std::vector<double> res = operator_residual(A, grid, sol.u);
  double rmax = 0, umax = 0;
  for (double r : res) rmax = std::max(rmax, std::fabs(r));
  for (double v : sol.u) umax = std::max(umax, std::fabs(v));
  sol.rel_residual = rmax * grid.delta * grid.delta / (umax + kEps);
  if (sol.rel_residual > 1e-10)
    throw ResolutionError("solver non-convergence: relative residual " +
                          std::to_string(sol.rel_residual));

  double bmin = 1e300, bmax = -1e300;
  for (int j = 0; j < nt; ++j) {
    bmin = std::min({bmin, sol.u[grid.node(0, j)], sol.u[grid.node(nx - 1, j)]});
    bmax = std::max({bmax, sol.u[grid.node(0, j)], sol.u[grid.node(nx - 1, j)]});
  }
  for (int i = 0; i < nx; ++i) {
    bmin = std::min({bmin, sol.u[grid.node(i, 0)], sol.u[grid.node(i, nt - 1)]});
    bmax = std::max({bmax, sol.u[grid.node(i, 0)], sol.u[grid.node(i, nt - 1)]});
  }
  sol.boundary_min = bmin;
  sol.boundary_max = bmax;
  const double tol = 1e-9 * (bmax - bmin + 1.0);
  sol.max_principle_ok = true;
  for (double v : sol.u)
    if (v < bmin - tol || v > bmax + tol) sol.max_principle_ok = false;
  return sol;
}

std::vector<double> operator_residual(const MatrixEval& A, const SolverGrid& grid,
                                      std::span<const double> u) {
  const int nx = grid.nx(), nt = grid.nt();
  std::vector<double> res(grid.node_count(), 0.0);
  const double inv_d2 = 1.0 / (grid.delta * grid.delta);
  for (int j = 1; j < nt - 1; ++j)
    for (int i = 1; i < nx - 1; ++i) {
      double acc = 0;
      stencil_row(A, grid, i, j,
                  [&](int ii, int jj, double c) { acc += c * u[grid.node(ii, jj)]; });
      res[grid.node(i, j)] = acc * inv_d2;  // approximates -div(A grad u)
    }
  return res;
}

namespace {

double eval_u(const UAccess& u, double x, double t, std::size_t* outside) {
  if (std::holds_alternative<ScalarEval>(u)) return std::get<ScalarEval>(u)(x, t);
  const NodalU& nu = std::get<NodalU>(u);
  const SolverGrid& g = nu.grid;
  double sx = (x - nu.x0) / g.delta;
  double st = t / g.delta;
  const double max_x = g.nx() - 1, max_t = g.nt() - 1;
  if (sx < -1e-9 || sx > max_x + 1e-9 || st < -1e-9 || st > max_t + 1e-9)
    if (outside) ++*outside;
  sx = std::clamp(sx, 0.0, max_x);
  st = std::clamp(st, 0.0, max_t);
  const int i0 = std::min(static_cast<int>(sx), g.nx() - 2);
  const int j0 = std::min(static_cast<int>(st), g.nt() - 2);
  const double wx = sx - i0, wt = st - j0;
  return (1 - wx) * (1 - wt) * nu.u[g.node(i0, j0)] + wx * (1 - wt) * nu.u[g.node(i0 + 1, j0)] +
         (1 - wx) * wt * nu.u[g.node(i0, j0 + 1)] + wx * wt * nu.u[g.node(i0 + 1, j0 + 1)];
}

}  // namespace

ConjugationCheck verify_conjugation(const MatrixEval& A, const MapEval& rho, const UAccess& u,
                                    const SolverGrid& grid) {
  ConjugationCheck check;
  std::vector<double> v(grid.node_count(), 0.0);
  for (int j = 0; j < grid.nt(); ++j)
    for (int i = 0; i < grid.nx(); ++i) {
      const auto [xi, ti] = rho.eval(grid.x(i), grid.t(j));
      v[grid.node(i, j)] = eval_u(u, xi, ti, &check.outside_points);
    }
  check.residual = operator_residual(A, grid, v);
  double sq = 0;
  std::size_t count = 0;
  for (int j = 1; j < grid.nt() - 1; ++j)
    for (int i = 1; i < grid.nx() - 1; ++i) {
      const double r = check.residual[grid.node(i, j)];
      check.linf = std::max(check.linf, std::fabs(r));
      sq += r * r;
      ++count;
    }
  check.l2 = std::sqrt(sq / std::max<std::size_t>(count, 1));
  return check;
}

OrderStudy conjugation_order(const MatrixEval& A, const MapEval& rho, const ScalarEval& u,
                             double Ts, std::span<const double> deltas) {
  OrderStudy study;
  for (double d : deltas) {
    const SolverGrid g(Ts, d);
    const ConjugationCheck c = verify_conjugation(A, rho, UAccess{u}, g);
    study.deltas.push_back(d);
    study.linf.push_back(c.linf);
  }
  constexpr double res_floor = 1e-11;
  study.at_floor = std::all_of(study.linf.begin(), study.linf.end(),
                               [&](double r) { return r < res_floor; });
  if (study.at_floor) {
    study.observed_order = std::numeric_limits<double>::infinity();
  } else if (study.linf.size() >= 2) {
    const std::size_t k = study.linf.size() - 1;
    const double num = std::max(study.linf[k - 1], res_floor);
    const double den = std::max(study.linf[k], res_floor);
    study.observed_order = std::log2(num / den) /
                           std::log2(study.deltas[k - 1] / study.deltas[k]);
  }
  return study;
}

std::vector<double> ntmax(const SolverGrid& grid, std::span<const double> u, double K) {
  const int nx = grid.nx(), nt = grid.nt();
  std::vector<double> out(static_cast<std::size_t>(nx), 0.0);
  for (int cj = 0; cj + 1 < nt; ++cj)
    for (int ci = 0; ci + 1 < nx; ++ci) {
      const double yc = grid.x(ci) + 0.5 * grid.delta;
      const double tc = grid.t(cj) + 0.5 * grid.delta;
      double cell = std::fabs(u[grid.node(ci, cj)]);
      cell = std::max(cell, std::fabs(u[grid.node(ci + 1, cj)]));
      cell = std::max(cell, std::fabs(u[grid.node(ci, cj + 1)]));
      cell = std::max(cell, std::fabs(u[grid.node(ci + 1, cj + 1)]));
      const double reach = K * tc;
      const int s_lo = std::max(0, static_cast<int>(std::ceil((yc - reach) / grid.delta - kEps)));
      const int s_hi = std::min(nx - 1, static_cast<int>(std::floor((yc + reach) / grid.delta + kEps)));
      for (int s = s_lo; s <= s_hi; ++s)
        out[static_cast<std::size_t>(s)] = std::max(out[static_cast<std::size_t>(s)], cell);
    }
  return out;
}

std::vector<double> ntmax_avg(const SolverGrid& grid, std::span<const double> u, double K) {
  const int nx = grid.nx(), nt = grid.nt();
  const double d = grid.delta;

  // |grad u|^2 per node, centered differences (one-sided at edges)
  std::vector<double> gsq(grid.node_count(), 0.0);
  for (int j = 0; j < nt; ++j)
    for (int i = 0; i < nx; ++i) {
      const int il = std::max(0, i - 1), ir = std::min(nx - 1, i + 1);
      const int jd = std::max(0, j - 1), ju = std::min(nt - 1, j + 1);
      const double ux = (u[grid.node(ir, j)] - u[grid.node(il, j)]) / ((ir - il) * d);
      const double ut = (u[grid.node(i, ju)] - u[grid.node(i, jd)]) / ((ju - jd) * d);
      gsq[grid.node(i, j)] = ux * ux + ut * ut;
    }

  // per-row prefix sums for O(rows) band averages
  std::vector<double> prefix(grid.node_count(), 0.0);
  for (int j = 0; j < nt; ++j) {
    double acc = 0;
    for (int i = 0; i < nx; ++i) {
      acc += gsq[grid.node(i, j)];
      prefix[grid.node(i, j)] = acc;
    }
  }
  auto row_sum = [&](int j, int lo, int hi) {
    double s = prefix[grid.node(hi, j)];
    if (lo > 0) s -= prefix[grid.node(lo - 1, j)];
    return s;
  };

  std::vector<double> out(static_cast<std::size_t>(nx), 0.0);
  for (int cj = 0; cj + 1 < nt; ++cj)
    for (int ci = 0; ci + 1 < nx; ++ci) {
      const double yc = grid.x(ci) + 0.5 * d;
      const double tc = grid.t(cj) + 0.5 * d;
      const int i_lo = std::max(0, static_cast<int>(std::ceil((yc - tc) / d - kEps)));
      const int i_hi = std::min(nx - 1, static_cast<int>(std::floor((yc + tc) / d + kEps)));
      const int j_lo = std::max(0, static_cast<int>(std::ceil(0.5 * tc / d - kEps)));
      const int j_hi = std::min(nt - 1, static_cast<int>(std::floor(2.0 * tc / d + kEps)));
      if (i_lo > i_hi || j_lo > j_hi) continue;
      double s = 0;
      for (int j = j_lo; j <= j_hi; ++j) s += row_sum(j, i_lo, i_hi);
      const double mean = s / (static_cast<double>(i_hi - i_lo + 1) * (j_hi - j_lo + 1));
      const double rms = std::sqrt(mean);

      const double reach = K * tc;
      const int s_lo = std::max(0, static_cast<int>(std::ceil((yc - reach) / d - kEps)));
      const int s_hi = std::min(nx - 1, static_cast<int>(std::floor((yc + reach) / d + kEps)));
      for (int sx = s_lo; sx <= s_hi; ++sx)
        out[static_cast<std::size_t>(sx)] = std::max(out[static_cast<std::size_t>(sx)], rms);
    }
  return out;
}

double boundary_q_norm(std::span<const double> vals, double spacing, double q) {
  if (!(q > 1.0) || !std::isfinite(q)) throw ValidationError("q must lie in (1, inf)");
  double s = 0;
  for (double v : vals) s += std::pow(std::fabs(v), q);
  return std::pow(s * spacing, 1.0 / q);
}

RegularityProbe regularity_ratio(const MatrixEval& A, const std::vector<BoundaryData>& family,
                                 double q, double aperture, const SolverGrid& grid) {
  RegularityProbe probe;
  const int nx = grid.nx();
  for (const BoundaryData& g : family) {
    // discrete tangential gradient of the datum along the bottom edge
    std::vector<double> dg(static_cast<std::size_t>(nx), 0.0);
    std::vector<double> gv(static_cast<std::size_t>(nx), 0.0);
    for (int i = 0; i < nx; ++i) gv[static_cast<std::size_t>(i)] = g.bottom(grid.x(i), 0.0);
    for (int i = 0; i < nx; ++i) {
      const int il = std::max(0, i - 1), ir = std::min(nx - 1, i + 1);
      dg[static_cast<std::size_t>(i)] =
          (gv[static_cast<std::size_t>(ir)] - gv[static_cast<std::size_t>(il)]) / ((ir - il) * grid.delta);
    }
    const double norm_g = boundary_q_norm(dg, grid.delta, q);
    if (norm_g < 1e-14) {
      ++probe.skipped;
      continue;
    }
    const DirichletSolution sol = solve_dirichlet(A, g, grid);
    probe.max_principle_all = probe.max_principle_all && sol.max_principle_ok;
    const std::vector<double> nt = ntmax_avg(grid, sol.u, aperture);
    const double ratio = boundary_q_norm(nt, grid.delta, q) / norm_g;
    probe.per_datum.push_back(ratio);
    probe.ratio = std::max(probe.ratio, ratio);
  }
  return probe;
}

}  // namespace dkp
