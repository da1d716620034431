#include "dkp/mollify.hpp"

#include <cmath>
#include <map>

#include "dkp/errors.hpp"
#include "dkp/parallel.hpp"

namespace dkp {

namespace {

// One level's stencil: vertical offsets q (level index shifts, clamped at the
// ladder ends) times a tangential offset cube of half-width d_max per axis.
struct LevelStencil {
  int d_max = 0;
  int q_lo = 0, q_hi = 0;
  int axes = 1;
  // weights[(q - q_lo) * dflat_count + dflat], normalized to unit mass
  std::vector<double> weights;

  int d_count() const { return 2 * d_max + 1; }
  std::size_t dflat_count() const {
    std::size_t c = 1;
    for (int a = 0; a < axes; ++a) c *= static_cast<std::size_t>(d_count());
    return c;
  }
  double weight(int q, std::size_t dflat) const {
    return weights[static_cast<std::size_t>(q - q_lo) * dflat_count() + dflat];
  }
  void d_indices(std::size_t dflat, int* out) const {
    for (int a = axes - 1; a >= 0; --a) {
      out[a] = static_cast<int>(dflat % static_cast<std::size_t>(d_count())) - d_max;
      dflat /= static_cast<std::size_t>(d_count());
    }
  }
};

LevelStencil build_stencil(const BumpKernel& k, const Grid& g, int level) {
  const double t = g.t_level(level);
  LevelStencil st;
  st.axes = g.tangential_axes();
  // strict support: |d| dx / t < 1/2
  st.d_max = static_cast<int>(std::ceil(t / (2.0 * g.dx()) - 1e-9)) - 1;
  if (st.d_max < 0) st.d_max = 0;
  // vertical: s = t 2^{-q/m}, sigma = 2^{-q/m} - 1, |sigma| < 1/2
  const double up = g.m() * std::log2(1.5);
  st.q_lo = -(static_cast<int>(std::ceil(up - 1e-9)) - 1);
  st.q_hi = g.m() - 1;

  const std::size_t dc = st.dflat_count();
  st.weights.assign(static_cast<std::size_t>(st.q_hi - st.q_lo + 1) * dc, 0.0);

  double total = 0;
  std::vector<int> d(static_cast<std::size_t>(st.axes));
  for (int q = st.q_lo; q <= st.q_hi; ++q) {
    const double rel = std::exp2(-static_cast<double>(q) / g.m());
    const double sigma = rel - 1.0;
    for (std::size_t df = 0; df < dc; ++df) {
      st.d_indices(df, d.data());
      double nsq = sigma * sigma;
      for (int a = 0; a < st.axes; ++a) {
        const double xi = d[static_cast<std::size_t>(a)] * g.dx() / t;
        nsq += xi * xi;
      }
      const double w = k(nsq) * rel;  // measure ~ s dlog s dx
      if (w > 0) {
        st.weights[static_cast<std::size_t>(q - st.q_lo) * dc + df] = w;
        total += w;
      }
    }
  }
  for (double& w : st.weights) w /= total;
  return st;
}

void check_resolution(const BumpKernel& k, const Grid& g) {
  // >= 2 nodes per half-width tangentially at every level
  if (g.t_min() < 4.0 * g.dx() - 1e-12)
    throw ResolutionError("kernel under-resolved");
  // >= 2 levels with positive weight on each vertical side
  const LevelStencil st = build_stencil(k, g, g.levels() / 2);
  int pos = 0, neg = 0;
  for (int q = st.q_lo; q <= st.q_hi; ++q) {
    const double sigma = std::exp2(-static_cast<double>(q) / g.m()) - 1.0;
    if (k(sigma * sigma) > 0) {
      if (q > 0) ++pos;
      if (q < 0) ++neg;
    }
  }
  if (pos < 2 || neg < 2) throw ResolutionError("kernel under-resolved");
}

int clamp_level(const Grid& g, int j) { return std::max(0, std::min(g.J(), j)); }

}  // namespace

double BumpKernel::operator()(double norm_sq) const {
  if (norm_sq >= 0.25) return 0.0;
  return std::exp(-1.0 / (1.0 - 4.0 * norm_sq));
}

double BumpKernel::Stencil::mass() const {
  // Kahan summation: the diagnostic tolerance is tight (1e-12)
  double s = 0, c = 0;
  for (double w : weights) {
    const double y = w - c;
    const double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  return s;
}

std::vector<double> BumpKernel::Stencil::first_moment() const {
  std::vector<double> m(points.empty() ? 0 : points[0].size(), 0.0);
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t a = 0; a < m.size(); ++a) m[a] += weights[i] * points[i][a];
  return m;
}

BumpKernel::Stencil BumpKernel::reference_stencil(int dim, int half) const {
  Stencil st;
  const int per_axis = 2 * half + 1;
  std::size_t count = 1;
  for (int a = 0; a < dim; ++a) count *= static_cast<std::size_t>(per_axis);
  double total = 0;
  for (std::size_t f = 0; f < count; ++f) {
    std::size_t rem = f;
    std::vector<double> x(static_cast<std::size_t>(dim));
    double nsq = 0;
    for (int a = dim - 1; a >= 0; --a) {
      const int i = static_cast<int>(rem % static_cast<std::size_t>(per_axis)) - half;
      rem /= static_cast<std::size_t>(per_axis);
      x[static_cast<std::size_t>(a)] = 0.5 * i / (half + 1);
      nsq += x[static_cast<std::size_t>(a)] * x[static_cast<std::size_t>(a)];
    }
    const double w = (*this)(nsq);
    if (w > 0) {
      st.points.push_back(std::move(x));
      st.weights.push_back(w);
      total += w;
    }
  }
  for (double& w : st.weights) w /= total;
  return st;
}

BumpKernel make_bump() { return BumpKernel{}; }

Field mollify(const Field& A, const BumpKernel& k) {
  const Grid& g = A.grid();
  check_resolution(k, g);

  const int nc = A.comps();
  Field out = A;
  out.set_name(A.name().empty() ? std::string{} : "mollified(" + A.name() + ")");

  for (int j = 0; j < g.levels(); ++j) {
    const LevelStencil st = build_stencil(k, g, j);
    const std::size_t dc = st.dflat_count();

    parallel_chunks(g.x_total(), [&](std::size_t lo, std::size_t hi) {
      std::vector<int> dd(static_cast<std::size_t>(st.axes));
      std::vector<double> acc(static_cast<std::size_t>(nc));
      for (std::size_t x = lo; x < hi; ++x) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t df = 0; df < dc; ++df) {
          st.d_indices(df, dd.data());
          std::size_t zx = x;
          for (int a = 0; a < st.axes; ++a) zx = g.x_shift(zx, a, dd[static_cast<std::size_t>(a)]);
          for (int q = st.q_lo; q <= st.q_hi; ++q) {
            const double w = st.weight(q, df);
            if (w == 0.0) continue;
            const std::size_t src = g.node(zx, clamp_level(g, j + q));
            for (int c = 0; c < nc; ++c) acc[static_cast<std::size_t>(c)] += w * A.at(src, c);
          }
        }
        const std::size_t node = g.node(x, j);
        for (int c = 0; c < nc; ++c) out.at(node, c) = acc[static_cast<std::size_t>(c)];
      }
    });
  }
  return out;
}

double kernel_derivative_l1(const BumpKernel& k, const Grid& g) {
  check_resolution(k, g);
  double worst = 0;

  for (int j = 0; j < g.levels(); ++j) {
    const double t = g.t_level(j);
    double dir_sq = 0;

    // tangential directions: coefficients (w(d - e_a) - w(d + e_a)) t/(2dx)
    {
      const LevelStencil st = build_stencil(k, g, j);
      const std::size_t dc = st.dflat_count();
      std::vector<int> dd(static_cast<std::size_t>(st.axes));
      for (int a = 0; a < st.axes; ++a) {
        double l1 = 0;
        for (int q = st.q_lo; q <= st.q_hi; ++q) {
          // offsets range over the window extended by one
          std::map<std::vector<int>, double> coef;
          for (std::size_t df = 0; df < dc; ++df) {
            st.d_indices(df, dd.data());
            const double w = st.weight(q, df);
            if (w == 0.0) continue;
            auto plus = dd;
            plus[static_cast<std::size_t>(a)] += 1;
            auto minus = dd;
            minus[static_cast<std::size_t>(a)] -= 1;
            coef[plus] += w;
            coef[minus] -= w;
          }
          for (const auto& kv : coef) l1 += std::fabs(kv.second);
        }
        l1 *= t / (2.0 * g.dx());
        dir_sq += l1 * l1;
      }
    }

    // vertical direction: centered difference of B~ across levels in log t
    {
      const int ju = std::max(0, j - 1), jd = std::min(g.J(), j + 1);
      const double denom = (ju == jd) ? 1.0 : (jd - ju) * g.dlog_t();
      const LevelStencil su = build_stencil(k, g, ju);
      const LevelStencil sd = build_stencil(k, g, jd);
      std::map<std::pair<std::vector<int>, int>, double> coef;
      std::vector<int> dd(static_cast<std::size_t>(su.axes));
      for (int q = su.q_lo; q <= su.q_hi; ++q)
        for (std::size_t df = 0; df < su.dflat_count(); ++df) {
          const double w = su.weight(q, df);
          if (w == 0.0) continue;
          su.d_indices(df, dd.data());
          coef[{dd, clamp_level(g, ju + q)}] += w;
        }
      for (int q = sd.q_lo; q <= sd.q_hi; ++q)
        for (std::size_t df = 0; df < sd.dflat_count(); ++df) {
          const double w = sd.weight(q, df);
          if (w == 0.0) continue;
          sd.d_indices(df, dd.data());
          coef[{dd, clamp_level(g, jd + q)}] -= w;
        }
      double l1 = 0;
      for (const auto& kv : coef) l1 += std::fabs(kv.second);
      l1 /= denom;
      dir_sq += l1 * l1;
    }

    worst = std::max(worst, std::sqrt(dir_sq));
  }
  return worst;
}

MollifyCertificate mollify_certificate(const Field& A, const Field& Bt, const BumpKernel& k) {
  MollifyCertificate cert;
  cert.input = ellipticity_constants(A);
  cert.output = ellipticity_constants(Bt);
  const Field tg = t_gradient(Bt);
  cert.sup_tgrad = sup_norm(tg);
  cert.cm_tgrad = cmsup_constant(tg);
  cert.cm_residual = cmsup_constant(A - Bt);
  cert.kernel_deriv_l1 = kernel_derivative_l1(k, A.grid());
  cert.ellipticity_preserved = cert.output.lambda >= cert.input.lambda - 1e-10;
  return cert;
}

}  // namespace dkp
