#include "dkp/pipeline.hpp"

#include <cmath>

#include "dkp/errors.hpp"

namespace dkp {

namespace {

// |t grad B| + |C| as a scalar field; its cmsup constant is the M of the
// hypothesis and of the conclusion.
double split_carleson_constant(const Field& B, const Field& C) {
  const Field tg = magnitude(t_gradient(B));
  const Field cm = magnitude(C);
  Field sum = tg;
  sum += cm;
  return cmsup_constant(sum).constant;
}

Field stage_v(const Field& b, const Field& B3, double one_over_N, double exponent_scale) {
  // v = (1/N) b^{-exponent_scale} B3, with the product order fixed so the
  // final stage cancels bit-exactly against the stored last row.
  Field v = Field::vector(b.grid_ptr(), B3.comps(), "v_stage");
  for (std::size_t node = 0; node < b.grid().node_count(); ++node) {
    const double w = one_over_N * std::pow(b.at(node), -exponent_scale);
    for (int c = 0; c < B3.comps(); ++c) v.at(node, c) = w * B3.at(node, c);
  }
  return v;
}

bool candidate_ok(const Field& b, const Field& B3, int N, std::optional<double> eps0_opt,
                  double* eps_out = nullptr) {
  const double one_over_N = 1.0 / N;
  const Field h = pow_field(b, one_over_N, "h_candidate");
  double h_min = h.at(0), h_max = h.at(0);
  for (std::size_t node = 0; node < b.grid().node_count(); ++node) {
    h_min = std::min(h_min, h.at(node));
    h_max = std::max(h_max, h.at(node));
  }
  if (!(h_min > 0.5 && h_max < 2.0)) return false;

  const double tgh = sup_norm(t_gradient(h));
  double tgv_max = 0, v_sup_max = 0;
  for (int k = 0; k <= N; ++k) {
    const Field vk = stage_v(b, B3, one_over_N, static_cast<double>(k) * one_over_N);
    v_sup_max = std::max(v_sup_max, sup_norm(vk));
    if (v_sup_max > 1.0) return false;
    tgv_max = std::max(tgv_max, sup_norm(t_gradient(vk)));
  }
  const double eps = tgh + tgv_max;
  if (eps_out) *eps_out = eps;
  const double eps0 = eps0_opt.value_or(default_eps0(h_min, h_max, v_sup_max, b.grid().n()));
  return eps < eps0;
}

}  // namespace

int choose_N(const Field& B, std::optional<double> eps0, int N_max) {
  const BlockDecomposition blocks = block_decompose(B);
  double b_min = blocks.b.at(0);
  for (std::size_t node = 0; node < B.grid().node_count(); ++node)
    b_min = std::min(b_min, blocks.b.at(node));
  if (!(b_min > 0)) throw PreconditionError("degenerate lower-right entry");

  // linear scan for the exact minimum over small N, then bracket + bisect
  const int linear_top = std::min(N_max, 64);
  for (int N = 1; N <= linear_top; ++N)
    if (candidate_ok(blocks.b, blocks.B3, N, eps0)) return N;

  int lo = linear_top, hi = 0;
  for (int N = 2 * linear_top; N <= N_max; N *= 2)
    if (candidate_ok(blocks.b, blocks.B3, N, eps0)) {
      hi = N;
      break;
    } else {
      lo = N;
    }
  if (hi == 0) throw ResolutionError("pipeline infeasible at this resolution");
  while (hi - lo > 1) {
    const int mid = lo + (hi - lo) / 2;
    if (candidate_ok(blocks.b, blocks.B3, mid, eps0))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

PipelineReport run_pipeline(const Field& A, std::optional<std::pair<Field, Field>> split,
                            const PipelineOptions& opts) {
  const Grid& g = A.grid();
  const int n = g.n();

  PipelineReport rep;
  const EllipticityReport ell_A = ellipticity_constants(A);
  rep.lambda_initial = ell_A.lambda;

  Field B = Field::matrix(A.grid_ptr(), n);
  Field C = Field::matrix(A.grid_ptr(), n);
  if (split) {
    B = std::move(split->first);
    C = std::move(split->second);
    Field resid = A - (B + C);
    if (sup_norm(resid) > 1e-12 * (1.0 + sup_norm(A)))
      throw ValidationError("run_pipeline: split does not sum to A");
  } else {
    const BumpKernel bump = make_bump();
    B = mollify(A, bump);
    C = A - B;
    rep.mollify_cert = mollify_certificate(A, B, bump);
  }
  ellipticity_constants(B);  // the iteration requires an elliptic B

  BlockDecomposition blocks = block_decompose(B);
  const int N = choose_N(B, opts.eps0, opts.N_max);
  rep.N = N;
  rep.M_initial = split_carleson_constant(B, C);

  const double one_over_N = 1.0 / N;
  const Field h = pow_field(blocks.b, one_over_N, "h");
  const Field b0 = blocks.b;   // the iteration reuses the entry-stage blocks
  const Field B3_0 = blocks.B3;

  Field B_k = B;
  Field C_k = C;
  double lambda_prev = ellipticity_constants(B_k + C_k).lambda;
  rep.ellipticity_chain = 1.0;

  for (int k = N; k >= 1; --k) {
    const double exp_prev = static_cast<double>(k - 1) * one_over_N;
    Field v = stage_v(b0, B3_0, one_over_N, exp_prev);
    auto rho = std::make_shared<ChangeOfVariable>(
        ChangeOfVariable::build(std::move(v), h, opts.eps0));
    if (!rho->certificate().certified)
      throw PreconditionError("pipeline stage k=" + std::to_string(k - 1) +
                              " uncertified: " + rho->certificate().diagnostic);

    ResidualSplit rs = residual_split(B_k, C_k, *rho);

    // predicted stage form: last row ((k-1)/N B3, b^{(k-1)/N})
    double dev = rs.last_row_dev;
    Field B_next = std::move(rs.B_rho);
    Field C_next = std::move(rs.C_rho);
    for (std::size_t node = 0; node < g.node_count(); ++node) {
      for (int cc = 0; cc < n - 1; ++cc) {
        const double want = exp_prev * B3_0.at(node, cc);
        const int comp = (n - 1) * n + cc;
        dev = std::max(dev, std::fabs(B_next.at(node, comp) - want));
        C_next.at(node, comp) += B_next.at(node, comp) - want;
        B_next.at(node, comp) = want;
      }
      const double want_b = std::pow(b0.at(node), exp_prev);
      const int comp = n * n - 1;
      dev = std::max(dev, std::fabs(B_next.at(node, comp) - want_b));
      C_next.at(node, comp) += B_next.at(node, comp) - want_b;
      B_next.at(node, comp) = want_b;
    }
    if (dev > 1e-6)
      throw PreconditionError("pipeline stage k=" + std::to_string(k - 1) +
                              ": stage form deviates by " + std::to_string(dev));

    StageRecord rec;
    rec.k = k - 1;
    rec.map = rho->certificate();
    rec.last_row_dev = dev;
    rec.sup_tgrad_h = sup_norm(rho->tgrad_h());
    rec.sup_tgrad_v = sup_norm(rho->tgrad_v());
    if (opts.with_carleson_diagnostics) {
      rec.cm_tgrad_B = cmsup_constant(t_gradient(B_next)).constant;
      rec.cm_C = rs.cm_c.constant;
      rec.cm_majorant = rs.cm_majorant.constant;
    }
    const EllipticityReport ell = ellipticity_constants(B_next + C_next);  // aborts if lost
    rec.lambda = ell.lambda;
    rec.Lambda = ell.Lambda;
    rep.ellipticity_chain *= rho->certificate().ellipticity_factor;
    if (ell.lambda < rho->certificate().ellipticity_factor * lambda_prev - 1e-12)
      throw PreconditionError("pipeline stage k=" + std::to_string(k - 1) +
                              ": ellipticity below certified factor");
    lambda_prev = ell.lambda;
    rep.stages.push_back(rec);

    rep.map.push_applied_first(rho);
    B_k = std::move(B_next);
    C_k = std::move(C_next);
  }

  rep.lambda_final = lambda_prev;
  rep.M_final = split_carleson_constant(B_k, C_k);
  rep.ratio = rep.M_final / (rep.M_initial + 1.0);

  rep.last_row_exact = true;
  for (std::size_t node = 0; node < g.node_count() && rep.last_row_exact; ++node) {
    for (int cc = 0; cc < n - 1; ++cc)
      if (B_k.at(node, (n - 1) * n + cc) != 0.0) rep.last_row_exact = false;
    if (B_k.at(node, n * n - 1) != 1.0) rep.last_row_exact = false;
  }

  rep.B_final = std::make_shared<Field>(std::move(B_k));
  rep.C_final = std::make_shared<Field>(std::move(C_k));
  rep.B_final->set_name("B_final");
  rep.C_final->set_name("C_final");
  return rep;
}

PipelineReport run_diagonal_reduction(const Field& b, const PipelineOptions& opts) {
  const Grid& g = b.grid();
  const int n = g.n();
  if (b.comps() != 1) throw ValidationError("run_diagonal_reduction: b must be a scalar field");
  double b_min = b.at(0), b_max = b.at(0);
  for (std::size_t node = 0; node < g.node_count(); ++node) {
    b_min = std::min(b_min, b.at(node));
    b_max = std::max(b_max, b.at(node));
  }
  if (!(b_min > 0)) throw PreconditionError("degenerate lower-right entry");

  PipelineReport rep;
  rep.M_initial = cmsup_constant(t_gradient(b)).constant;

  // N minimal with ||t grad b^{1/N}|| <= min(h)/2 and a certified map
  const Field zero_v = Field::vector(b.grid_ptr(), n - 1, "v");
  std::shared_ptr<ChangeOfVariable> rho;
  int N = 0;
  for (int cand = 1; cand <= opts.N_max; cand = (cand < 64 ? cand + 1 : cand * 2)) {
    const double one_over = 1.0 / cand;
    Field h = pow_field(b, one_over, "h");
    double h_min = h.at(0);
    for (std::size_t node = 0; node < g.node_count(); ++node) h_min = std::min(h_min, h.at(node));
    if (sup_norm(t_gradient(h)) > 0.5 * h_min) continue;
    auto cand_rho = std::make_shared<ChangeOfVariable>(
        ChangeOfVariable::build(zero_v, std::move(h), opts.eps0));
    if (!cand_rho->certificate().certified) continue;
    rho = std::move(cand_rho);
    N = cand;
    break;
  }
  if (!rho) throw ResolutionError("pipeline infeasible at this resolution");
  rep.N = N;

  const double one_over_N = 1.0 / N;
  auto diag_stage = [&](int k) {  // B_k = diag(b^{-(N-k)/N} I, b^{(N-k)/N})
    const double e = static_cast<double>(N - k) * one_over_N;
    Field Bk = Field::matrix(b.grid_ptr(), n, "B_" + std::to_string(k));
    for (std::size_t node = 0; node < g.node_count(); ++node) {
      const double p = std::pow(b.at(node), e);
      for (int r = 0; r < n - 1; ++r) Bk.at(node, r * n + r) = 1.0 / p;
      Bk.at(node, n * n - 1) = p;
    }
    return Bk;
  };

  Field A_k = diag_stage(0);
  double lambda_prev = ellipticity_constants(A_k).lambda;
  rep.lambda_initial = lambda_prev;
  rep.ellipticity_chain = 1.0;

  for (int k = 1; k <= N; ++k) {
    Field A_next = conjugate(A_k, *rho);
    Field B_next = diag_stage(k);

    // check the constructed diagonal against the uncomposed product path
    double dev = 0;
    const Field B_prev = diag_stage(k - 1);
    for (std::size_t node = 0; node < g.node_count(); ++node) {
      const double hv = rho->h().at(node);
      for (int r = 0; r < n - 1; ++r)
        dev = std::max(dev, std::fabs(hv * B_prev.at(node, r * n + r) - B_next.at(node, r * n + r)));
      dev = std::max(dev, std::fabs(B_prev.at(node, n * n - 1) / hv - B_next.at(node, n * n - 1)));
    }
    if (dev > 1e-6)
      throw PreconditionError("diagonal stage " + std::to_string(k) + ": stage form deviates");

    Field C_next = A_next - B_next;

    StageRecord rec;
    rec.k = N - k;
    rec.map = rho->certificate();
    rec.last_row_dev = dev;
    rec.sup_tgrad_h = sup_norm(rho->tgrad_h());
    if (opts.with_carleson_diagnostics) {
      rec.cm_tgrad_B = cmsup_constant(t_gradient(B_next)).constant;
      rec.cm_C = cmsup_constant(C_next).constant;
    }
    const EllipticityReport ell = ellipticity_constants(A_next);
    rec.lambda = ell.lambda;
    rec.Lambda = ell.Lambda;
    rep.ellipticity_chain *= rho->certificate().ellipticity_factor;
    lambda_prev = ell.lambda;
    rep.stages.push_back(rec);
    rep.map.push_applied_first(rho);

    if (k == N) {
      rep.lambda_final = ell.lambda;
      rep.M_final = cmsup_constant(C_next).constant;  // = cmsup(A_N - I)
      rep.last_row_exact = true;
      for (std::size_t node = 0; node < g.node_count() && rep.last_row_exact; ++node) {
        for (int cc = 0; cc < n - 1; ++cc)
          if (B_next.at(node, (n - 1) * n + cc) != 0.0) rep.last_row_exact = false;
        if (B_next.at(node, n * n - 1) != 1.0) rep.last_row_exact = false;
      }
      rep.B_final = std::make_shared<Field>(std::move(B_next));
      rep.C_final = std::make_shared<Field>(std::move(C_next));
      rep.B_final->set_name("B_final");
      rep.C_final->set_name("C_final");
    }
    A_k = std::move(A_next);
  }
  rep.ratio = rep.M_final / (rep.M_initial + 1.0);
  return rep;
}

}  // namespace dkp
