#ifndef DKP_PIPELINE_HPP
#define DKP_PIPELINE_HPP

#include <memory>
#include <optional>

#include "dkp/changevar.hpp"
#include "dkp/mollify.hpp"

namespace dkp {

struct StageRecord {
  int k = 0;                    // stage index, counts down to 0
  MapCertificate map;           // certificate of rho_{k}
  double cm_tgrad_B = 0;        // cmsup of t grad B_k
  double cm_C = 0;              // cmsup of C_k
  double cm_majorant = 0;
  double lambda = 0, Lambda = 0;  // ellipticity of A_k
  double last_row_dev = 0;        // closed form vs product, stage form check
  double sup_tgrad_h = 0, sup_tgrad_v = 0;
};

struct PipelineReport {
  int N = 0;
  std::vector<StageRecord> stages;  // k = N-1 down to 0
  CompositeMap map;                 // total change of variable
  std::shared_ptr<Field> B_final, C_final;
  bool last_row_exact = false;  // final B last row is (0,...,0,1) bit-exact
  double M_initial = 0;         // cmsup of |t grad B| + |C| at entry to the iteration
  double M_final = 0;           // same measure for the final split
  double ratio = 0;             // M_final / (M_initial + 1)
  double lambda_initial = 0, lambda_final = 0;
  double ellipticity_chain = 0;  // prod of per-stage ellipticity factors
  std::optional<MollifyCertificate> mollify_cert;
};

struct PipelineOptions {
  std::optional<double> eps0;                       // override certification threshold
  int N_max = 1 << 16;
  bool skip_mollify = false;                        // only valid with an explicit split
  bool with_carleson_diagnostics = true;            // per-stage cmsup scans
};

// Smallest N such that, with h = b^{1/N} and v_k = (1/N) b^{-k/N} B3 for all
// 0 <= k <= N, the grid sup-norms satisfy
//   ||t grad h||_inf + max_k ||t grad v_k||_inf < eps0,
//   1/2 < h < 2,   max_k ||v_k||_inf <= 1.
// eps0 defaults per candidate to the map-certification threshold.
int choose_N(const Field& B, std::optional<double> eps0 = std::nullopt, int N_max = 1 << 16);

// The iterated reduction: conjugates away the last row of B across N
// certified stages, ending with last row exactly (0,...,0,1).
PipelineReport run_pipeline(const Field& A, std::optional<std::pair<Field, Field>> split = std::nullopt,
                            const PipelineOptions& opts = {});

// Diagonal variant for B = diag(b^{-1} I, b): v = 0, h = b^{1/N}; stages are
// checked against diag(b^{-(N-k)/N} I, b^{(N-k)/N}); reports cmsup(A_N - I).
PipelineReport run_diagonal_reduction(const Field& b, const PipelineOptions& opts = {});

// ---- higher-codimension conjugation (pointwise, no grid) ----

// Map rho(y,t) = (y + t v, h t) on R^n \ R^d: y in R^d, t in R^{n-d} (t != 0),
// v an (n-d) x d matrix, h a positive scalar. Derivatives of v and h may be
// supplied per variable (length n arrays); they default to zero.
struct HighCodimMap {
  int n = 0, d = 0;
  std::vector<std::vector<double>> v;               // (n-d) rows x d cols
  double h = 1.0;
  std::vector<std::vector<std::vector<double>>> dv; // [var][(n-d)][d], optional
  std::vector<double> dh;                           // [var], optional
};

using HighCodimMatrixEval =
    std::function<MatN(std::span<const double> y, std::span<const double> t)>;

// A_rho = h^{d+1-n} det(Jac) Jac^{-T} (A o rho) Jac^{-1} at one sample point.
MatN highcodim_conjugate(const HighCodimMatrixEval& A, const HighCodimMap& map,
                         std::span<const double> y, std::span<const double> t);

// The closed-form zeroth-order block transform: last (n-d) rows are
// (B3 - b h^{-1} v, b h^{-1} I).
MatN highcodim_block_form(const MatN& B, const HighCodimMap& map);

// A matrix-valued dilation H is accepted only when H = h I; anything else is
// rejected (the weight h^{d+1-n} cancels det(Jac) only in that form).
MatN highcodim_conjugate_matrix_dilation(const HighCodimMatrixEval& A, const HighCodimMap& map,
                                         const MatN& H, std::span<const double> y,
                                         std::span<const double> t);

}  // namespace dkp

#endif
