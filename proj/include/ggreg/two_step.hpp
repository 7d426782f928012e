#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ggreg/common.hpp"
#include "ggreg/graph_regression.hpp"

namespace ggreg::twostep {

struct PipelineConfig {
  // Mean-model penalty: fixed value, or per-row BIC grid when unset.
  std::optional<double> lambda1;

  // Node tuning grids. An empty ratio_grid means the default
  // {0.5, 1, sqrt(p-1)}.
  int lambda_grid_size = 30;
  double lambda_min_ratio = 0.01;
  std::vector<double> ratio_grid;

  graph::SymmetrizeRule rule = graph::SymmetrizeRule::kMax;
  bool standardize_covariates = true;
  std::uint64_t seed = 0;  // echoed into run outputs; fitting is deterministic

  double tolerance = 1e-8;
  int max_iterations = 10000;
  int threads = 1;
};

/// Covariate centering/scaling applied before both steps, recorded so the
/// reported coefficients can refer to raw covariates.
struct Standardization {
  Vector covariate_means;
  Vector covariate_scales;
  Vector x_means;  // column means removed from X before step 1
};

struct FittedModel {
  Matrix gamma_hat;                       // p x q, raw covariate scale
  std::vector<graph::NodeFit> node_fits;  // raw covariate scale
  graph::PrecisionModel precision;
  std::optional<Standardization> standardization;
};

/// Step 1: row-wise lasso of X on U. With `lambda1` set every row uses
/// that penalty; otherwise each row picks its lambda by BIC over a
/// descending grid from that row's lambda_max.
Matrix estimate_gamma(const Matrix& X, const Matrix& U,
                      std::optional<double> lambda1,
                      const PipelineConfig& config = {});

/// Zhat = X - U * gamma^T.
Matrix residualize(const Matrix& X, const Matrix& U, const Matrix& gamma);

/// Raw-covariate coefficients from a fit on standardized covariates:
/// beta_{jkh} maps to beta_{jkh} / (sd(u_h) * sd_k) for h >= 1 and
/// beta_{jk0} to (beta_{jk0} - sum_h (mean(u_h)/sd(u_h)) beta_{jkh}) / sd_k,
/// where sd_k is the residual-column scale (all ones when residuals were
/// not rescaled).
Vector back_transform_beta(const Vector& beta_std,
                           const graph::NodeLayout& layout,
                           const Vector& cov_means, const Vector& cov_scales,
                           const Vector& residual_scales);

/// gamma_{jh} maps to gamma_{jh} / sd(u_h).
Matrix back_transform_gamma(const Matrix& gamma_std,
                            const Vector& cov_scales);

/// Full two-step fit: mean model, residualization, per-node BIC-tuned
/// sparse group lasso, symmetrization. Coefficients in the returned model
/// always refer to raw covariates.
FittedModel fit_pipeline(const Matrix& X, const Matrix& U,
                         const PipelineConfig& config);

/// Node-objective variants sharing the two-step pipeline. kLassoOnly
/// drops the group term (ratio grid {0}); kGroupLassoBaseline uses one
/// scalar multiplying an l1 penalty on group 0 plus a sqrt(p-1)-weighted
/// group norm on groups 1..q.
enum class NodePenaltyShape {
  kSparseGroupLasso,
  kLassoOnly,
  kGroupLassoBaseline,
};

FittedModel fit_pipeline_shaped(const Matrix& X, const Matrix& U,
                                const PipelineConfig& config,
                                NodePenaltyShape shape);

}  // namespace ggreg::twostep
