#include "ggreg/two_step.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ggreg/parallel.hpp"

namespace ggreg::twostep {

namespace {

/// Plain lasso on a fixed design, tuned by BIC over a warm-started
/// descending grid. Ties go to the larger lambda.
Vector lasso_row_bic(const sgl::DesignProblem& problem,
                     const PipelineConfig& config) {
  sgl::PathSolver solver(problem);
  sgl::PenaltyConfig penalty;
  penalty.tolerance = config.tolerance;
  penalty.max_iterations = config.max_iterations;

  const double lmax = sgl::lambda_max(problem, penalty, 0.0);
  if (lmax <= 0.0) return Vector::Zero(problem.dim());
  const auto grid = graph::make_lambda_grid(lmax, config.lambda_grid_size,
                                            config.lambda_min_ratio);
  const double n = static_cast<double>(problem.n());

  bool found = false;
  double best_bic = 0.0, best_lambda = 0.0;
  Vector best_beta = Vector::Zero(problem.dim());
  std::optional<Vector> warm;
  for (double lambda : grid) {
    penalty.lambda_l1 = lambda;
    const sgl::SolverResult result = solver.fit(penalty, warm);
    warm = result.coefficients;
    const double loss =
        result.objective_value -
        lambda * result.coefficients.lpNorm<1>();
    if (loss <= 0.0) continue;
    int s = 0;
    for (int l = 0; l < result.coefficients.size(); ++l) {
      if (result.coefficients(l) != 0.0) ++s;
    }
    const double bic = n * std::log(loss) + s * std::log(n);
    if (!found || bic < best_bic ||
        (bic == best_bic && lambda > best_lambda)) {
      found = true;
      best_bic = bic;
      best_lambda = lambda;
      best_beta = result.coefficients;
    }
  }
  // All candidates interpolating exactly can only happen on degenerate
  // inputs; fall back to the sparsest candidate.
  return best_beta;
}

sgl::DesignProblem row_problem(const Matrix& U, const Vector& response) {
  sgl::DesignProblem problem;
  problem.design = U;
  problem.response = response;
  problem.groups.resize(1);
  problem.groups[0].resize(U.cols());
  for (int l = 0; l < U.cols(); ++l) problem.groups[0][l] = l;
  return problem;
}

std::vector<double> default_ratio_grid(int p) {
  return {0.5, 1.0, std::sqrt(static_cast<double>(p - 1))};
}

}  // namespace

Matrix estimate_gamma(const Matrix& X, const Matrix& U,
                      std::optional<double> lambda1,
                      const PipelineConfig& config) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  const int q = static_cast<int>(U.cols());
  if (U.rows() != n) throw DimensionMismatch("X and U row counts differ");
  require_finite(X, "X");
  require_finite(U, "U");
  if (lambda1 && *lambda1 < 0.0) throw Error("lambda1 must be nonnegative");

  Matrix gamma = Matrix::Zero(p, q);
  if (q == 0) return gamma;

  std::vector<Vector> rows(p);
  parallel_for(p, config.threads, [&](int j) {
    const sgl::DesignProblem problem = row_problem(U, X.col(j));
    if (lambda1) {
      sgl::PenaltyConfig penalty;
      penalty.lambda_l1 = *lambda1;
      penalty.tolerance = config.tolerance;
      penalty.max_iterations = config.max_iterations;
      rows[j] = sgl::fit(problem, penalty).coefficients;
    } else {
      rows[j] = lasso_row_bic(problem, config);
    }
  });
  for (int j = 0; j < p; ++j) gamma.row(j) = rows[j].transpose();
  return gamma;
}

Matrix residualize(const Matrix& X, const Matrix& U, const Matrix& gamma) {
  if (U.rows() != X.rows()) {
    throw DimensionMismatch("X and U row counts differ");
  }
  if (gamma.rows() != X.cols() || gamma.cols() != U.cols()) {
    throw DimensionMismatch("gamma must be p x q");
  }
  return X - U * gamma.transpose();
}

Vector back_transform_beta(const Vector& beta_std,
                           const graph::NodeLayout& layout,
                           const Vector& cov_means, const Vector& cov_scales,
                           const Vector& residual_scales) {
  if (cov_means.size() != layout.q || cov_scales.size() != layout.q) {
    throw DimensionMismatch("covariate mean/scale length must equal q");
  }
  if (residual_scales.size() != layout.p) {
    throw DimensionMismatch("residual scale length must equal p");
  }
  for (int h = 0; h < layout.q; ++h) {
    if (!(cov_scales(h) > 0.0)) throw ZeroScale("covariate scale must be positive");
  }
  for (int k = 0; k < layout.p; ++k) {
    if (!(residual_scales(k) > 0.0)) throw ZeroScale("residual scale must be positive");
  }
  if (beta_std.size() != layout.columns()) {
    throw DimensionMismatch("beta length does not match the layout");
  }

  const int m = layout.p - 1;
  Vector raw(beta_std.size());
  for (int t = 0; t < m; ++t) {
    const int k = t < layout.j ? t : t + 1;
    double base = beta_std(t);
    for (int h = 1; h <= layout.q; ++h) {
      base -= cov_means(h - 1) / cov_scales(h - 1) * beta_std(h * m + t);
    }
    raw(t) = base / residual_scales(k);
    for (int h = 1; h <= layout.q; ++h) {
      raw(h * m + t) =
          beta_std(h * m + t) / (cov_scales(h - 1) * residual_scales(k));
    }
  }
  return raw;
}

Matrix back_transform_gamma(const Matrix& gamma_std,
                            const Vector& cov_scales) {
  if (gamma_std.cols() != cov_scales.size()) {
    throw DimensionMismatch("gamma columns must match covariate scales");
  }
  Matrix raw = gamma_std;
  for (int h = 0; h < raw.cols(); ++h) {
    if (!(cov_scales(h) > 0.0)) throw ZeroScale("covariate scale must be positive");
    raw.col(h) /= cov_scales(h);
  }
  return raw;
}

FittedModel fit_pipeline(const Matrix& X, const Matrix& U,
                         const PipelineConfig& config) {
  return fit_pipeline_shaped(X, U, config,
                             NodePenaltyShape::kSparseGroupLasso);
}

FittedModel fit_pipeline_shaped(const Matrix& X, const Matrix& U,
                                const PipelineConfig& config,
                                NodePenaltyShape shape) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  const int q = static_cast<int>(U.cols());
  if (n < 3) throw DimensionMismatch("need at least 3 samples");
  if (p < 2) throw DimensionMismatch("need at least 2 nodes");
  if (U.rows() != n) throw DimensionMismatch("X and U row counts differ");
  require_finite(X, "X");
  require_finite(U, "U");

  // Constant covariate columns make the model unidentifiable; reject them
  // up front instead of silently dropping.
  Vector cov_means(q), cov_scales(q);
  for (int h = 0; h < q; ++h) {
    cov_means(h) = U.col(h).mean();
    const double ss = (U.col(h).array() - cov_means(h)).square().sum();
    cov_scales(h) = std::sqrt(ss / (n - 1));
    if (cov_scales(h) == 0.0) {
      throw ZeroScale("covariate column " + std::to_string(h) +
                      " is constant");
    }
  }

  const bool standardize = config.standardize_covariates && q > 0;

  Matrix x_work = X;
  Matrix u_work = U;
  std::optional<Standardization> record;
  if (standardize) {
    Standardization s;
    s.covariate_means = cov_means;
    s.covariate_scales = cov_scales;
    s.x_means = Vector(p);
    for (int j = 0; j < p; ++j) {
      s.x_means(j) = X.col(j).mean();
      x_work.col(j).array() -= s.x_means(j);
    }
    for (int h = 0; h < q; ++h) {
      u_work.col(h) = (U.col(h).array() - cov_means(h)) / cov_scales(h);
    }
    record = std::move(s);
  }

  // Step 1: mean model and residuals.
  Matrix gamma_work = estimate_gamma(x_work, u_work, config.lambda1, config);
  Matrix z_hat = residualize(x_work, u_work, gamma_work);

  // Step 2: node-wise penalized regressions on the residuals.
  std::vector<double> ratios;
  switch (shape) {
    case NodePenaltyShape::kSparseGroupLasso:
      ratios = config.ratio_grid.empty() ? default_ratio_grid(p)
                                         : config.ratio_grid;
      break;
    case NodePenaltyShape::kLassoOnly:
      ratios = {0.0};
      break;
    case NodePenaltyShape::kGroupLassoBaseline:
      ratios = {1.0};
      break;
  }
  graph::TuneOptions tune;
  tune.tolerance = config.tolerance;
  tune.max_iterations = config.max_iterations;
  if (shape == NodePenaltyShape::kGroupLassoBaseline) {
    const int m = p - 1;
    tune.l1_weights = Vector::Zero(m * (q + 1));
    tune.l1_weights.head(m).setOnes();
    tune.group_weights =
        Vector::Constant(q + 1, std::sqrt(static_cast<double>(m)));
  }

  std::vector<graph::NodeFit> fits(p);
  std::vector<std::string> failures(p);
  parallel_for(p, config.threads, [&](int j) {
    try {
      const sgl::DesignProblem problem = graph::build_node_design(z_hat, u_work, j);
      const graph::NodeLayout layout{p, q, j};
      sgl::PenaltyConfig penalty_shape;
      penalty_shape.l1_weights = tune.l1_weights;
      penalty_shape.group_weights = tune.group_weights;
      const double group_ratio =
          shape == NodePenaltyShape::kGroupLassoBaseline ? 1.0 : 0.0;
      const double lmax = sgl::lambda_max(problem, penalty_shape, group_ratio);
      if (lmax <= 0.0) {
        // Degenerate all-zero design; the empty model is optimal.
        graph::NodeFit fit;
        fit.layout = layout;
        fit.beta = Vector::Zero(layout.columns());
        fit.noise_variance = graph::estimate_noise_variance(problem, {});
        fit.bic = std::numeric_limits<double>::quiet_NaN();
        fits[j] = std::move(fit);
        return;
      }
      const auto grid = graph::make_lambda_grid(
          lmax, config.lambda_grid_size, config.lambda_min_ratio);
      fits[j] = graph::tune_node_bic(problem, layout, grid, ratios, tune);
    } catch (const std::exception& e) {
      failures[j] = e.what();
    }
  });
  for (int j = 0; j < p; ++j) {
    if (!failures[j].empty()) {
      throw PipelineAbort("node " + std::to_string(j) +
                          " failed: " + failures[j]);
    }
  }

  FittedModel model;
  if (standardize) {
    const Vector ones = Vector::Ones(p);
    for (auto& fit : fits) {
      fit.beta = back_transform_beta(fit.beta, fit.layout, cov_means,
                                     cov_scales, ones);
      fit.support.clear();
      for (int l = 0; l < fit.beta.size(); ++l) {
        if (fit.beta(l) != 0.0) fit.support.push_back(l);
      }
      fit.support_size = static_cast<int>(fit.support.size());
      fit.group_support.clear();
      const int m = fit.layout.p - 1;
      for (int h = 1; h <= fit.layout.q; ++h) {
        for (int t = 0; t < m; ++t) {
          if (fit.beta(h * m + t) != 0.0) {
            fit.group_support.push_back(h);
            break;
          }
        }
      }
    }
    model.gamma_hat = back_transform_gamma(gamma_work, cov_scales);
  } else {
    model.gamma_hat = gamma_work;
  }
  model.precision = graph::assemble_precision(fits, config.rule);
  model.node_fits = std::move(fits);
  model.standardization = std::move(record);
  return model;
}

}  // namespace ggreg::twostep
