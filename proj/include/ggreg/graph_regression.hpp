#pragma once

#include <utility>
#include <vector>

#include "ggreg/common.hpp"
#include "ggreg/sgl_solver.hpp"

namespace ggreg::graph {

/// Column bookkeeping for the node-j interaction design W_{-j}.
///
/// Columns are laid out group-contiguously: block h occupies columns
/// [h*(p-1), (h+1)*(p-1)), and within a block the p-1 columns run over the
/// other nodes k != j in increasing order. Block 0 holds the plain
/// residual columns z_k, block h >= 1 holds u_h .* z_k.
struct NodeLayout {
  int p = 0;
  int q = 0;
  int j = 0;

  int columns() const { return (p - 1) * (q + 1); }

  int pair_to_column(int k, int h) const {
    const int t = k < j ? k : k - 1;
    return h * (p - 1) + t;
  }

  /// Inverse map: column index -> (k, h).
  std::pair<int, int> column_to_pair(int c) const {
    const int h = c / (p - 1);
    const int t = c % (p - 1);
    const int k = t < j ? t : t + 1;
    return {k, h};
  }
};

/// Result of one node-wise regression.
struct NodeFit {
  NodeLayout layout;
  Vector beta;                     // length (p-1)(q+1)
  std::vector<int> support;        // column indices with beta != 0
  int support_size = 0;
  std::vector<int> group_support;  // h in [1, q] with a nonzero block
  double noise_variance = 0.0;
  double chosen_lambda = 0.0;
  double chosen_lambda_group = 0.0;
  double bic = 0.0;                // NaN when the residual loss is zero
};

struct PrecisionEdge {
  int j = 0;  // j < k
  int k = 0;
  int h = 0;  // 0 = population level, h >= 1 = covariate h
  double value = 0.0;
};

/// Covariate-dependent precision matrix: diagonal sigma^{jj} plus the
/// symmetric coefficient tensor beta'_{jkh} stored as nonzero edges.
struct PrecisionModel {
  int p = 0;
  int q = 0;
  Vector sigma_diag;
  std::vector<PrecisionEdge> edges;  // sorted by (j, k, h), values nonzero

  double value_at(int j, int k, int h) const;
  void sort_edges();
};

enum class SymmetrizeRule { kMax, kMin };

/// Builds the node-j design problem from residuals Z and covariates U.
/// Group 0 is excluded from the group penalty.
sgl::DesignProblem build_node_design(const Matrix& Z, const Matrix& U, int j);

/// Residual variance via least-squares refit on the support columns:
/// ||y - P_S y||^2 / (n - |S|). QR-based with rank tolerance, so collinear
/// support columns are fine.
double estimate_noise_variance(const sgl::DesignProblem& problem,
                               const std::vector<int>& support);

/// Single sparse-group-lasso fit of node j at a fixed penalty.
NodeFit fit_node(const Matrix& Z, const Matrix& U, int j,
                 const sgl::PenaltyConfig& penalty);

/// Descending log-spaced grid from lambda_max down to
/// lambda_max * min_ratio.
std::vector<double> make_lambda_grid(double lambda_max, int size,
                                     double min_ratio);

/// Options shared by the BIC tuning loops.
struct TuneOptions {
  double tolerance = 1e-8;
  int max_iterations = 10000;
  // Penalty-shape weights forwarded to the solver (used by the
  // group-lasso baseline; empty for the plain sparse group lasso).
  Vector l1_weights;
  Vector group_weights;
};

/// BIC tuning over a (lambda, ratio) grid on an already-built problem,
/// warm-started along each descending lambda path. lambda_group is
/// ratio * lambda. The returned fit minimizes n*log(loss) + s*log(n);
/// ties go to larger lambda, then larger ratio.
NodeFit tune_node_bic(const sgl::DesignProblem& problem,
                      const NodeLayout& layout,
                      const std::vector<double>& lambda_grid,
                      const std::vector<double>& ratio_grid,
                      const TuneOptions& options = {});

/// Spec'd entry point: builds the design for node j and tunes by BIC.
NodeFit select_tuning_bic(const Matrix& Z, const Matrix& U, int j,
                          const std::vector<double>& lambda_grid,
                          const std::vector<double>& ratio_grid,
                          const TuneOptions& options = {});

/// Symmetrizes per-node estimates into a PrecisionModel. Entries are first
/// rescaled to the precision scale (beta0 = sigma^{jj} * beta); the MAX
/// rule keeps the larger-magnitude of the (j,k) and (k,j) estimates, MIN
/// the smaller. On a magnitude tie the estimate from the smaller node
/// index wins.
PrecisionModel assemble_precision(const std::vector<NodeFit>& node_fits,
                                  SymmetrizeRule rule);

/// Dense Omega(u): diagonal sigma^{jj}, off-diagonal
/// -(beta'_{jk0} + sum_h beta'_{jkh} u_h). Exactly symmetric.
Matrix precision_at(const PrecisionModel& model, const Vector& u);

/// Per-node sufficient condition for positive definiteness over
/// ||u||_inf <= u_bound: u_bound * ||beta'_k||_1 <= sigma^{kk}.
std::vector<bool> check_pd_condition(const PrecisionModel& model,
                                     double u_bound);

/// Rate-driven tuning pair: lambda = C * sigma_eps *
/// sqrt(log(e*p)/n + s_jg*log(e*q/s_jg)/(n*s_j)) and
/// lambda_g = sqrt(s_j/s_jg) * lambda.
std::pair<double, double> theoretical_penalties(int n, int p, int q, int s_j,
                                                int s_jg, double sigma_eps,
                                                double constant = 1.0);

}  // namespace ggreg::graph
