#pragma once

#include <optional>
#include <vector>

#include "ggreg/common.hpp"

namespace ggreg::sgl {

/// Penalized least-squares problem
///
///   min_b  (1/2n) ||y - X b||^2 + lambda ||w .* b||_1
///          + lambda_group * sum_{h in penalized} g_h ||b_(h)||_2
///
/// Columns are partitioned into disjoint blocks; blocks listed in
/// `penalized_groups` carry the group-norm term, the rest only the
/// element-wise term.
struct DesignProblem {
  Matrix design;                          // n x d
  Vector response;                        // n
  std::vector<std::vector<int>> groups;   // disjoint cover of {0,...,d-1}
  std::vector<int> penalized_groups;      // indices into `groups`

  int n() const { return static_cast<int>(design.rows()); }
  int dim() const { return static_cast<int>(design.cols()); }

  /// Throws on violated invariants (non-finite data, bad partition).
  void validate() const;
};

struct PenaltyConfig {
  double lambda_l1 = 0.0;
  double lambda_group = 0.0;
  double tolerance = 1e-8;      // relative objective-change stopping rule
  int max_iterations = 10000;

  // Optional structure weights; empty means all ones. `l1_weights` has one
  // entry per column, `group_weights` one entry per block. The plain
  // sparse group lasso leaves both empty; the group-lasso baseline of the
  // evaluation harness uses them.
  Vector l1_weights;
  Vector group_weights;
};

struct SolverResult {
  Vector coefficients;
  double objective_value = 0.0;
  int iterations = 0;
  bool converged = false;
  double kkt_residual = 0.0;
  std::vector<double> objective_trace;  // objective after each sweep
};

/// sign(x) * max(|x| - t, 0)
inline double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

/// Proximal map of t*||.||_2: v * max(0, 1 - t/||v||_2).
Vector group_prox(const Vector& v, double t);

/// Full objective at beta.
double objective(const DesignProblem& problem, const PenaltyConfig& penalty,
                 const Vector& beta);

/// Blockwise coordinate descent over a fixed problem. Reusable across
/// penalty values; block Gram matrices and Lipschitz constants are cached
/// between calls, which is what makes warm-started tuning paths cheap.
/// The problem matrix must outlive the solver.
class PathSolver {
 public:
  explicit PathSolver(const DesignProblem& problem);

  SolverResult fit(const PenaltyConfig& penalty,
                   const std::optional<Vector>& warm_start = std::nullopt);

 private:
  void sweep(const PenaltyConfig& penalty, bool active_only);
  void update_unpenalized_block(const PenaltyConfig& penalty, int b,
                                bool active_only);
  void update_penalized_block(const PenaltyConfig& penalty, int b,
                              bool active_only);
  void ensure_gram(int b);
  double current_objective(const PenaltyConfig& penalty) const;

  const DesignProblem& problem_;
  double n_;
  double gradient_scale_ = 0.0;
  std::vector<bool> is_penalized_;
  std::vector<Matrix> gram_;
  std::vector<double> lipschitz_;
  Vector col_sq_;
  Vector beta_;
  Vector residual_;
};

/// One-shot solve: coordinate descent on unpenalized blocks, block
/// screening plus accelerated proximal gradient on penalized blocks.
SolverResult fit(const DesignProblem& problem, const PenaltyConfig& penalty,
                 const std::optional<Vector>& warm_start = std::nullopt);

/// Maximum stationarity violation of `beta` for the problem's
/// Karush-Kuhn-Tucker conditions. Zero at an exact optimum.
double check_kkt(const DesignProblem& problem, const PenaltyConfig& penalty,
                 const Vector& beta);

/// Smallest lambda_l1 at which the all-zero vector is optimal, for the
/// penalty shape `shape` with lambda_group = group_ratio * lambda_l1.
double lambda_max(const DesignProblem& problem, const PenaltyConfig& shape,
                  double group_ratio);

/// Warm-started fits along a strictly descending lambda grid;
/// lambda_group is taken from `penalty` unchanged.
std::vector<SolverResult> lasso_path(const DesignProblem& problem,
                                     const PenaltyConfig& penalty,
                                     const std::vector<double>& lambdas);

}  // namespace ggreg::sgl
