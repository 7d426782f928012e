#include "ggreg/graph_regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

namespace ggreg::graph {

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<int> nonzero_indices(const Vector& beta) {
  std::vector<int> support;
  for (int l = 0; l < beta.size(); ++l) {
    if (beta(l) != 0.0) support.push_back(l);
  }
  return support;
}

std::vector<int> nonzero_groups(const Vector& beta, const NodeLayout& layout) {
  std::vector<int> gs;
  const int m = layout.p - 1;
  for (int h = 1; h <= layout.q; ++h) {
    bool any = false;
    for (int t = 0; t < m; ++t) {
      if (beta(h * m + t) != 0.0) {
        any = true;
        break;
      }
    }
    if (any) gs.push_back(h);
  }
  return gs;
}

double residual_loss(const sgl::DesignProblem& problem, const Vector& beta) {
  const double n = static_cast<double>(problem.n());
  return (problem.response - problem.design * beta).squaredNorm() / (2.0 * n);
}

double bic_of(double loss, int support_size, int n) {
  if (loss <= 0.0) return kNaN;
  return n * std::log(loss) + support_size * std::log(static_cast<double>(n));
}

NodeFit finish_node_fit(const sgl::DesignProblem& problem,
                        const NodeLayout& layout, const Vector& beta,
                        double lambda, double lambda_group) {
  NodeFit fit;
  fit.layout = layout;
  fit.beta = beta;
  fit.support = nonzero_indices(beta);
  fit.support_size = static_cast<int>(fit.support.size());
  fit.group_support = nonzero_groups(beta, layout);
  fit.noise_variance = estimate_noise_variance(problem, fit.support);
  fit.chosen_lambda = lambda;
  fit.chosen_lambda_group = lambda_group;
  fit.bic = bic_of(residual_loss(problem, beta), fit.support_size, problem.n());
  return fit;
}

}  // namespace

sgl::DesignProblem build_node_design(const Matrix& Z, const Matrix& U, int j) {
  const int n = static_cast<int>(Z.rows());
  const int p = static_cast<int>(Z.cols());
  const int q = static_cast<int>(U.cols());
  if (U.rows() != n) {
    throw DimensionMismatch("Z and U row counts differ");
  }
  if (p < 2) throw DimensionMismatch("need at least two nodes");
  if (j < 0 || j >= p) throw DimensionMismatch("node index out of range");
  require_finite(Z, "Z");
  require_finite(U, "U");

  const NodeLayout layout{p, q, j};
  const int m = p - 1;
  sgl::DesignProblem problem;
  problem.response = Z.col(j);
  problem.design = Matrix(n, layout.columns());
  for (int h = 0; h <= q; ++h) {
    for (int t = 0; t < m; ++t) {
      const int k = t < j ? t : t + 1;
      if (h == 0) {
        problem.design.col(t) = Z.col(k);
      } else {
        problem.design.col(h * m + t) = U.col(h - 1).cwiseProduct(Z.col(k));
      }
    }
  }
  problem.groups.resize(q + 1);
  for (int h = 0; h <= q; ++h) {
    problem.groups[h].resize(m);
    for (int t = 0; t < m; ++t) problem.groups[h][t] = h * m + t;
  }
  for (int h = 1; h <= q; ++h) problem.penalized_groups.push_back(h);
  return problem;
}

double estimate_noise_variance(const sgl::DesignProblem& problem,
                               const std::vector<int>& support) {
  const int n = problem.n();
  const int s = static_cast<int>(support.size());
  if (s >= n) {
    throw SupportTooLarge("support size " + std::to_string(s) +
                          " must be below sample size " + std::to_string(n));
  }
  const Vector& y = problem.response;
  if (s == 0) return y.squaredNorm() / static_cast<double>(n);

  Matrix sub(n, s);
  for (int i = 0; i < s; ++i) sub.col(i) = problem.design.col(support[i]);
  Eigen::ColPivHouseholderQR<Matrix> qr(sub);
  qr.setThreshold(1e-10);  // relative to the largest pivot
  const Vector coef = qr.solve(y);
  const double rss = (y - sub * coef).squaredNorm();
  return rss / static_cast<double>(n - s);
}

NodeFit fit_node(const Matrix& Z, const Matrix& U, int j,
                 const sgl::PenaltyConfig& penalty) {
  const sgl::DesignProblem problem = build_node_design(Z, U, j);
  const NodeLayout layout{static_cast<int>(Z.cols()),
                          static_cast<int>(U.cols()), j};
  const sgl::SolverResult result = sgl::fit(problem, penalty);
  return finish_node_fit(problem, layout, result.coefficients,
                         penalty.lambda_l1, penalty.lambda_group);
}

std::vector<double> make_lambda_grid(double lambda_max, int size,
                                     double min_ratio) {
  std::vector<double> grid(size);
  if (size == 1) {
    grid[0] = lambda_max;
    return grid;
  }
  const double lo = std::log(lambda_max * min_ratio);
  const double hi = std::log(lambda_max);
  for (int i = 0; i < size; ++i) {
    grid[i] = std::exp(hi + (lo - hi) * i / (size - 1));
  }
  return grid;
}

NodeFit tune_node_bic(const sgl::DesignProblem& problem,
                      const NodeLayout& layout,
                      const std::vector<double>& lambda_grid,
                      const std::vector<double>& ratio_grid,
                      const TuneOptions& options) {
  if (lambda_grid.empty() || ratio_grid.empty()) {
    throw EmptyGrid("tuning grids must be nonempty");
  }

  sgl::PathSolver solver(problem);
  sgl::PenaltyConfig penalty;
  penalty.tolerance = options.tolerance;
  penalty.max_iterations = options.max_iterations;
  penalty.l1_weights = options.l1_weights;
  penalty.group_weights = options.group_weights;

  bool found = false;
  double best_bic = 0.0, best_lambda = 0.0, best_ratio = 0.0;
  Vector best_beta;

  for (double ratio : ratio_grid) {
    std::optional<Vector> warm;
    for (double lambda : lambda_grid) {
      penalty.lambda_l1 = lambda;
      penalty.lambda_group = ratio * lambda;
      const sgl::SolverResult result = solver.fit(penalty, warm);
      warm = result.coefficients;

      // Loss recovered from the tracked objective by subtracting the
      // penalty terms; avoids an extra full-design product per candidate.
      double l1 = 0.0;
      for (int l = 0; l < result.coefficients.size(); ++l) {
        const double w =
            penalty.l1_weights.size() ? penalty.l1_weights(l) : 1.0;
        l1 += w * std::abs(result.coefficients(l));
      }
      double grp = 0.0;
      for (int b : problem.penalized_groups) {
        double sq = 0.0;
        for (int l : problem.groups[b]) {
          sq += result.coefficients(l) * result.coefficients(l);
        }
        const double w =
            penalty.group_weights.size() ? penalty.group_weights(b) : 1.0;
        grp += w * std::sqrt(sq);
      }
      const double loss = result.objective_value - penalty.lambda_l1 * l1 -
                          penalty.lambda_group * grp;
      if (loss <= 0.0) continue;  // exact interpolation, BIC undefined

      int s = 0;
      for (int l = 0; l < result.coefficients.size(); ++l) {
        if (result.coefficients(l) != 0.0) ++s;
      }
      const double bic = bic_of(loss, s, problem.n());

      const bool better =
          !found || bic < best_bic ||
          (bic == best_bic &&
           (lambda > best_lambda ||
            (lambda == best_lambda && ratio > best_ratio)));
      if (better) {
        found = true;
        best_bic = bic;
        best_lambda = lambda;
        best_ratio = ratio;
        best_beta = result.coefficients;
      }
    }
  }
  if (!found) {
    throw AllFitsDegenerate(
        "every tuning candidate interpolated the response exactly");
  }
  NodeFit fit = finish_node_fit(problem, layout, best_beta, best_lambda,
                                best_ratio * best_lambda);
  fit.bic = best_bic;
  return fit;
}

NodeFit select_tuning_bic(const Matrix& Z, const Matrix& U, int j,
                          const std::vector<double>& lambda_grid,
                          const std::vector<double>& ratio_grid,
                          const TuneOptions& options) {
  const sgl::DesignProblem problem = build_node_design(Z, U, j);
  const NodeLayout layout{static_cast<int>(Z.cols()),
                          static_cast<int>(U.cols()), j};
  return tune_node_bic(problem, layout, lambda_grid, ratio_grid, options);
}

double PrecisionModel::value_at(int j, int k, int h) const {
  if (j > k) std::swap(j, k);
  const PrecisionEdge probe{j, k, h, 0.0};
  auto it = std::lower_bound(
      edges.begin(), edges.end(), probe,
      [](const PrecisionEdge& a, const PrecisionEdge& b) {
        return std::tie(a.j, a.k, a.h) < std::tie(b.j, b.k, b.h);
      });
  if (it != edges.end() && it->j == j && it->k == k && it->h == h) {
    return it->value;
  }
  return 0.0;
}

void PrecisionModel::sort_edges() {
  std::sort(edges.begin(), edges.end(),
            [](const PrecisionEdge& a, const PrecisionEdge& b) {
              return std::tie(a.j, a.k, a.h) < std::tie(b.j, b.k, b.h);
            });
}

PrecisionModel assemble_precision(const std::vector<NodeFit>& node_fits,
                                  SymmetrizeRule rule) {
  const int p = static_cast<int>(node_fits.size());
  if (p < 1) throw DimensionMismatch("no node fits given");
  const int q = node_fits[0].layout.q;

  PrecisionModel model;
  model.p = p;
  model.q = q;
  model.sigma_diag = Vector(p);
  for (int j = 0; j < p; ++j) {
    if (node_fits[j].layout.j != j || node_fits[j].layout.p != p ||
        node_fits[j].layout.q != q) {
      throw DimensionMismatch("node fits must cover nodes 0..p-1 in order");
    }
    if (!(node_fits[j].noise_variance > 0.0)) {
      throw Error("noise variance must be positive to assemble the model");
    }
    model.sigma_diag(j) = 1.0 / node_fits[j].noise_variance;
  }

  for (int j = 0; j < p; ++j) {
    for (int k = j + 1; k < p; ++k) {
      for (int h = 0; h <= q; ++h) {
        const double a = model.sigma_diag(j) *
                         node_fits[j].beta(node_fits[j].layout.pair_to_column(k, h));
        const double b = model.sigma_diag(k) *
                         node_fits[k].beta(node_fits[k].layout.pair_to_column(j, h));
        double kept;
        if (rule == SymmetrizeRule::kMax) {
          kept = std::abs(a) >= std::abs(b) ? a : b;  // tie: smaller index j
        } else {
          kept = std::abs(a) <= std::abs(b) ? a : b;
        }
        if (kept != 0.0) {
          model.edges.push_back({j, k, h, kept});
        }
      }
    }
  }
  model.sort_edges();
  return model;
}

Matrix precision_at(const PrecisionModel& model, const Vector& u) {
  if (u.size() != model.q) {
    throw DimensionMismatch("covariate vector has wrong length");
  }
  require_finite(u, "u");
  Matrix omega = Matrix::Zero(model.p, model.p);
  for (const auto& e : model.edges) {
    omega(e.j, e.k) += e.h == 0 ? e.value : e.value * u(e.h - 1);
  }
  Matrix result = Matrix::Zero(model.p, model.p);
  for (int j = 0; j < model.p; ++j) result(j, j) = model.sigma_diag(j);
  for (int j = 0; j < model.p; ++j) {
    for (int k = j + 1; k < model.p; ++k) {
      const double value = -omega(j, k);
      result(j, k) = value;
      result(k, j) = value;
    }
  }
  return result;
}

std::vector<bool> check_pd_condition(const PrecisionModel& model,
                                     double u_bound) {
  if (u_bound <= 0.0) throw Error("u_bound must be positive");
  std::vector<double> mass(model.p, 0.0);
  for (const auto& e : model.edges) {
    mass[e.j] += std::abs(e.value);
    mass[e.k] += std::abs(e.value);
  }
  std::vector<bool> pass(model.p);
  for (int k = 0; k < model.p; ++k) {
    pass[k] = u_bound * mass[k] <= model.sigma_diag(k);
  }
  return pass;
}

std::pair<double, double> theoretical_penalties(int n, int p, int q, int s_j,
                                                int s_jg, double sigma_eps,
                                                double constant) {
  if (n < 1 || p < 1 || q < 1) {
    throw DimensionMismatch("n, p, q must be positive");
  }
  if (s_jg < 1 || s_jg > s_j) {
    throw InvalidSparsity("need 1 <= s_jg <= s_j");
  }
  const double e = std::exp(1.0);
  const double nd = static_cast<double>(n);
  const double lambda =
      constant * sigma_eps *
      std::sqrt(std::log(e * p) / nd +
                s_jg * std::log(e * q / s_jg) / (nd * s_j));
  const double lambda_g =
      std::sqrt(static_cast<double>(s_j) / s_jg) * lambda;
  return {lambda, lambda_g};
}

}  // namespace ggreg::graph
