// Independent reference implementations used as test oracles. These stay
// deliberately naive (plain proximal gradient, textbook coordinate
// descent) and share no code with the production solver.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "ggreg/rng.hpp"
#include "ggreg/sgl_solver.hpp"

namespace oracle {

using ggreg::Matrix;
using ggreg::Vector;

inline double soft(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

/// Plain (unaccelerated) proximal gradient on the full sparse group lasso
/// objective, fixed step 1/L, fixed iteration count.
inline Vector ista_reference(const ggreg::sgl::DesignProblem& problem,
                             double lambda, double lambda_group, long iters,
                             const Vector& l1_weights = Vector(),
                             const Vector& group_weights = Vector()) {
  const int d = problem.dim();
  const double n = static_cast<double>(problem.n());
  const Matrix gram = problem.design.transpose() * problem.design / n;
  const Vector xty = problem.design.transpose() * problem.response / n;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  const double L = std::max(eig.eigenvalues().maxCoeff(), 1e-12);
  const double step = 1.0 / L;

  std::vector<bool> penalized(problem.groups.size(), false);
  for (int b : problem.penalized_groups) penalized[b] = true;

  Vector beta = Vector::Zero(d);
  for (long it = 0; it < iters; ++it) {
    Vector v = beta - step * (gram * beta - xty);
    for (std::size_t b = 0; b < problem.groups.size(); ++b) {
      const auto& idx = problem.groups[b];
      for (int l : idx) {
        const double w = l1_weights.size() ? l1_weights(l) : 1.0;
        v(l) = soft(v(l), step * lambda * w);
      }
      if (penalized[b]) {
        const double gw =
            group_weights.size() ? group_weights(static_cast<int>(b)) : 1.0;
        double norm = 0.0;
        for (int l : idx) norm += v(l) * v(l);
        norm = std::sqrt(norm);
        const double t = step * lambda_group * gw;
        if (norm <= t) {
          for (int l : idx) v(l) = 0.0;
        } else {
          const double shrink = 1.0 - t / norm;
          for (int l : idx) v(l) *= shrink;
        }
      }
    }
    beta = v;
  }
  return beta;
}

/// Textbook cyclic coordinate-descent lasso.
inline Vector cd_lasso_reference(const Matrix& X, const Vector& y,
                                 double lambda, int max_iter = 100000,
                                 double tol = 1e-12) {
  const int p = static_cast<int>(X.cols());
  const double n = static_cast<double>(X.rows());
  Vector beta = Vector::Zero(p);
  Vector residual = y;
  Vector col_sq(p);
  for (int j = 0; j < p; ++j) col_sq(j) = X.col(j).squaredNorm() / n;
  for (int iter = 0; iter < max_iter; ++iter) {
    double max_change = 0.0;
    for (int j = 0; j < p; ++j) {
      if (col_sq(j) == 0.0) continue;
      const double rho = X.col(j).dot(residual) / n + col_sq(j) * beta(j);
      const double next = soft(rho, lambda) / col_sq(j);
      const double change = next - beta(j);
      if (change != 0.0) {
        residual -= X.col(j) * change;
        beta(j) = next;
        max_change = std::max(max_change, std::abs(change));
      }
    }
    if (max_change < tol) break;
  }
  return beta;
}

/// Random small problem with contiguous groups.
inline ggreg::sgl::DesignProblem random_problem(ggreg::Rng& rng, int n, int d,
                                                const std::vector<int>& sizes,
                                                bool penalize_first = false) {
  ggreg::sgl::DesignProblem problem;
  problem.design = Matrix(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) problem.design(i, j) = rng.normal();
  }
  problem.response = Vector(n);
  for (int i = 0; i < n; ++i) problem.response(i) = rng.normal();
  int at = 0;
  for (std::size_t b = 0; b < sizes.size(); ++b) {
    std::vector<int> block(sizes[b]);
    for (int t = 0; t < sizes[b]; ++t) block[t] = at++;
    problem.groups.push_back(std::move(block));
    if (penalize_first || b > 0) {
      problem.penalized_groups.push_back(static_cast<int>(b));
    }
  }
  return problem;
}

}  // namespace oracle
