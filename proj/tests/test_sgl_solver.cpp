#include <doctest.h>

#include <cmath>

#include "ggreg/rng.hpp"
#include "ggreg/sgl_solver.hpp"
#include "oracle.hpp"

using namespace ggreg;
using sgl::DesignProblem;
using sgl::PenaltyConfig;

namespace {

DesignProblem single_block_problem(const Matrix& X, const Vector& y) {
  DesignProblem problem;
  problem.design = X;
  problem.response = y;
  problem.groups.resize(1);
  for (int l = 0; l < X.cols(); ++l) problem.groups[0].push_back(l);
  return problem;
}

}  // namespace

TEST_CASE("soft_threshold closed form") {
  CHECK(sgl::soft_threshold(3.0, 1.0) == doctest::Approx(2.0));
  CHECK(sgl::soft_threshold(-0.5, 1.0) == 0.0);
  CHECK(sgl::soft_threshold(-3.0, 1.0) == doctest::Approx(-2.0));
  CHECK(sgl::soft_threshold(0.0, 0.0) == 0.0);
}

TEST_CASE("group_prox known points") {
  Vector v(2);
  v << 3.0, 4.0;
  CHECK(sgl::group_prox(v, 5.0).norm() == 0.0);  // ||v|| == t exactly
  const Vector half = sgl::group_prox(v, 2.5);
  CHECK(half(0) == doctest::Approx(1.5));
  CHECK(half(1) == doctest::Approx(2.0));
  CHECK(sgl::group_prox(Vector::Zero(2), 1.0).norm() == 0.0);
}

TEST_CASE("group_prox optimality against grid search") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    Vector v(2);
    v << rng.uniform(-2, 2), rng.uniform(-2, 2);
    const double t = rng.uniform(0, 2.5);
    const Vector u = sgl::group_prox(v, t);
    const double best = 0.5 * (u - v).squaredNorm() + t * u.norm();
    for (int a = -60; a <= 60; ++a) {
      for (int b = -60; b <= 60; ++b) {
        Vector g(2);
        g << a * 0.05, b * 0.05;
        const double value = 0.5 * (g - v).squaredNorm() + t * g.norm();
        CHECK(best <= value + 1e-6);
      }
    }
  }
}

TEST_CASE("orthonormal design gives coordinate-wise soft thresholding") {
  const int n = 6;
  Matrix X = Matrix::Zero(n, 3);
  // Orthogonal columns with X^T X = n I.
  X(0, 0) = X(1, 0) = std::sqrt(3.0);
  X(2, 1) = X(3, 1) = std::sqrt(3.0);
  X(4, 2) = X(5, 2) = std::sqrt(3.0);
  Rng rng(11);
  Vector y(n);
  for (int i = 0; i < n; ++i) y(i) = rng.normal();

  DesignProblem problem = single_block_problem(X, y);
  PenaltyConfig penalty;
  penalty.lambda_l1 = 0.3;
  const auto result = sgl::fit(problem, penalty);

  const Vector corr = X.transpose() * y / n;
  for (int l = 0; l < 3; ++l) {
    CHECK(result.coefficients(l) ==
          doctest::Approx(sgl::soft_threshold(corr(l), 0.3)).epsilon(1e-10));
  }
}

TEST_CASE("lambda at lambda_max yields the zero solution") {
  Rng rng(3);
  auto problem = oracle::random_problem(rng, 12, 5, {5});
  const double lmax =
      (problem.design.transpose() * problem.response / 12).lpNorm<Eigen::Infinity>();
  PenaltyConfig penalty;
  penalty.lambda_l1 = lmax;
  const auto result = sgl::fit(problem, penalty);
  CHECK(result.coefficients.norm() == 0.0);
  CHECK(result.kkt_residual <= 1e-12);
}

TEST_CASE("fit matches slow proximal-gradient oracle on a grouped problem") {
  Rng rng(42);
  auto problem = oracle::random_problem(rng, 8, 6, {3, 3}, true);
  PenaltyConfig penalty;
  penalty.lambda_l1 = 0.1;
  penalty.lambda_group = 0.1;
  penalty.tolerance = 1e-12;

  const Vector reference = oracle::ista_reference(problem, 0.1, 0.1, 1000000);
  const auto result = sgl::fit(problem, penalty);
  CHECK((result.coefficients - reference).lpNorm<Eigen::Infinity>() < 1e-5);
}

TEST_CASE("kkt residual certifies solver output") {
  Rng rng(5);
  auto problem = oracle::random_problem(rng, 10, 5, {2, 3}, false);
  PenaltyConfig penalty;
  penalty.lambda_l1 = 0.05;
  penalty.lambda_group = 0.05;
  penalty.tolerance = 1e-9;
  const auto result = sgl::fit(problem, penalty);
  CHECK(result.converged);
  CHECK(result.kkt_residual <= 1e-6);
}

TEST_CASE("kkt of zero vector under a dominating penalty is zero") {
  Rng rng(9);
  auto problem = oracle::random_problem(rng, 10, 4, {2, 2}, false);
  const double lmax =
      (problem.design.transpose() * problem.response / 10).lpNorm<Eigen::Infinity>();
  PenaltyConfig penalty;
  penalty.lambda_l1 = lmax * 1.01;
  penalty.lambda_group = 10.0;
  CHECK(sgl::check_kkt(problem, penalty, Vector::Zero(4)) == 0.0);
}

TEST_CASE("kkt of the OLS solution with no penalty") {
  Rng rng(13);
  auto problem = oracle::random_problem(rng, 20, 4, {4});
  const Vector ols =
      (problem.design.transpose() * problem.design)
          .ldlt()
          .solve(problem.design.transpose() * problem.response);
  PenaltyConfig penalty;  // lambda = lambda_g = 0
  CHECK(sgl::check_kkt(problem, penalty, ols) <= 1e-8);
}

TEST_CASE("objective trace is non-increasing") {
  Rng rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    auto problem = oracle::random_problem(rng, 15, 8, {2, 3, 3}, false);
    PenaltyConfig penalty;
    penalty.lambda_l1 = 0.02 * (trial + 1);
    penalty.lambda_group = 0.03;
    const auto result = sgl::fit(problem, penalty);
    for (std::size_t i = 1; i < result.objective_trace.size(); ++i) {
      CHECK(result.objective_trace[i] <=
            result.objective_trace[i - 1] + 1e-12);
    }
  }
}

TEST_CASE("lambda_g = 0 collapses to a reference lasso") {
  Rng rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    auto problem = oracle::random_problem(rng, 20, 6, {3, 3}, false);
    PenaltyConfig penalty;
    penalty.lambda_l1 = 0.07;
    penalty.tolerance = 1e-12;
    const auto result = sgl::fit(problem, penalty);
    const Vector reference =
        oracle::cd_lasso_reference(problem.design, problem.response, 0.07);
    CHECK((result.coefficients - reference).lpNorm<Eigen::Infinity>() < 1e-6);
  }
}

TEST_CASE("lambda = 0 with all groups penalized matches a group lasso oracle") {
  Rng rng(37);
  auto problem = oracle::random_problem(rng, 20, 6, {3, 3}, true);
  PenaltyConfig penalty;
  penalty.lambda_group = 0.08;
  penalty.tolerance = 1e-12;
  const auto result = sgl::fit(problem, penalty);
  const Vector reference = oracle::ista_reference(problem, 0.0, 0.08, 400000);
  CHECK((result.coefficients - reference).lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("scale equivariance in the response") {
  Rng rng(41);
  auto problem = oracle::random_problem(rng, 14, 6, {3, 3}, false);
  PenaltyConfig penalty;
  penalty.lambda_l1 = 0.05;
  penalty.lambda_group = 0.04;
  penalty.tolerance = 1e-12;
  const auto base = sgl::fit(problem, penalty);

  const double c = 3.5;
  DesignProblem scaled = problem;
  scaled.response *= c;
  PenaltyConfig scaled_penalty = penalty;
  scaled_penalty.lambda_l1 *= c;
  scaled_penalty.lambda_group *= c;
  const auto result = sgl::fit(scaled, scaled_penalty);
  CHECK((result.coefficients - c * base.coefficients).lpNorm<Eigen::Infinity>() <
        1e-6);
}

TEST_CASE("all-zero columns are pinned to zero") {
  Rng rng(47);
  auto problem = oracle::random_problem(rng, 10, 4, {2, 2}, false);
  problem.design.col(2).setZero();
  PenaltyConfig penalty;
  penalty.lambda_l1 = 0.01;
  const auto result = sgl::fit(problem, penalty);
  CHECK(result.coefficients(2) == 0.0);
  CHECK(result.kkt_residual <= 1e-6);
}

TEST_CASE("non-finite input is rejected") {
  Rng rng(53);
  auto problem = oracle::random_problem(rng, 6, 3, {3});
  problem.design(1, 1) = std::numeric_limits<double>::quiet_NaN();
  PenaltyConfig penalty;
  CHECK_THROWS_AS(sgl::fit(problem, penalty), NonFiniteInput);
}

TEST_CASE("lasso_path warm starts match cold starts") {
  Rng rng(61);
  auto problem = oracle::random_problem(rng, 10, 4, {2, 2}, false);
  PenaltyConfig penalty;
  penalty.lambda_group = 0.02;
  penalty.tolerance = 1e-11;

  SUBCASE("single-element grid equals fit") {
    const auto path = sgl::lasso_path(problem, penalty, {0.1});
    PenaltyConfig point = penalty;
    point.lambda_l1 = 0.1;
    const auto direct = sgl::fit(problem, point);
    CHECK((path[0].coefficients - direct.coefficients).lpNorm<Eigen::Infinity>() ==
          0.0);
  }

  SUBCASE("grid starting at lambda_max begins all-zero") {
    const double lmax = sgl::lambda_max(problem, penalty, 0.2);
    const auto path =
        sgl::lasso_path(problem, penalty, {lmax, lmax * 0.5, lmax * 0.2});
    CHECK(path[0].coefficients.norm() == 0.0);
  }

  SUBCASE("five-point grid matches cold starts within 1e-8") {
    const double lmax =
        (problem.design.transpose() * problem.response / 10).lpNorm<Eigen::Infinity>();
    std::vector<double> grid;
    for (int i = 0; i < 5; ++i) grid.push_back(lmax * std::pow(0.5, i));
    const auto path = sgl::lasso_path(problem, penalty, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      PenaltyConfig point = penalty;
      point.lambda_l1 = grid[i];
      const auto cold = sgl::fit(problem, point);
      CHECK((path[i].coefficients - cold.coefficients).lpNorm<Eigen::Infinity>() <
            1e-8);
    }
  }

  SUBCASE("empty grid throws") {
    CHECK_THROWS_AS(sgl::lasso_path(problem, penalty, {}), EmptyGrid);
  }
}

TEST_CASE("validate rejects bad group partitions") {
  Rng rng(67);
  auto problem = oracle::random_problem(rng, 6, 3, {3});
  problem.groups[0] = {0, 1};  // column 2 uncovered
  CHECK_THROWS_AS(problem.validate(), DimensionMismatch);
}
