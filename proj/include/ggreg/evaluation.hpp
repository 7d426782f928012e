#pragma once

#include <string>
#include <vector>

#include "ggreg/common.hpp"
#include "ggreg/simulation.hpp"
#include "ggreg/two_step.hpp"

namespace ggreg::eval {

/// Support-recovery counts and rates over a fixed universe.
///
/// Degenerate denominators: tpr and f1 are 1 when both supports are empty
/// (nothing to find, nothing claimed); any other zero-denominator rate is
/// NaN and excluded from Monte Carlo means.
struct SelectionMetrics {
  double tpr = 0.0;
  double fpr = 0.0;
  double f1 = 0.0;
  long tp = 0, fp = 0, fn = 0, tn = 0;
};

SelectionMetrics selection_metrics(const std::vector<long>& estimated_support,
                                   const std::vector<long>& true_support,
                                   long universe_size);

/// (||Gamma - Gamma_hat||_F, sum_j ||beta_hat_j - beta_j||_2), both on the
/// symmetrized precision scale that GroundTruth stores.
std::pair<double, double> estimation_errors(const twostep::FittedModel& fitted,
                                            const sim::GroundTruth& truth);

/// Flat support of nonzero Gamma entries (index j*q + h).
std::vector<long> gamma_support(const Matrix& gamma);

/// Flat support of nonzero symmetrized edges over (j < k, h) triples;
/// the universe has C(p,2) * (q+1) elements.
std::vector<long> beta_support(const graph::PrecisionModel& model);
long beta_universe_size(int p, int q);

/// Same pipeline as fit_pipeline with the group penalty off; BIC tunes
/// lambda only.
twostep::FittedModel fit_baseline_lasso(const Matrix& X, const Matrix& U,
                                        const twostep::PipelineConfig& config);

/// Group-lasso baseline: one scalar lambda_g multiplying an l1 penalty on
/// group 0 plus a sqrt(p-1)-weighted group norm on groups 1..q.
twostep::FittedModel fit_baseline_group_lasso(
    const Matrix& X, const Matrix& U, const twostep::PipelineConfig& config);

enum class Method { kRegGmm, kLasso, kGroupLasso };

std::string method_name(Method m);

struct ReplicationMetrics {
  bool failed = false;
  std::string error;
  double beta_tpr = 0, beta_fpr = 0, beta_f1 = 0, beta_error = 0;
  double gamma_tpr = 0, gamma_fpr = 0, gamma_f1 = 0, gamma_error = 0;
};

struct MetricSummary {
  double mean = 0.0;
  double se = 0.0;  // sample SD / sqrt(#included); NaN entries excluded
  int included = 0;
};

struct MethodReport {
  Method method;
  std::vector<ReplicationMetrics> replications;
  int failures = 0;
  MetricSummary beta_tpr, beta_fpr, beta_f1, beta_error;
  MetricSummary gamma_tpr, gamma_fpr, gamma_f1, gamma_error;
};

struct ReplicationReport {
  sim::SimConfig config;
  int replications = 0;
  std::vector<MethodReport> methods;
};

MetricSummary summarize(const std::vector<double>& values);

/// Monte Carlo harness: R independent replications, each with its own
/// seed stream derived from config.seed; every requested method is fit on
/// the same data within a replication. beta metrics are computed after
/// MAX symmetrization against the true supports.
ReplicationReport run_experiment(const sim::SimConfig& config,
                                 const std::vector<Method>& methods, int R,
                                 int threads = 1);

}  // namespace ggreg::eval
