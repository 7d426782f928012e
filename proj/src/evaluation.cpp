#include "ggreg/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "ggreg/parallel.hpp"
#include "ggreg/rng.hpp"

namespace ggreg::eval {

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

long pair_index(int j, int k, int p) {
  // Rank of (j, k), j < k, in lexicographic order over all pairs.
  return static_cast<long>(j) * p - static_cast<long>(j) * (j + 1) / 2 +
         (k - j - 1);
}

}  // namespace

SelectionMetrics selection_metrics(const std::vector<long>& estimated_support,
                                   const std::vector<long>& true_support,
                                   long universe_size) {
  std::set<long> est(estimated_support.begin(), estimated_support.end());
  std::set<long> tru(true_support.begin(), true_support.end());

  SelectionMetrics m;
  for (long i : est) {
    if (tru.count(i)) {
      ++m.tp;
    } else {
      ++m.fp;
    }
  }
  m.fn = static_cast<long>(tru.size()) - m.tp;
  m.tn = universe_size - m.tp - m.fp - m.fn;

  if (tru.empty() && est.empty()) {
    m.tpr = 1.0;
    m.f1 = 1.0;
  } else {
    m.tpr = (m.tp + m.fn) > 0
                ? static_cast<double>(m.tp) / (m.tp + m.fn)
                : kNaN;
    m.f1 = static_cast<double>(2 * m.tp) / (2 * m.tp + m.fp + m.fn);
  }
  m.fpr = (m.fp + m.tn) > 0 ? static_cast<double>(m.fp) / (m.fp + m.tn)
                            : kNaN;
  return m;
}

std::vector<long> gamma_support(const Matrix& gamma) {
  std::vector<long> support;
  for (int j = 0; j < gamma.rows(); ++j) {
    for (int h = 0; h < gamma.cols(); ++h) {
      if (gamma(j, h) != 0.0) {
        support.push_back(static_cast<long>(j) * gamma.cols() + h);
      }
    }
  }
  return support;
}

std::vector<long> beta_support(const graph::PrecisionModel& model) {
  std::vector<long> support;
  support.reserve(model.edges.size());
  for (const auto& e : model.edges) {
    support.push_back(pair_index(e.j, e.k, model.p) *
                          static_cast<long>(model.q + 1) +
                      e.h);
  }
  return support;
}

long beta_universe_size(int p, int q) {
  return static_cast<long>(p) * (p - 1) / 2 * (q + 1);
}

std::pair<double, double> estimation_errors(const twostep::FittedModel& fitted,
                                            const sim::GroundTruth& truth) {
  const auto& fit = fitted.precision;
  const auto& tru = truth.precision;
  if (fit.p != tru.p || fit.q != tru.q ||
      fitted.gamma_hat.rows() != truth.gamma.rows() ||
      fitted.gamma_hat.cols() != truth.gamma.cols()) {
    throw DimensionMismatch("fitted model and truth have different shapes");
  }

  const double gamma_err = (truth.gamma - fitted.gamma_hat).norm();

  // Per-node squared error over (k != j, h); every (j<k, h) difference
  // contributes to both endpoint nodes.
  std::vector<double> node_sq(fit.p, 0.0);
  auto accumulate = [&](int j, int k, int h, double diff) {
    node_sq[j] += diff * diff;
    node_sq[k] += diff * diff;
  };
  std::size_t a = 0, b = 0;
  auto key = [](const graph::PrecisionEdge& e) {
    return std::make_tuple(e.j, e.k, e.h);
  };
  while (a < fit.edges.size() || b < tru.edges.size()) {
    if (b == tru.edges.size() ||
        (a < fit.edges.size() && key(fit.edges[a]) < key(tru.edges[b]))) {
      accumulate(fit.edges[a].j, fit.edges[a].k, fit.edges[a].h,
                 fit.edges[a].value);
      ++a;
    } else if (a == fit.edges.size() ||
               key(tru.edges[b]) < key(fit.edges[a])) {
      accumulate(tru.edges[b].j, tru.edges[b].k, tru.edges[b].h,
                 -tru.edges[b].value);
      ++b;
    } else {
      accumulate(fit.edges[a].j, fit.edges[a].k, fit.edges[a].h,
                 fit.edges[a].value - tru.edges[b].value);
      ++a;
      ++b;
    }
  }
  double beta_err = 0.0;
  for (double sq : node_sq) beta_err += std::sqrt(sq);
  return {gamma_err, beta_err};
}

twostep::FittedModel fit_baseline_lasso(const Matrix& X, const Matrix& U,
                                        const twostep::PipelineConfig& config) {
  return twostep::fit_pipeline_shaped(X, U, config,
                                      twostep::NodePenaltyShape::kLassoOnly);
}

twostep::FittedModel fit_baseline_group_lasso(
    const Matrix& X, const Matrix& U, const twostep::PipelineConfig& config) {
  return twostep::fit_pipeline_shaped(
      X, U, config, twostep::NodePenaltyShape::kGroupLassoBaseline);
}

std::string method_name(Method m) {
  switch (m) {
    case Method::kRegGmm:
      return "reggmm";
    case Method::kLasso:
      return "lasso";
    case Method::kGroupLasso:
      return "grouplasso";
  }
  return "unknown";
}

MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  double sum = 0.0;
  for (double v : values) {
    if (std::isnan(v)) continue;
    sum += v;
    ++s.included;
  }
  if (s.included == 0) {
    s.mean = kNaN;
    s.se = kNaN;
    return s;
  }
  s.mean = sum / s.included;
  if (s.included == 1) {
    s.se = 0.0;  // single replication: SE 0 by convention
    return s;
  }
  double sq = 0.0;
  for (double v : values) {
    if (std::isnan(v)) continue;
    sq += (v - s.mean) * (v - s.mean);
  }
  const double sd = std::sqrt(sq / (s.included - 1));
  s.se = sd / std::sqrt(static_cast<double>(s.included));
  return s;
}

ReplicationReport run_experiment(const sim::SimConfig& config,
                                 const std::vector<Method>& methods, int R,
                                 int threads) {
  if (R < 1) throw Error("need at least one replication");
  config.validate();

  ReplicationReport report;
  report.config = config;
  report.replications = R;
  report.methods.resize(methods.size());
  for (std::size_t m = 0; m < methods.size(); ++m) {
    report.methods[m].method = methods[m];
    report.methods[m].replications.resize(R);
  }

  // Covariates live in [0,1] and the truth is on the raw scale, so the
  // experiment fits without covariate standardization.
  twostep::PipelineConfig pipeline;
  pipeline.standardize_covariates = false;
  pipeline.threads = 1;  // replications already run in parallel

  parallel_for(R, threads, [&](int r) {
    Rng rng(Rng::derive_stream(config.seed, static_cast<std::uint64_t>(r)));
    sim::GroundTruth truth;
    sim::Dataset data;
    std::string generation_error;
    try {
      truth = sim::generate_ground_truth(config, rng);
      data = sim::sample_dataset(truth, config.n, config, rng);
    } catch (const std::exception& e) {
      generation_error = e.what();
    }

    const std::vector<long> true_beta = beta_support(truth.precision);
    const std::vector<long> true_gamma = gamma_support(truth.gamma);
    const long beta_universe = beta_universe_size(config.p, config.q);
    const long gamma_universe =
        static_cast<long>(config.p) * config.q;

    for (std::size_t m = 0; m < methods.size(); ++m) {
      ReplicationMetrics& out = report.methods[m].replications[r];
      if (!generation_error.empty()) {
        out.failed = true;
        out.error = generation_error;
        continue;
      }
      try {
        twostep::FittedModel fit;
        switch (methods[m]) {
          case Method::kRegGmm:
            fit = twostep::fit_pipeline(data.X, data.U, pipeline);
            break;
          case Method::kLasso:
            fit = fit_baseline_lasso(data.X, data.U, pipeline);
            break;
          case Method::kGroupLasso:
            fit = fit_baseline_group_lasso(data.X, data.U, pipeline);
            break;
        }
        const SelectionMetrics beta = selection_metrics(
            beta_support(fit.precision), true_beta, beta_universe);
        const SelectionMetrics gamma = selection_metrics(
            gamma_support(fit.gamma_hat), true_gamma, gamma_universe);
        const auto [gamma_err, beta_err] = estimation_errors(fit, truth);
        out.beta_tpr = beta.tpr;
        out.beta_fpr = beta.fpr;
        out.beta_f1 = beta.f1;
        out.beta_error = beta_err;
        out.gamma_tpr = gamma.tpr;
        out.gamma_fpr = gamma.fpr;
        out.gamma_f1 = gamma.f1;
        out.gamma_error = gamma_err;
      } catch (const std::exception& e) {
        out.failed = true;
        out.error = e.what();
      }
    }
  });

  for (auto& method : report.methods) {
    auto collect = [&](auto field) {
      std::vector<double> values;
      for (const auto& rep : method.replications) {
        if (!rep.failed) values.push_back(rep.*field);
      }
      return summarize(values);
    };
    method.failures = 0;
    for (const auto& rep : method.replications) {
      if (rep.failed) ++method.failures;
    }
    method.beta_tpr = collect(&ReplicationMetrics::beta_tpr);
    method.beta_fpr = collect(&ReplicationMetrics::beta_fpr);
    method.beta_f1 = collect(&ReplicationMetrics::beta_f1);
    method.beta_error = collect(&ReplicationMetrics::beta_error);
    method.gamma_tpr = collect(&ReplicationMetrics::gamma_tpr);
    method.gamma_fpr = collect(&ReplicationMetrics::gamma_fpr);
    method.gamma_f1 = collect(&ReplicationMetrics::gamma_f1);
    method.gamma_error = collect(&ReplicationMetrics::gamma_error);
  }
  return report;
}

}  // namespace ggreg::eval
