#include "ggreg/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>
#include <set>

namespace ggreg::sim {

namespace {

constexpr double kPdScaleFactor = 0.95;

/// Inverse-CDF sampler for P(d) proportional to d^(-exponent) on
/// [1, max_degree].
class PowerLawDegrees {
 public:
  PowerLawDegrees(int max_degree, double exponent) : cumulative_(max_degree) {
    double sum = 0.0;
    for (int d = 1; d <= max_degree; ++d) {
      sum += std::pow(static_cast<double>(d), -exponent);
      cumulative_[d - 1] = sum;
    }
    for (double& c : cumulative_) c /= sum;
    cumulative_.back() = 1.0;
  }

  int draw(Rng& rng) const {
    const double u = rng.uniform01();
    const auto it =
        std::lower_bound(cumulative_.begin(), cumulative_.end(), u);
    return static_cast<int>(it - cumulative_.begin()) + 1;
  }

 private:
  std::vector<double> cumulative_;
};

bool try_configuration_model(const std::vector<int>& degrees, Rng& rng,
                             EdgeSet& out) {
  std::vector<int> stubs;
  for (int v = 0; v < static_cast<int>(degrees.size()); ++v) {
    stubs.insert(stubs.end(), degrees[v], v);
  }
  rng.shuffle(stubs);
  std::set<std::pair<int, int>> edges;
  for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) {
    int a = stubs[i], b = stubs[i + 1];
    if (a == b) return false;
    if (a > b) std::swap(a, b);
    if (!edges.insert({a, b}).second) return false;
  }
  out.assign(edges.begin(), edges.end());
  return true;
}

/// Deterministic Havel-Hakimi realization; returns false when the
/// sequence is not graphical.
bool havel_hakimi(std::vector<int> degrees, EdgeSet& out) {
  const int p = static_cast<int>(degrees.size());
  std::set<std::pair<int, int>> edges;
  std::vector<int> order(p);
  while (true) {
    for (int v = 0; v < p; ++v) order[v] = v;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return degrees[a] != degrees[b] ? degrees[a] > degrees[b] : a < b;
    });
    const int v = order[0];
    const int d = degrees[v];
    if (d == 0) break;
    if (d > p - 1) return false;
    for (int i = 1; i <= d; ++i) {
      const int w = order[i];
      if (degrees[w] <= 0) return false;
      --degrees[w];
      edges.insert({std::min(v, w), std::max(v, w)});
    }
    degrees[v] = 0;
  }
  out.assign(edges.begin(), edges.end());
  return true;
}

}  // namespace

void SimConfig::validate() const {
  if (n < 1 || p < 2 || q < 0) throw Error("need n >= 1, p >= 2, q >= 0");
  if (q_e < 0 || q_e > q) throw Error("need 0 <= q_e <= q");
  if (v_e < 0.0 || v_e > 1.0) throw Error("need 0 <= v_e <= 1");
  if (s_gamma < 0.0 || s_gamma > 1.0) throw Error("need 0 <= s_gamma <= 1");
  if (discrete_fraction < 0.0 || discrete_fraction > 1.0) {
    throw Error("need 0 <= discrete_fraction <= 1");
  }
  if (!(coef_low < coef_high) || coef_low <= 0.0) {
    throw Error("need 0 < coef_low < coef_high");
  }
  if (powerlaw_exponent <= 1.0) throw Error("need powerlaw_exponent > 1");
}

EdgeSet generate_population_graph(int p, double exponent, Rng& rng) {
  if (p < 2) throw Error("need at least two nodes");
  if (exponent <= 1.0) throw Error("need exponent > 1");
  const PowerLawDegrees sampler(p - 1, exponent);

  while (true) {
    std::vector<int> degrees(p);
    int total = 0;
    for (int v = 0; v < p; ++v) {
      degrees[v] = sampler.draw(rng);
      total += degrees[v];
    }
    if (total % 2 != 0) {
      // Bump one random degree that still has headroom.
      std::vector<int> can_grow;
      for (int v = 0; v < p; ++v) {
        if (degrees[v] < p - 1) can_grow.push_back(v);
      }
      if (can_grow.empty()) continue;  // all saturated; sum is even anyway
      ++degrees[can_grow[rng.integer(can_grow.size())]];
    }

    EdgeSet edges;
    bool realized = false;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      if (try_configuration_model(degrees, rng, edges)) {
        realized = true;
        break;
      }
    }
    if (!realized) realized = havel_hakimi(degrees, edges);
    if (realized) return edges;
    // Non-graphical sequence; redraw degrees.
  }
}

std::pair<std::vector<int>, std::vector<EdgeSet>> generate_covariate_graphs(
    int p, int q, int q_e, double v_e, Rng& rng) {
  if (q_e > q) throw Error("q_e must not exceed q");
  std::vector<int> effective = rng.sample_without_replacement(q, q_e);
  std::vector<EdgeSet> graphs(q);
  for (int h : effective) {
    EdgeSet edges;
    for (int j = 0; j < p; ++j) {
      for (int k = j + 1; k < p; ++k) {
        if (rng.bernoulli(v_e)) edges.push_back({j, k});
      }
    }
    graphs[h] = std::move(edges);
  }
  return {std::move(effective), std::move(graphs)};
}

graph::PrecisionModel generate_coefficients(
    const EdgeSet& population, const std::vector<EdgeSet>& covariate_graphs,
    const SimConfig& cfg, Rng& rng) {
  const int p = cfg.p;
  const int q = static_cast<int>(covariate_graphs.size());

  // Directed initial draws on the union pattern, keyed (j, k, h).
  std::map<std::tuple<int, int, int>, double> draws;
  auto draw_pair = [&](int j, int k, int h) {
    for (int twice = 0; twice < 2; ++twice) {
      const int a = twice == 0 ? j : k;
      const int b = twice == 0 ? k : j;
      const double magnitude = rng.uniform(cfg.coef_low, cfg.coef_high);
      const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
      draws[{a, b, h}] = sign * magnitude;
    }
  };
  for (const auto& [j, k] : population) draw_pair(j, k, 0);
  for (int h = 0; h < q; ++h) {
    for (const auto& [j, k] : covariate_graphs[h]) draw_pair(j, k, h + 1);
  }

  // Row-wise l1 rescale.
  std::vector<double> row_mass(p, 0.0);
  std::vector<int> row_entries(p, 0);
  for (const auto& [key, value] : draws) {
    row_mass[std::get<0>(key)] += std::abs(value);
    ++row_entries[std::get<0>(key)];
  }
  for (int j = 0; j < p; ++j) {
    if (row_entries[j] > 0 && row_mass[j] == 0.0) {
      throw DegenerateRow("node with nonzero pattern has zero l1 mass");
    }
  }
  for (auto& [key, value] : draws) {
    value /= row_mass[std::get<0>(key)];
  }

  // Symmetrize by averaging with the transpose, then shrink off the
  // semidefinite boundary.
  graph::PrecisionModel model;
  model.p = p;
  model.q = q;
  model.sigma_diag = Vector::Ones(p);
  for (const auto& [key, value] : draws) {
    const auto [j, k, h] = key;
    if (j > k) continue;
    const double other = draws.at({k, j, h});
    const double avg = kPdScaleFactor * 0.5 * (value + other);
    if (avg != 0.0) model.edges.push_back({j, k, h, avg});
  }
  model.sort_edges();
  return model;
}

Matrix generate_gamma(int p, int q, double s_gamma, double value, Rng& rng) {
  if (s_gamma < 0.0 || s_gamma > 1.0) throw Error("s_gamma must be in [0,1]");
  Matrix gamma = Matrix::Zero(p, q);
  const int cells = p * q;
  const int count = static_cast<int>(std::llround(s_gamma * cells));
  const std::vector<int> chosen = rng.sample_without_replacement(cells, count);
  for (int c : chosen) gamma(c / q, c % q) = value;
  return gamma;
}

std::pair<Matrix, std::vector<bool>> generate_covariates(
    int n, int q, double discrete_fraction, Rng& rng) {
  const int n_discrete = static_cast<int>(std::llround(discrete_fraction * q));
  const std::vector<int> chosen =
      rng.sample_without_replacement(q, n_discrete);
  std::vector<bool> discrete(q, false);
  for (int h : chosen) discrete[h] = true;

  Matrix U(n, q);
  for (int h = 0; h < q; ++h) {
    for (int i = 0; i < n; ++i) {
      U(i, h) = discrete[h] ? (rng.bernoulli(0.5) ? 1.0 : 0.0)
                            : rng.uniform01();
    }
  }
  return {std::move(U), std::move(discrete)};
}

GroundTruth generate_ground_truth(const SimConfig& cfg, Rng& rng) {
  cfg.validate();
  GroundTruth truth;
  truth.pd_scale_factor = kPdScaleFactor;
  while (true) {
    EdgeSet population = generate_population_graph(cfg.p, cfg.powerlaw_exponent, rng);
    auto [effective, graphs] =
        generate_covariate_graphs(cfg.p, cfg.q, cfg.q_e, cfg.v_e, rng);
    graph::PrecisionModel precision =
        generate_coefficients(population, graphs, cfg, rng);
    const std::vector<bool> pass = graph::check_pd_condition(precision, 1.0);
    if (std::all_of(pass.begin(), pass.end(), [](bool b) { return b; })) {
      truth.precision = std::move(precision);
      truth.effective_covariates = std::move(effective);
      break;
    }
    // Symmetrization pushed some row past the diagonal-dominance bound;
    // redraw graphs and coefficients.
  }
  truth.gamma = generate_gamma(cfg.p, cfg.q, cfg.s_gamma, cfg.gamma_value, rng);

  // True node supports in design-column coordinates (beta = beta' since
  // sigma^{jj} = 1).
  truth.supports.assign(cfg.p, {});
  for (const auto& e : truth.precision.edges) {
    const graph::NodeLayout lj{cfg.p, cfg.q, e.j};
    const graph::NodeLayout lk{cfg.p, cfg.q, e.k};
    truth.supports[e.j].push_back(lj.pair_to_column(e.k, e.h));
    truth.supports[e.k].push_back(lk.pair_to_column(e.j, e.h));
  }
  for (auto& s : truth.supports) std::sort(s.begin(), s.end());
  return truth;
}

Dataset sample_dataset(const GroundTruth& truth, int n, const SimConfig& cfg,
                       Rng& rng) {
  const int p = truth.precision.p;
  const int q = truth.precision.q;
  Dataset data;
  auto [U, discrete] = generate_covariates(n, q, cfg.discrete_fraction, rng);
  data.U = std::move(U);
  data.discrete_columns = std::move(discrete);
  data.X = Matrix(n, p);

  Vector z(p);
  for (int i = 0; i < n; ++i) {
    const Vector u = data.U.row(i).transpose();
    const Matrix omega = graph::precision_at(truth.precision, u);
    Eigen::LLT<Matrix> llt(omega);
    if (llt.info() != Eigen::Success) {
      throw NotPositiveDefinite("Omega(u) is not positive definite", u);
    }
    for (int j = 0; j < p; ++j) z(j) = rng.normal();
    // x = mean + L^{-T} z has covariance Omega^{-1}.
    const Vector noise = llt.matrixU().solve(z);
    data.X.row(i) = (truth.gamma * u + noise).transpose();
  }
  return data;
}

}  // namespace ggreg::sim
