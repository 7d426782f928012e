#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ggreg/common.hpp"
#include "ggreg/graph_regression.hpp"
#include "ggreg/rng.hpp"

namespace ggreg::sim {

struct SimConfig {
  int n = 200;
  int p = 25;
  int q = 50;
  int q_e = 5;                      // effective covariates
  double v_e = 0.01;                // Erdos-Renyi edge probability
  double s_gamma = 0.1;             // fraction of nonzero mean coefficients
  double gamma_value = 0.5;
  double powerlaw_exponent = 2.5;
  double coef_low = 0.35;
  double coef_high = 0.5;
  double discrete_fraction = 0.5;   // fraction of binary covariates
  std::uint64_t seed = 0;

  void validate() const;
};

/// Undirected simple graph as a sorted list of (j, k) pairs with j < k.
using EdgeSet = std::vector<std::pair<int, int>>;

struct GroundTruth {
  Matrix gamma;                             // p x q
  graph::PrecisionModel precision;          // true beta', sigma^{jj} = 1
  std::vector<int> effective_covariates;    // sorted, size q_e
  std::vector<std::vector<int>> supports;   // per-node design column indices
  double pd_scale_factor = 0.0;             // shrink applied to beta'
};

struct Dataset {
  Matrix X;  // n x p
  Matrix U;  // n x q
  std::vector<bool> discrete_columns;
};

/// Scale-free population graph: degrees drawn i.i.d. from a discrete
/// power law on [1, p-1], parity-fixed, realized by the configuration
/// model with rejection of self-loops and multi-edges (Havel-Hakimi
/// fallback; non-graphical sequences are redrawn).
EdgeSet generate_population_graph(int p, double exponent, Rng& rng);

/// Uniform q_e-subset of covariates, each with an independent G(p, v_e)
/// graph; non-selected covariates get empty edge sets.
std::pair<std::vector<int>, std::vector<EdgeSet>> generate_covariate_graphs(
    int p, int q, int q_e, double v_e, Rng& rng);

/// Coefficient tensor on the given graphs: draws from
/// Uniform([-high,-low] U [low,high]), row-wise l1 rescale, symmetrization
/// by averaging, then a 0.95 shrink that keeps Omega(u) clear of the
/// semidefinite boundary. sigma^{jj} = 1.
graph::PrecisionModel generate_coefficients(const EdgeSet& population,
                                            const std::vector<EdgeSet>& covariate_graphs,
                                            const SimConfig& cfg, Rng& rng);

/// Exactly round(s_gamma * p * q) uniformly placed entries equal to
/// `value`, the rest zero.
Matrix generate_gamma(int p, int q, double s_gamma, double value, Rng& rng);

/// Covariate matrix in [0,1]: a uniform subset of round(fraction * q)
/// columns is Bernoulli(1/2) on {0,1}, the rest Uniform[0,1].
std::pair<Matrix, std::vector<bool>> generate_covariates(int n, int q,
                                                         double discrete_fraction,
                                                         Rng& rng);

/// Full ground truth; resamples graphs and coefficients until the
/// positive-definiteness condition (u_bound = 1) holds for every node.
GroundTruth generate_ground_truth(const SimConfig& cfg, Rng& rng);

/// Draws covariates and samples x^(i) ~ N(Gamma u^(i), Omega(u^(i))^{-1})
/// via Cholesky. Throws NotPositiveDefinite (carrying u) on factor
/// failure.
Dataset sample_dataset(const GroundTruth& truth, int n, const SimConfig& cfg,
                       Rng& rng);

}  // namespace ggreg::sim
