#pragma once

#include "osp/core.hpp"
#include "osp/random.hpp"

#include <cstdint>
#include <variant>
#include <vector>

namespace osp {

/// Basket of `dim` independent, identically parameterized geometric Brownian motions
/// under the risk-neutral measure, observed at t_k = k * horizon / dates.
struct GbmSpec {
  int dim = 2;
  Real rate = 0.05;
  Real dividend = 0.10;
  Real vol = 0.2;  // 0 is accepted as a deterministic test case
  Real spot = 90.0;
  Real horizon = 3.0;
  int dates = 9;

  Real dt() const { return horizon / dates; }
  Real time(int k) const { return horizon * k / dates; }
  void validate() const;
};

/// Finite-state chain on {0..states-1}. transitions[k-1] is P_k: P_1 maps the initial state
/// to X_1 and P_k maps X_{k-1} to X_k for k >= 2.
struct DiscreteChainSpec {
  int states = 0;
  int dates = 0;
  int initial = 0;
  std::vector<Eigen::MatrixXd> transitions;

  const Eigen::MatrixXd& transition(int k) const { return transitions[static_cast<std::size_t>(k - 1)]; }
  void validate() const;
};

using ProcessSpec = std::variant<GbmSpec, DiscreteChainSpec>;

int dates_of(const ProcessSpec& spec);

/// M GBM trajectories X_1..X_K; row m holds the K states of path m back to back.
struct GbmPaths {
  GbmSpec spec;
  StreamKey key;
  RowMajorMatrixX<Real> values;

  Index count() const { return values.rows(); }
  int dates() const { return spec.dates; }
  int dim() const { return spec.dim; }
  /// State X_k of path m, k in 1..K.
  auto state(Index m, int k) const { return values.row(m).segment(Index(k - 1) * spec.dim, spec.dim); }
};

/// M trajectories of a finite-state chain; entry (m, k-1) is X_k of path m.
struct DiscretePaths {
  DiscreteChainSpec spec;
  StreamKey key;
  RowMajorMatrixX<int> values;

  Index count() const { return values.rows(); }
  int dates() const { return spec.dates; }
  int state(Index m, int k) const { return values(m, k - 1); }
};

using PathSet = std::variant<GbmPaths, DiscretePaths>;

Index path_count(const PathSet& paths);
StreamKey stream_of(const PathSet& paths);

/// Exact log-normal stepping; path m draws from the substream (seed, stream_id, m).
GbmPaths simulate_gbm_paths(const GbmSpec& spec, Index count, std::uint64_t seed, std::uint64_t stream_id);

/// Inverse-CDF sampling of each transition row; path m draws from (seed, stream_id, m).
DiscretePaths simulate_discrete_paths(const DiscreteChainSpec& spec, Index count, std::uint64_t seed,
                                      std::uint64_t stream_id);

PathSet simulate_paths(const ProcessSpec& spec, Index count, std::uint64_t seed, std::uint64_t stream_id);

/// Law of X_k for every date: row k-1 is P(X_k = s). Exact propagation of the initial point mass.
Eigen::MatrixXd marginal_distributions(const DiscreteChainSpec& spec);

}  // namespace osp
