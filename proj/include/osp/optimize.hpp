#pragma once

#include "osp/core.hpp"
#include "osp/process.hpp"
#include "osp/stopping.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace osp {

/// Grid scan over the parameter box followed by compass (pattern) search from the best grid points.
struct OptimizerConfig {
  int grid_points_per_dim = 21;
  int refine_rounds = 24;
  int refine_top_k = 3;
  Real pattern_shrink = 0.5;
  bool keep_trace = false;
  /// Search box; the family default when empty.
  std::optional<ThetaBox> box;

  void validate() const;
};

struct TraceEntry {
  Theta theta;
  Real value;
};

struct OptimizeResult {
  ThetaVector theta_hat;
  Real empirical_value = 0.0;
  Index evaluations = 0;
  std::vector<TraceEntry> trace;
};

/// [0, 50]^2 for shared max-call regions (per-date pairs stacked otherwise), [0, 1]^p for tables.
ThetaBox default_box(const RegionFamily& family);

/// The empirical stopped-payoff objective theta -> (1/M) sum_m G_tau(X^{(m)}_tau) on one fixed batch.
///
/// Payoffs and region features are computed once per batch. Discrete batches are grouped into
/// distinct trajectories with multiplicities, which leaves the objective unchanged.
class BatchObjective {
 public:
  BatchObjective(RegionFamily family, const PayoffSpec& payoffs, const PathSet& paths);

  Real operator()(const Theta& theta) const;
  /// Stopped payoff of every path, in batch order.
  Eigen::VectorXd stopped_payoffs(const Theta& theta) const;
  Index count() const { return count_; }
  const RegionFamily& family() const { return family_; }

 private:
  Real stopped(Index row, const Theta& theta) const;

  RegionFamily family_;
  Index count_ = 0;
  int dates_ = 0;
  RowMajorMatrixX<Real> payoffs_;  // per distinct row
  RowMajorMatrixX<Real> itm_;
  RowMajorMatrixX<Real> spread_;
  RowMajorMatrixX<int> states_;
  Eigen::VectorXd weights_;            // multiplicity of each distinct row
  std::vector<Index> row_of_path_;     // batch index -> distinct row
  std::shared_ptr<const PathSet> generic_paths_;
};

/// Arithmetic mean of the stopped payoffs over the batch.
Real empirical_value(const Theta& theta, const RegionFamily& family, const PayoffSpec& payoffs, const PathSet& paths);

using Objective = std::function<Real(const Theta&)>;

/// Maximizes a piecewise-constant objective. Every candidate is gathered before selection; the
/// maximum value wins and ties go to the lexicographically smallest theta.
OptimizeResult optimize_regions(const Objective& objective, const ThetaBox& box, const OptimizerConfig& config);

/// arg max of the empirical value on `paths` (common random numbers for every candidate).
OptimizeResult optimize_regions(const RegionFamily& family, const PayoffSpec& payoffs, const PathSet& paths,
                                const OptimizerConfig& config);

}  // namespace osp
