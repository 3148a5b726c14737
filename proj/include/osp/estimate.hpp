#pragma once

#include "osp/core.hpp"
#include "osp/optimize.hpp"
#include "osp/process.hpp"
#include "osp/stopping.hpp"

#include <optional>
#include <span>
#include <vector>

namespace osp {

enum class Q2Convention { sqrt_vartheta, vartheta };

/// Sizes of the two-phase experiment: L optimization replicas of M paths each, one fresh
/// evaluation batch of N paths, and reference sizes for the Q-curves.
struct ExperimentPlan {
  Index L = 20;
  Index M = 10000;
  Index N = 200000;
  Index M_star = 10000;
  Index N_star = 1000000;
  Index L_star = 500;
  std::vector<Index> M_grid;
  /// Evaluation sizes for Q3; when empty, N_star / 2^j for j = 6..0.
  std::vector<Index> N_grid;
  std::uint64_t seed = 0;
  Q2Convention q2_convention = Q2Convention::sqrt_vartheta;

  void validate() const;
  std::vector<Index> evaluation_grid() const;
};

/// Stream of optimization batch `replica` within experiment group `group` (one group per M).
StreamKey optimization_stream(std::uint64_t seed, std::uint64_t group, Index replica);
/// The fresh evaluation batch; shared by every replica.
StreamKey evaluation_stream(std::uint64_t seed);

struct OutOfSample {
  Real value = 0.0;
  Real stdev = 0.0;
  bool degenerate = false;  // N = 1: stdev reported as 0
};

/// V_{M,N} and the sample standard deviation of the N stopped payoffs under the rule S(theta_hat).
/// Throws ContractViolation when `fresh` shares a stream with any optimization batch.
OutOfSample evaluate_out_of_sample(const Theta& theta_hat, const RegionFamily& family, const PayoffSpec& payoffs,
                                   const PathSet& fresh, std::span<const StreamKey> optimization_streams);

struct ReplicaResult {
  Theta theta_hat;
  Real value = 0.0;  // V^{(l)}_{M,N}
  Real sigma = 0.0;  // sigma_{M,N,l}
};

struct BatchStats {
  Index M = 0;
  Index N = 0;
  Real mu = 0.0;
  std::optional<Real> vartheta;  // absent for L = 1
  Real sigma_min = 0.0;
  std::vector<ReplicaResult> per_replica;
};

/// mu = mean of V^{(l)}, vartheta = sqrt(sum (V^{(l)} - mu)^2 / (L - 1)), sigma_min = min_l sigma_l.
BatchStats aggregate_replicas(std::vector<ReplicaResult> replicas, Index M, Index N);

/// L independent optimizations on M paths each, evaluated on one shared fresh batch of N paths.
BatchStats run_batch_experiment(const ProcessSpec& process, const ExperimentPlan& plan, const RegionFamily& family,
                                const PayoffSpec& payoffs, const OptimizerConfig& optimizer);

struct CurvePoint {
  Index size = 0;
  Real value = 0.0;
};

struct QCurves {
  std::vector<CurvePoint> q1;        // over M_grid
  std::vector<CurvePoint> q2;        // over M_grid
  std::vector<CurvePoint> q3;        // over the N grid
  std::vector<CurvePoint> mn_pairs;  // (M, N solving Q2(M) = Q3(N))
  bool degenerate = false;           // Q2 and Q3 vanish: every N solves the relation
  BatchStats reference;              // (M*, N*, L*)
  std::vector<BatchStats> per_M;     // (M, N*, L*) for M in M_grid
};

/// Q1(M) = mu_{M*,N*,L*} - mu_{M,N*,L*}, Q2(M) = sqrt(vartheta_{M,N*,L*}) (or vartheta), Q3(N) = sigma_{M*,N}/sqrt(N).
/// The M-N relation interpolates Q3 log-linearly in N; the reported N are made nondecreasing in M.
QCurves compute_q_curves(const ProcessSpec& process, const ExperimentPlan& plan, const RegionFamily& family,
                         const PayoffSpec& payoffs, const OptimizerConfig& optimizer);

/// Smallest N with Q3(N) <= target on the log-log interpolant; extrapolates with the fitted slope.
std::optional<Real> solve_budget_relation(const std::vector<CurvePoint>& q3, Real target);

struct DecompositionRow {
  Index M = 0;
  Index N = 0;
  Real bias = 0.0;     // Vbar - E V_M, estimated by Q1(M)
  Real sd_vm = 0.0;    // standard deviation of V_M, estimated by vartheta_{M,N*,L*}
  Real sd_eval = 0.0;  // standard deviation of V_M - V_{M,N}, estimated by Q3(N)
};

/// The three terms of Vbar - V_{M,N} on the M_grid x N grid.
std::vector<DecompositionRow> decomposition_report(const QCurves& curves);

/// Every (seed, stream_id) an experiment touches, in a fixed order; all pairwise distinct.
std::vector<StreamKey> experiment_streams(const ExperimentPlan& plan, bool with_curves);

}  // namespace osp
