#include "osp/estimate.hpp"

#include "osp/statistics.hpp"

#include <algorithm>
#include <cmath>

namespace osp {

void ExperimentPlan::validate() const {
  require(L >= 1 && M >= 1 && N >= 1, "plan: L, M and N must be >= 1");
  require(M_star >= 1 && N_star >= 1 && L_star >= 1, "plan: reference sizes must be >= 1");
  for (std::size_t i = 1; i < M_grid.size(); ++i) require(M_grid[i] > M_grid[i - 1], "plan: M_grid must be increasing");
  for (Index m : M_grid) require(m >= 1, "plan: M_grid entries must be >= 1");
  for (std::size_t i = 1; i < N_grid.size(); ++i) require(N_grid[i] > N_grid[i - 1], "plan: N_grid must be increasing");
  for (Index n : N_grid) require(n >= 1 && n <= N_star, "plan: N_grid entries must lie in [1, N_star]");
}

std::vector<Index> ExperimentPlan::evaluation_grid() const {
  if (!N_grid.empty()) return N_grid;
  std::vector<Index> grid;
  for (int j = 6; j >= 0; --j) {
    const Index n = std::max<Index>(1, N_star >> j);
    if (grid.empty() || n > grid.back()) grid.push_back(n);
  }
  return grid;
}

StreamKey optimization_stream(std::uint64_t seed, std::uint64_t group, Index replica) {
  return {seed, ((group + 1) << 32) | static_cast<std::uint64_t>(replica + 1)};
}

StreamKey evaluation_stream(std::uint64_t seed) { return {seed, 0}; }

namespace {

OutOfSample summarize(const Eigen::VectorXd& stopped) {
  OutOfSample out;
  out.value = stopped.sum() / Real(stopped.size());
  out.degenerate = stopped.size() < 2;
  out.stdev = sample_stddev(stopped);
  return out;
}

void check_streams(const PathSet& fresh, std::span<const StreamKey> optimization_streams) {
  const StreamKey key = stream_of(fresh);
  for (const auto& used : optimization_streams) {
    if (used == key) throw ContractViolation("evaluate_out_of_sample: evaluation batch reuses an optimization stream");
  }
}

ReplicaResult run_replica(const ProcessSpec& process, Index M, StreamKey stream, const RegionFamily& family,
                          const PayoffSpec& payoffs, const OptimizerConfig& optimizer, const BatchObjective& fresh) {
  const PathSet batch = simulate_paths(process, M, stream.seed, stream.stream_id);
  const OptimizeResult opt = optimize_regions(family, payoffs, batch, optimizer);
  const OutOfSample oos = summarize(fresh.stopped_payoffs(opt.theta_hat.values));
  return {opt.theta_hat.values, oos.value, oos.stdev};
}

}  // namespace

OutOfSample evaluate_out_of_sample(const Theta& theta_hat, const RegionFamily& family, const PayoffSpec& payoffs,
                                   const PathSet& fresh, std::span<const StreamKey> optimization_streams) {
  check_streams(fresh, optimization_streams);
  return summarize(BatchObjective(family, payoffs, fresh).stopped_payoffs(theta_hat));
}

BatchStats aggregate_replicas(std::vector<ReplicaResult> replicas, Index M, Index N) {
  require(!replicas.empty(), "aggregate_replicas: no replicas");
  BatchStats stats;
  stats.M = M;
  stats.N = N;
  const Index L = Index(replicas.size());
  Real sum = 0.0;
  for (const auto& r : replicas) sum += r.value;
  stats.mu = sum / Real(L);
  if (L >= 2) {
    Real ss = 0.0;
    for (const auto& r : replicas) ss += (r.value - stats.mu) * (r.value - stats.mu);
    stats.vartheta = std::sqrt(ss / Real(L - 1));
  }
  stats.sigma_min = replicas.front().sigma;
  for (const auto& r : replicas) stats.sigma_min = std::min(stats.sigma_min, r.sigma);
  stats.per_replica = std::move(replicas);
  return stats;
}

BatchStats run_batch_experiment(const ProcessSpec& process, const ExperimentPlan& plan, const RegionFamily& family,
                                const PayoffSpec& payoffs, const OptimizerConfig& optimizer) {
  plan.validate();
  const StreamKey eval_key = evaluation_stream(plan.seed);
  const PathSet fresh_paths = simulate_paths(process, plan.N, eval_key.seed, eval_key.stream_id);
  const BatchObjective fresh(family, payoffs, fresh_paths);
  std::vector<ReplicaResult> replicas;
  replicas.reserve(static_cast<std::size_t>(plan.L));
  for (Index l = 0; l < plan.L; ++l) {
    const StreamKey key = optimization_stream(plan.seed, 0, l);
    check_streams(fresh_paths, std::span(&key, 1));
    replicas.push_back(run_replica(process, plan.M, key, family, payoffs, optimizer, fresh));
  }
  return aggregate_replicas(std::move(replicas), plan.M, plan.N);
}

std::optional<Real> solve_budget_relation(const std::vector<CurvePoint>& q3, Real target) {
  if (q3.size() < 2 || !(target > 0.0)) return std::nullopt;
  Eigen::VectorXd n(Index(q3.size()));
  Eigen::VectorXd q(Index(q3.size()));
  for (std::size_t i = 0; i < q3.size(); ++i) {
    n(Index(i)) = Real(q3[i].size);
    q(Index(i)) = q3[i].value;
  }
  if (!(q.array() > 0.0).all()) return std::nullopt;
  for (Index i = 0; i + 1 < n.size(); ++i) {
    if (q(i) >= target && target >= q(i + 1)) {
      if (q(i) == q(i + 1)) return n(i);
      const Real t = std::log(target / q(i)) / std::log(q(i + 1) / q(i));
      return std::exp(std::log(n(i)) + t * std::log(n(i + 1) / n(i)));
    }
  }
  const auto fit = fit_loglog(n, q);
  if (!(fit.slope < 0.0)) return std::nullopt;
  const Index anchor = target > q(0) ? 0 : n.size() - 1;
  const Real log_n = std::log(n(anchor)) + (std::log(target) - std::log(q(anchor))) / fit.slope;
  return std::max(Real(1), std::exp(log_n));
}

QCurves compute_q_curves(const ProcessSpec& process, const ExperimentPlan& plan, const RegionFamily& family,
                         const PayoffSpec& payoffs, const OptimizerConfig& optimizer) {
  plan.validate();
  require(!plan.M_grid.empty(), "compute_q_curves: M_grid is empty");
  const StreamKey eval_key = evaluation_stream(plan.seed);
  const PathSet fresh_paths = simulate_paths(process, plan.N_star, eval_key.seed, eval_key.stream_id);
  const BatchObjective fresh(family, payoffs, fresh_paths);

  auto run_group = [&](std::uint64_t group, Index M) {
    std::vector<ReplicaResult> replicas;
    for (Index l = 0; l < plan.L_star; ++l) {
      replicas.push_back(run_replica(process, M, optimization_stream(plan.seed, group, l), family, payoffs, optimizer, fresh));
    }
    return aggregate_replicas(std::move(replicas), M, plan.N_star);
  };

  QCurves curves;
  curves.reference = run_group(0, plan.M_star);
  for (std::size_t g = 0; g < plan.M_grid.size(); ++g) {
    const Index M = plan.M_grid[g];
    curves.per_M.push_back(M == plan.M_star ? curves.reference : run_group(g + 1, M));
  }

  for (const auto& stats : curves.per_M) {
    const Real vartheta = stats.vartheta.value_or(0.0);
    curves.q1.push_back({stats.M, curves.reference.mu - stats.mu});
    curves.q2.push_back({stats.M, plan.q2_convention == Q2Convention::sqrt_vartheta ? std::sqrt(vartheta) : vartheta});
  }

  std::vector<Eigen::VectorXd> reference_payoffs;
  for (const auto& r : curves.reference.per_replica) reference_payoffs.push_back(fresh.stopped_payoffs(r.theta_hat));
  for (Index N : plan.evaluation_grid()) {
    Real sigma = std::numeric_limits<Real>::infinity();
    for (const auto& stopped : reference_payoffs) sigma = std::min(sigma, sample_stddev(stopped.head(N)));
    curves.q3.push_back({N, sigma / std::sqrt(Real(N))});
  }

  const bool q2_zero = std::all_of(curves.q2.begin(), curves.q2.end(), [](const CurvePoint& p) { return p.value == 0.0; });
  const bool q3_zero = std::all_of(curves.q3.begin(), curves.q3.end(), [](const CurvePoint& p) { return p.value == 0.0; });
  curves.degenerate = q2_zero && q3_zero;
  if (!curves.degenerate) {
    Real running = 0.0;
    for (const auto& p : curves.q2) {
      const auto n = solve_budget_relation(curves.q3, p.value);
      if (!n) continue;
      running = std::max(running, std::round(*n));
      curves.mn_pairs.push_back({p.size, running});
    }
  }
  return curves;
}

std::vector<DecompositionRow> decomposition_report(const QCurves& curves) {
  std::vector<DecompositionRow> rows;
  for (std::size_t i = 0; i < curves.per_M.size(); ++i) {
    for (const auto& q3 : curves.q3) {
      rows.push_back({curves.per_M[i].M, q3.size, curves.q1[i].value, curves.per_M[i].vartheta.value_or(0.0), q3.value});
    }
  }
  return rows;
}

std::vector<StreamKey> experiment_streams(const ExperimentPlan& plan, bool with_curves) {
  std::vector<StreamKey> keys{evaluation_stream(plan.seed)};
  if (!with_curves) {
    for (Index l = 0; l < plan.L; ++l) keys.push_back(optimization_stream(plan.seed, 0, l));
    return keys;
  }
  for (Index l = 0; l < plan.L_star; ++l) keys.push_back(optimization_stream(plan.seed, 0, l));
  for (std::size_t g = 0; g < plan.M_grid.size(); ++g) {
    if (plan.M_grid[g] == plan.M_star) continue;
    for (Index l = 0; l < plan.L_star; ++l) keys.push_back(optimization_stream(plan.seed, g + 1, l));
  }
  return keys;
}

}  // namespace osp
