#include "osp/optimize.hpp"

#include "osp/parallel.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <numeric>

namespace osp {

void OptimizerConfig::validate() const {
  require(grid_points_per_dim >= 2, "optimizer: grid_points_per_dim must be >= 2");
  require(refine_rounds >= 0 && refine_top_k >= 0, "optimizer: refine counts must be >= 0");
  require(pattern_shrink > 0.0 && pattern_shrink < 1.0, "optimizer: pattern_shrink must lie in (0, 1)");
  if (box) box->validate();
}

ThetaBox default_box(const RegionFamily& family) {
  if (const auto* mc = std::get_if<MaxCallFamily>(&family)) {
    const Index p = mc->parameter_count();
    return {Eigen::VectorXd::Zero(p), Eigen::VectorXd::Constant(p, 50.0)};
  }
  if (const auto* table = std::get_if<TableFamily>(&family)) {
    const Index p = table->parameter_count();
    return {Eigen::VectorXd::Zero(p), Eigen::VectorXd::Ones(p)};
  }
  throw ParameterError("default_box: boundary family has no parameters");
}

BatchObjective::BatchObjective(RegionFamily family, const PayoffSpec& payoffs, const PathSet& paths)
    : family_(std::move(family)), count_(path_count(paths)) {
  const Eigen::MatrixXd g = payoff_matrix(payoffs, paths);
  dates_ = int(g.cols());
  const auto* mc = std::get_if<MaxCallFamily>(&family_);
  const auto* table = std::get_if<TableFamily>(&family_);
  const auto* gbm = std::get_if<GbmPaths>(&paths);
  const auto* discrete = std::get_if<DiscretePaths>(&paths);

  if (mc != nullptr && gbm != nullptr) {
    require(gbm->dim() == mc->dim, "BatchObjective: path dimension differs from the max-call family");
    require(mc->shared || mc->dates == dates_, "BatchObjective: per-date family has the wrong number of dates");
    payoffs_ = g;
    itm_.resize(count_, dates_);
    spread_.resize(count_, dates_);
    for (Index m = 0; m < count_; ++m) {
      for (int k = 1; k <= dates_; ++k) {
        const auto f = max_call_features(gbm->state(m, k), mc->strike);
        itm_(m, k - 1) = f.itm;
        spread_(m, k - 1) = f.spread;
      }
    }
    weights_ = Eigen::VectorXd::Ones(count_);
    row_of_path_.resize(static_cast<std::size_t>(count_));
    std::iota(row_of_path_.begin(), row_of_path_.end(), Index(0));
    return;
  }

  if (table != nullptr && discrete != nullptr) {
    require(table->states == discrete->spec.states && table->dates == dates_,
            "BatchObjective: table family shape differs from the chain");
    // group identical trajectories; std::map keeps the distinct rows in lexicographic order
    std::map<std::vector<int>, std::vector<Index>> groups;
    for (Index m = 0; m < count_; ++m) {
      std::vector<int> key(static_cast<std::size_t>(dates_));
      for (int k = 0; k < dates_; ++k) key[static_cast<std::size_t>(k)] = discrete->values(m, k);
      groups[key].push_back(m);
    }
    const Index rows = Index(groups.size());
    states_.resize(rows, dates_);
    payoffs_.resize(rows, dates_);
    weights_.resize(rows);
    row_of_path_.resize(static_cast<std::size_t>(count_));
    Index r = 0;
    for (const auto& [key, members] : groups) {
      for (int k = 0; k < dates_; ++k) {
        states_(r, k) = key[static_cast<std::size_t>(k)];
        payoffs_(r, k) = g(members.front(), k);
      }
      weights_(r) = Real(members.size());
      for (Index m : members) row_of_path_[static_cast<std::size_t>(m)] = r;
      ++r;
    }
    return;
  }

  payoffs_ = g;
  weights_ = Eigen::VectorXd::Ones(count_);
  row_of_path_.resize(static_cast<std::size_t>(count_));
  std::iota(row_of_path_.begin(), row_of_path_.end(), Index(0));
  generic_paths_ = std::make_shared<const PathSet>(paths);
}

Real BatchObjective::stopped(Index row, const Theta& theta) const {
  if (generic_paths_) {
    const int tau = first_entry_time(*generic_paths_, row, family_, theta);
    return payoffs_(row, tau - 1);
  }
  const Real* g = payoffs_.row(row).data();
  if (const auto* mc = std::get_if<MaxCallFamily>(&family_)) {
    const Real* itm = itm_.row(row).data();
    const Real* spread = spread_.row(row).data();
    for (int k = 0; k + 1 < dates_; ++k) {
      const Index offset = mc->shared ? 0 : 2 * Index(k);
      if (itm[k] > theta(offset) && spread[k] > theta(offset + 1)) return g[k];
    }
    return g[dates_ - 1];
  }
  const int states = std::get<TableFamily>(family_).states;
  const int* s = states_.row(row).data();
  for (int k = 0; k + 1 < dates_; ++k) {
    if (theta(Index(k) * states + s[k]) > 0.5) return g[k];
  }
  return g[dates_ - 1];
}

Real BatchObjective::operator()(const Theta& theta) const {
  if (const auto* mc = std::get_if<MaxCallFamily>(&family_)) {
    require(theta.size() == (mc->shared ? 2 : 2 * Index(dates_ - 1)), "BatchObjective: theta has wrong size");
  } else if (const auto* table = std::get_if<TableFamily>(&family_)) {
    require(theta.size() == table->parameter_count(), "BatchObjective: theta has wrong size");
  }
  Real total = 0.0;
  for (Index r = 0; r < weights_.size(); ++r) total += weights_(r) * stopped(r, theta);
  return total / Real(count_);
}

Eigen::VectorXd BatchObjective::stopped_payoffs(const Theta& theta) const {
  Eigen::VectorXd per_row(weights_.size());
  for (Index r = 0; r < weights_.size(); ++r) per_row(r) = stopped(r, theta);
  Eigen::VectorXd out(count_);
  for (Index m = 0; m < count_; ++m) out(m) = per_row(row_of_path_[static_cast<std::size_t>(m)]);
  return out;
}

Real empirical_value(const Theta& theta, const RegionFamily& family, const PayoffSpec& payoffs, const PathSet& paths) {
  return BatchObjective(family, payoffs, paths)(theta);
}

namespace {

using Key = std::vector<Real>;

Theta theta_of(const Key& key) { return Eigen::Map<const Eigen::VectorXd>(key.data(), Index(key.size())); }

/// Evaluates each new candidate once; results land in the cache in a fixed order.
class Evaluator {
 public:
  Evaluator(const Objective& objective, bool keep_trace) : objective_(objective), keep_trace_(keep_trace) {}

  void evaluate(const std::vector<Key>& candidates) {
    std::vector<Key> fresh;
    std::set<Key> seen;
    for (const auto& c : candidates) {
      if (!cache_.contains(c) && seen.insert(c).second) fresh.push_back(c);
    }
    std::vector<Real> values(fresh.size());
    parallel_for(fresh.size(), [&](std::size_t i) { values[i] = objective_(theta_of(fresh[i])); });
    for (std::size_t i = 0; i < fresh.size(); ++i) {
      cache_.emplace(fresh[i], values[i]);
      if (keep_trace_) trace_.push_back({theta_of(fresh[i]), values[i]});
    }
  }

  Real value(const Key& k) const { return cache_.at(k); }
  const std::map<Key, Real>& cache() const { return cache_; }
  std::vector<TraceEntry> take_trace() { return std::move(trace_); }

 private:
  const Objective& objective_;
  bool keep_trace_;
  std::map<Key, Real> cache_;
  std::vector<TraceEntry> trace_;
};

/// Higher value first; equal values in lexicographic theta order.
bool better(const std::pair<Key, Real>& a, const std::pair<Key, Real>& b) {
  if (a.second != b.second) return a.second > b.second;
  return a.first < b.first;
}

}  // namespace

OptimizeResult optimize_regions(const Objective& objective, const ThetaBox& box, const OptimizerConfig& config) {
  config.validate();
  box.validate();
  const Index p = box.size();
  const int n = config.grid_points_per_dim;

  std::vector<std::vector<Real>> axes(static_cast<std::size_t>(p));
  Eigen::VectorXd spacing(p);
  double grid_size = 1.0;
  for (Index i = 0; i < p; ++i) {
    const Real lo = box.lower(i);
    const Real hi = box.upper(i);
    auto& axis = axes[static_cast<std::size_t>(i)];
    if (hi == lo) {
      axis.push_back(lo);
      spacing(i) = 0.0;
    } else {
      for (int j = 0; j < n; ++j) axis.push_back(j + 1 == n ? hi : lo + (hi - lo) * j / (n - 1));
      spacing(i) = (hi - lo) / (n - 1);
    }
    grid_size *= double(axis.size());
  }
  if (grid_size > 1e7) throw SizeError("optimize_regions: grid has more than 1e7 points");

  std::vector<Key> grid;
  grid.reserve(static_cast<std::size_t>(grid_size));
  std::vector<std::size_t> digit(static_cast<std::size_t>(p), 0);
  for (bool done = false; !done;) {
    Key point(static_cast<std::size_t>(p));
    for (std::size_t i = 0; i < point.size(); ++i) point[i] = axes[i][digit[i]];
    grid.push_back(std::move(point));
    std::ptrdiff_t i = std::ptrdiff_t(p) - 1;
    while (i >= 0 && ++digit[std::size_t(i)] == axes[std::size_t(i)].size()) digit[std::size_t(i--)] = 0;
    done = i < 0;
  }

  Evaluator eval(objective, config.keep_trace);
  eval.evaluate(grid);

  std::vector<std::pair<Key, Real>> ranked;
  ranked.reserve(grid.size());
  for (const auto& g : grid) ranked.emplace_back(g, eval.value(g));
  const std::size_t starts = std::min<std::size_t>(static_cast<std::size_t>(config.refine_top_k), ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + std::ptrdiff_t(starts), ranked.end(), better);

  for (std::size_t s = 0; s < starts; ++s) {
    Key current = ranked[s].first;
    Real current_value = ranked[s].second;
    Eigen::VectorXd step = spacing;
    for (int round = 0; round < config.refine_rounds; ++round) {
      std::vector<Key> poll;
      for (Index i = 0; i < p; ++i) {
        if (step(i) == 0.0) continue;
        for (Real sign : {-1.0, 1.0}) {
          Key next = current;
          auto& c = next[static_cast<std::size_t>(i)];
          c = std::clamp(c + sign * step(i), box.lower(i), box.upper(i));
          if (next != current) poll.push_back(std::move(next));
        }
      }
      if (poll.empty()) break;
      eval.evaluate(poll);
      std::pair<Key, Real> best{current, current_value};
      for (const auto& candidate : poll) {
        std::pair<Key, Real> entry{candidate, eval.value(candidate)};
        if (entry.second > current_value && better(entry, best)) best = entry;
      }
      if (best.first != current) {
        current = best.first;
        current_value = best.second;
      } else {
        step *= config.pattern_shrink;
      }
    }
  }

  std::pair<Key, Real> winner = *eval.cache().begin();
  for (const auto& entry : eval.cache()) {
    if (better(entry, winner)) winner = entry;
  }

  OptimizeResult result;
  result.theta_hat = {theta_of(winner.first), box};
  result.empirical_value = winner.second;
  result.evaluations = Index(eval.cache().size());
  result.trace = eval.take_trace();
  return result;
}

OptimizeResult optimize_regions(const RegionFamily& family, const PayoffSpec& payoffs, const PathSet& paths,
                                const OptimizerConfig& config) {
  const BatchObjective objective(family, payoffs, paths);
  const ThetaBox box = config.box ? *config.box : default_box(family);
  return optimize_regions([&](const Theta& t) { return objective(t); }, box, config);
}

}  // namespace osp
