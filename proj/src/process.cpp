#include "osp/process.hpp"

#include "osp/parallel.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace osp {

void GbmSpec::validate() const {
  require(dim >= 1, "gbm: dim must be >= 1");
  require(vol >= 0.0 && std::isfinite(vol), "gbm: vol must be >= 0");
  require(spot > 0.0, "gbm: spot must be > 0");
  require(horizon > 0.0, "gbm: horizon must be > 0");
  require(dates >= 1, "gbm: dates must be >= 1");
  require(std::isfinite(rate) && std::isfinite(dividend), "gbm: rate and dividend must be finite");
}

void DiscreteChainSpec::validate() const {
  require(states >= 1, "chain: states must be >= 1");
  require(dates >= 1, "chain: dates must be >= 1");
  require(initial >= 0 && initial < states, "chain: initial state out of range");
  require(transitions.size() == static_cast<std::size_t>(dates), "chain: need one transition matrix per date");
  for (int k = 1; k <= dates; ++k) {
    const auto& p = transition(k);
    const std::string where = "chain: transition " + std::to_string(k);
    require(p.rows() == states && p.cols() == states, where + " has wrong shape");
    require((p.array() >= 0.0).all() && p.allFinite(), where + " has negative or non-finite entries");
    for (Index s = 0; s < states; ++s) {
      require(std::abs(p.row(s).sum() - 1.0) <= 1e-12, where + " row " + std::to_string(s) + " does not sum to 1");
    }
  }
}

int dates_of(const ProcessSpec& spec) {
  return std::visit([](const auto& s) { return s.dates; }, spec);
}

Index path_count(const PathSet& paths) {
  return std::visit([](const auto& p) { return p.count(); }, paths);
}

StreamKey stream_of(const PathSet& paths) {
  return std::visit([](const auto& p) { return p.key; }, paths);
}

namespace {
std::uint32_t item_index(Index m) {
  require(m <= Index(std::numeric_limits<std::uint32_t>::max()), "path index exceeds 2^32");
  return static_cast<std::uint32_t>(m);
}
}  // namespace

GbmPaths simulate_gbm_paths(const GbmSpec& spec, Index count, std::uint64_t seed, std::uint64_t stream_id) {
  spec.validate();
  require(count >= 1, "simulate_gbm_paths: count must be >= 1");
  GbmPaths out{spec, {seed, stream_id}, RowMajorMatrixX<Real>(count, Index(spec.dates) * spec.dim)};
  const Real dt = spec.dt();
  const Real drift = (spec.rate - spec.dividend - 0.5 * spec.vol * spec.vol) * dt;
  const Real diffusion = spec.vol * std::sqrt(dt);
  const Real log_spot = std::log(spec.spot);
  parallel_for(static_cast<std::size_t>(count), [&](std::size_t m) {
    SubstreamRng rng(out.key, item_index(Index(m)));
    Real* row = out.values.row(Index(m)).data();
    for (int l = 0; l < spec.dim; ++l) {
      Real log_x = log_spot;
      for (int k = 0; k < spec.dates; ++k) {
        log_x += drift + diffusion * rng.normal();
        row[k * spec.dim + l] = std::exp(log_x);
      }
    }
  });
  return out;
}

DiscretePaths simulate_discrete_paths(const DiscreteChainSpec& spec, Index count, std::uint64_t seed,
                                      std::uint64_t stream_id) {
  spec.validate();
  require(count >= 1, "simulate_discrete_paths: count must be >= 1");
  std::vector<Eigen::MatrixXd> cumulative;
  cumulative.reserve(spec.transitions.size());
  for (const auto& p : spec.transitions) {
    Eigen::MatrixXd c = p;
    for (Index j = 1; j < c.cols(); ++j) c.col(j) += c.col(j - 1);
    cumulative.push_back(std::move(c));
  }
  DiscretePaths out{spec, {seed, stream_id}, RowMajorMatrixX<int>(count, spec.dates)};
  parallel_for(static_cast<std::size_t>(count), [&](std::size_t m) {
    SubstreamRng rng(out.key, item_index(Index(m)));
    int s = spec.initial;
    for (int k = 0; k < spec.dates; ++k) {
      const auto& c = cumulative[static_cast<std::size_t>(k)];
      const double u = rng.uniform();
      int next = spec.states - 1;
      for (int j = 0; j < spec.states; ++j) {
        if (u <= c(s, j)) {
          next = j;
          break;
        }
      }
      // rounding in the cumulative sum must not select a zero-probability tail state
      while (next > 0 && spec.transitions[static_cast<std::size_t>(k)](s, next) == 0.0) --next;
      s = next;
      out.values(Index(m), k) = s;
    }
  });
  return out;
}

PathSet simulate_paths(const ProcessSpec& spec, Index count, std::uint64_t seed, std::uint64_t stream_id) {
  if (const auto* gbm = std::get_if<GbmSpec>(&spec)) return simulate_gbm_paths(*gbm, count, seed, stream_id);
  return simulate_discrete_paths(std::get<DiscreteChainSpec>(spec), count, seed, stream_id);
}

Eigen::MatrixXd marginal_distributions(const DiscreteChainSpec& spec) {
  spec.validate();
  Eigen::MatrixXd marginals(spec.dates, spec.states);
  Eigen::RowVectorXd law = Eigen::RowVectorXd::Zero(spec.states);
  law(spec.initial) = 1.0;
  for (int k = 1; k <= spec.dates; ++k) {
    law = law * spec.transition(k);
    marginals.row(k - 1) = law;
  }
  return marginals;
}

}  // namespace osp
