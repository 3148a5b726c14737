#pragma once

#include "osp/process.hpp"

#include <functional>

// Visits every trajectory X_1..X_K of a finite chain with its probability.
inline void for_each_path(const osp::DiscreteChainSpec& chain,
                          const std::function<void(const Eigen::VectorXi&, double)>& visit) {
  Eigen::VectorXi path(chain.dates);
  std::function<void(int, int, double)> step = [&](int k, int from, double prob) {
    if (k > chain.dates) {
      visit(path, prob);
      return;
    }
    for (int s = 0; s < chain.states; ++s) {
      const double p = chain.transition(k)(from, s);
      if (p == 0.0) continue;
      path(k - 1) = s;
      step(k + 1, s, prob * p);
    }
  };
  step(1, chain.initial, 1.0);
}
