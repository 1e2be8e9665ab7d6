// Copyright 2026 The AdvCat Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>

#include "search_context.hpp"

namespace advcat {

namespace {

struct Arm {
  bool playable = false;
  double cumulative_reward = 0.0;
  std::uint64_t pulls = 0;
  ValueIndex best_value = 0;
};

}  // namespace

SearchOutcome ucbs(const CategoricalInstance& instance, OracleHandle& oracle, const SearchConfig& cfg) {
  if (cfg.algorithm != Algorithm::ucbs) throw std::invalid_argument("ucbs called with a non-ucbs config");
  detail::SearchContext ctx(instance, oracle, cfg);
  const std::size_t n = instance.num_features();
  std::vector<Arm> arms(n);

  return detail::guarded(ctx, [&]() -> SearchOutcome {
    // Initialization: every single edit once. Each arm keeps its best value
    // and starts with the reward of that best single-edit query.
    ProbabilityVector probs;
    for (std::size_t i = 0; i < n; ++i) {
      double best = -std::numeric_limits<double>::infinity();
      ProbabilityVector best_probs;
      for (ValueIndex v : instance.alternatives(i)) {
        const double m = ctx.evaluate(PerturbationSet({{i, v}}), probs);
        if (!arms[i].playable || m > best) {
          arms[i].playable = true;
          arms[i].best_value = v;
          best = m;
          best_probs = probs;
        }
        if (ctx.succeeded()) return ctx.finish(Termination::success);
      }
      if (arms[i].playable) {
        arms[i].cumulative_reward = cfg.objective.reward(best_probs, instance.true_label);
        arms[i].pulls = 1;
      }
    }
    ctx.end_iteration();

    std::uint64_t rounds = 1;  // rounds elapsed, initialization included
    PerturbationSet support;
    while (support.size() < ctx.budget()) {
      const double log_t = std::log(static_cast<double>(rounds + 1));
      std::size_t chosen = n;
      double chosen_bound = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i) {
        const Arm& arm = arms[i];
        if (!arm.playable || support.contains(i)) continue;
        const double denom = cfg.ucb_mean == UcbMean::rounds ? static_cast<double>(rounds)
                                                              : static_cast<double>(arm.pulls);
        const double bound = arm.cumulative_reward / denom +
                             std::sqrt(cfg.ucb_alpha * log_t / (2.0 * static_cast<double>(arm.pulls)));
        if (chosen == n || bound > chosen_bound) {
          chosen = i;
          chosen_bound = bound;
        }
      }
      if (chosen == n) return ctx.finish(Termination::exhausted);

      support.set({chosen, arms[chosen].best_value});
      ctx.evaluate(support, probs);
      // Only the pulled arm earns a reward this round; the others earn 0.
      arms[chosen].cumulative_reward += cfg.objective.reward(probs, instance.true_label);
      ++arms[chosen].pulls;
      ++rounds;
      ctx.end_iteration();
      if (ctx.succeeded()) return ctx.finish(Termination::success);
    }
    return ctx.finish(Termination::budget);
  });
}

}  // namespace advcat
