// Copyright 2026 The AdvCat Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "search_context.hpp"

namespace advcat {

double brute_force_space(const CategoricalInstance& instance, std::size_t budget) {
  const std::size_t n = instance.num_features();
  std::size_t widest = 0;
  for (std::size_t i = 0; i < n; ++i) widest = std::max(widest, instance.num_alternatives(i));
  double total = 0.0;
  double choose = 1.0;  // C(n, k)
  for (std::size_t k = 0; k <= std::min(budget, n); ++k) {
    if (k > 0) choose = choose * static_cast<double>(n - k + 1) / static_cast<double>(k);
    total += choose * std::pow(static_cast<double>(widest), static_cast<double>(k));
  }
  return total;
}

SearchOutcome brute_force(const CategoricalInstance& instance, OracleHandle& oracle,
                          const SearchConfig& cfg) {
  if (cfg.algorithm != Algorithm::brute) throw std::invalid_argument("brute_force called with a non-brute config");
  const std::size_t budget = cfg.budget.resolve(instance.num_features());
  if (brute_force_space(instance, budget) > kBruteForceLimit) {
    throw std::invalid_argument("brute-force search space exceeds the guard of 1e6 perturbations");
  }
  detail::SearchContext ctx(instance, oracle, cfg);
  const std::size_t n = instance.num_features();
  std::vector<std::vector<ValueIndex>> alternatives(n);
  for (std::size_t i = 0; i < n; ++i) alternatives[i] = instance.alternatives(i);

  return detail::guarded(ctx, [&]() -> SearchOutcome {
    // Sizes ascending, feature sets and value tuples lexicographic; the first
    // maximum wins, which gives the smallest then lexicographically first set.
    ctx.evaluate(PerturbationSet{});
    ctx.end_iteration();
    for (std::size_t k = 1; k <= std::min(budget, n); ++k) {
      std::vector<std::size_t> features(k);
      for (std::size_t j = 0; j < k; ++j) features[j] = j;
      while (true) {
        bool playable = true;
        for (auto f : features) playable = playable && !alternatives[f].empty();
        if (playable) {
          std::vector<std::size_t> digit(k, 0);
          while (true) {
            PerturbationSet p;
            for (std::size_t j = 0; j < k; ++j) p.set({features[j], alternatives[features[j]][digit[j]]});
            ctx.evaluate(p);
            std::size_t j = k;
            while (j > 0 && ++digit[j - 1] == alternatives[features[j - 1]].size()) digit[--j] = 0;
            if (j == 0) break;
          }
        }
        // next k-combination of 0..n-1
        std::size_t j = k;
        while (j > 0 && features[j - 1] == n - k + j - 1) --j;
        if (j == 0) break;
        ++features[j - 1];
        for (std::size_t q = j; q < k; ++q) features[q] = features[q - 1] + 1;
      }
      ctx.end_iteration();
    }
    return ctx.finish(Termination::exhausted);
  });
}

}  // namespace advcat
