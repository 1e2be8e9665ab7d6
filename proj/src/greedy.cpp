// Copyright 2026 The AdvCat Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <limits>

#include "advcat/rng.hpp"
#include "search_context.hpp"

namespace advcat {

namespace {

struct FeatureChoice {
  std::size_t feature = 0;
  ValueIndex value = 0;
  double margin = -std::numeric_limits<double>::infinity();
  bool found = false;
};

/// Shared body of fsgs and sgs. `sample_r` of 0 means every remaining feature.
SearchOutcome greedy_search(const CategoricalInstance& instance, OracleHandle& oracle,
                            const SearchConfig& cfg, std::size_t sample_r) {
  detail::SearchContext ctx(instance, oracle, cfg);
  const std::size_t n = instance.num_features();
  std::vector<std::vector<ValueIndex>> alternatives(n);
  for (std::size_t i = 0; i < n; ++i) alternatives[i] = instance.alternatives(i);

  Rng rng(cfg.seed);
  std::vector<Edit> selected;  // support set with the value each feature won with
  std::vector<bool> in_support(n, false);

  return detail::guarded(ctx, [&]() -> SearchOutcome {
    for (std::size_t t = 0; t < ctx.budget(); ++t) {
      std::vector<std::size_t> pool;
      for (std::size_t i = 0; i < n; ++i) {
        if (!in_support[i] && !alternatives[i].empty()) pool.push_back(i);
      }
      if (pool.empty()) return ctx.finish(Termination::exhausted);
      if (sample_r != 0 && sample_r < pool.size()) {
        pool = rng.sample(std::move(pool), sample_r);
        std::sort(pool.begin(), pool.end());
      }

      // Subsets of the support set are encoded as bit masks over `selected`.
      const std::size_t s = selected.size();
      const std::uint64_t last_mask =
          s >= 64 ? std::numeric_limits<std::uint64_t>::max() : (std::uint64_t{1} << s) - 1;

      FeatureChoice winner;
      for (std::size_t a : pool) {
        for (ValueIndex v : alternatives[a]) {
          for (std::uint64_t mask = 0;; ++mask) {
            PerturbationSet p;
            for (std::size_t b = 0; b < s; ++b) {
              if ((mask >> b) & 1u) p.set(selected[b]);
            }
            p.set({a, v});
            const double m = ctx.evaluate(p);
            if (!winner.found || m > winner.margin) winner = {a, v, m, true};
            if (mask == last_mask) break;
          }
        }
      }
      selected.push_back({winner.feature, winner.value});
      in_support[winner.feature] = true;
      ctx.end_iteration();
      if (ctx.succeeded()) return ctx.finish(Termination::success);
    }
    return ctx.finish(Termination::budget);
  });
}

}  // namespace

SearchOutcome fsgs(const CategoricalInstance& instance, OracleHandle& oracle, const SearchConfig& cfg) {
  if (cfg.algorithm != Algorithm::fsgs) throw std::invalid_argument("fsgs called with a non-fsgs config");
  return greedy_search(instance, oracle, cfg, 0);
}

SearchOutcome sgs(const CategoricalInstance& instance, OracleHandle& oracle, const SearchConfig& cfg) {
  if (cfg.algorithm != Algorithm::sgs) throw std::invalid_argument("sgs called with a non-sgs config");
  return greedy_search(instance, oracle, cfg, cfg.sgs_r);
}

}  // namespace advcat
