// Copyright 2026 The AdvCat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <limits>

#include "advcat/search.hpp"

namespace advcat::detail {

struct TimeLimitReached {};

/// Shared bookkeeping for one search: timing, best-so-far tracking and the
/// translation of oracle failures into a terminated outcome.
class SearchContext {
 public:
  SearchContext(const CategoricalInstance& instance, OracleHandle& oracle, const SearchConfig& cfg);

  /// Queries `p` and returns its margin. Throws TimeLimitReached when the
  /// time limit has already passed; never interrupts a query in flight.
  double evaluate(const PerturbationSet& p);
  /// Same, also returning the probabilities.
  double evaluate(const PerturbationSet& p, ProbabilityVector& probs);

  double best_margin() const noexcept { return best_margin_; }
  bool succeeded() const noexcept { return best_margin_ >= cfg_.success_threshold; }

  /// Closes the current iteration: records its query count and the best margin.
  void end_iteration();

  SearchOutcome finish(Termination how);
  SearchOutcome fail(const std::string& error);

  const CategoricalInstance& instance() const noexcept { return instance_; }
  const SearchConfig& config() const noexcept { return cfg_; }
  std::size_t budget() const noexcept { return budget_; }

 private:
  double elapsed() const;

  const CategoricalInstance& instance_;
  OracleHandle& oracle_;
  const SearchConfig& cfg_;
  std::size_t budget_;
  std::chrono::steady_clock::time_point start_;
  QueryStats stats_at_start_;
  std::uint64_t queries_at_iteration_start_;
  double best_margin_ = -std::numeric_limits<double>::infinity();
  PerturbationSet best_;
  std::vector<double> trace_;
  std::vector<std::uint64_t> iteration_queries_;
  bool iteration_open_ = false;
};

/// Runs `body` and converts the time limit and oracle failures into outcomes.
template <typename Body>
SearchOutcome guarded(SearchContext& ctx, Body&& body) {
  try {
    return body();
  } catch (const TimeLimitReached&) {
    return ctx.finish(Termination::timeout);
  } catch (const OracleError& e) {
    return ctx.fail(e.what());
  }
}

}  // namespace advcat::detail
