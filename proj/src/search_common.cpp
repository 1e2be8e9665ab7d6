// Copyright 2026 The AdvCat Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <functional>

#include "search_context.hpp"

namespace advcat {

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::fsgs: return "fsgs";
    case Algorithm::sgs: return "sgs";
    case Algorithm::ucbs: return "ucbs";
    case Algorithm::brute: return "brute";
  }
  return "?";
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::success: return "success";
    case Termination::budget: return "budget";
    case Termination::timeout: return "timeout";
    case Termination::exhausted: return "exhausted";
  }
  return "?";
}

const char* to_string(UcbMean m) { return m == UcbMean::rounds ? "rounds" : "pulls"; }

Algorithm parse_algorithm(const std::string& s) {
  for (auto a : {Algorithm::fsgs, Algorithm::sgs, Algorithm::ucbs, Algorithm::brute}) {
    if (s == to_string(a)) return a;
  }
  throw std::invalid_argument("unknown algorithm '" + s + "' (fsgs, sgs, ucbs, brute)");
}

Termination parse_termination(const std::string& s) {
  for (auto t : {Termination::success, Termination::budget, Termination::timeout,
                 Termination::exhausted}) {
    if (s == to_string(t)) return t;
  }
  throw std::invalid_argument("unknown termination '" + s + "'");
}

UcbMean parse_ucb_mean(const std::string& s) {
  if (s == "rounds") return UcbMean::rounds;
  if (s == "pulls") return UcbMean::pulls;
  throw std::invalid_argument("unknown UCB mean '" + s + "' (rounds, pulls)");
}

Budget Budget::absolute(std::size_t edits) {
  if (edits < 1) throw std::invalid_argument("budget must allow at least one edit");
  return Budget(false, static_cast<double>(edits));
}

Budget Budget::fraction(double share) {
  if (!(share > 0.0) || share > 1.0) throw std::invalid_argument("budget fraction must be in (0, 1]");
  return Budget(true, share);
}

Budget Budget::parse(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("empty budget");
  std::size_t pos = 0;
  if (text.back() == '%') {
    double pct = 0.0;
    try {
      pct = std::stod(text.substr(0, text.size() - 1), &pos);
    } catch (const std::exception&) {
      pos = std::string::npos;
    }
    if (pos != text.size() - 1) throw std::invalid_argument("bad budget '" + text + "'");
    return fraction(pct / 100.0);
  }
  long long edits = 0;
  try {
    edits = std::stoll(text, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (pos != text.size()) throw std::invalid_argument("bad budget '" + text + "'");
  if (edits < 1) throw std::invalid_argument("budget must allow at least one edit");
  return absolute(static_cast<std::size_t>(edits));
}

std::size_t Budget::resolve(std::size_t num_features) const {
  if (!is_fraction_) return static_cast<std::size_t>(value_);
  // Small epsilon so that 35% of 20 is 7, not 6.999...
  const auto edits = static_cast<std::size_t>(std::floor(value_ * static_cast<double>(num_features) + 1e-9));
  return std::max<std::size_t>(1, edits);
}

std::string Budget::str() const {
  if (!is_fraction_) return std::to_string(static_cast<std::size_t>(value_));
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.15g%%", value_ * 100.0);
  return buf;
}

namespace {

void check_label(const ProbabilityVector& probs, ClassIndex true_label) {
  if (probs.size() < 2) throw std::invalid_argument("margin needs at least two classes");
  if (true_label < 0 || static_cast<std::size_t>(true_label) >= probs.size()) {
    throw std::invalid_argument("true label out of range");
  }
}

/// k-th largest probability among classes other than `true_label`.
double kth_wrong(const ProbabilityVector& probs, ClassIndex true_label, std::size_t k) {
  if (k == 1) {
    double best = -1.0;
    for (std::size_t c = 0; c < probs.size(); ++c) {
      if (static_cast<ClassIndex>(c) != true_label) best = std::max(best, probs[c]);
    }
    return best;
  }
  std::vector<double> wrong;
  wrong.reserve(probs.size() - 1);
  for (std::size_t c = 0; c < probs.size(); ++c) {
    if (static_cast<ClassIndex>(c) != true_label) wrong.push_back(probs[c]);
  }
  std::nth_element(wrong.begin(), wrong.begin() + static_cast<std::ptrdiff_t>(k - 1), wrong.end(),
                   std::greater<>());
  return wrong[k - 1];
}

}  // namespace

double margin(const ProbabilityVector& probs, ClassIndex true_label) {
  check_label(probs, true_label);
  return kth_wrong(probs, true_label, 1) - probs[static_cast<std::size_t>(true_label)];
}

double margin_topk(const ProbabilityVector& probs, ClassIndex true_label, std::size_t k_rank) {
  check_label(probs, true_label);
  if (k_rank < 1 || k_rank >= probs.size()) {
    throw std::invalid_argument("top-k rank must be in [1, K)");
  }
  return kth_wrong(probs, true_label, k_rank) - probs[static_cast<std::size_t>(true_label)];
}

double Objective::margin(const ProbabilityVector& probs, ClassIndex true_label) const {
  const double m = margin_topk(probs, true_label, k_rank);
  return goal == Goal::misclassify ? m : -m;
}

double Objective::reward(const ProbabilityVector& probs, ClassIndex true_label) const {
  check_label(probs, true_label);
  if (goal == Goal::restore) return probs[static_cast<std::size_t>(true_label)];
  return kth_wrong(probs, true_label, k_rank);
}

void SearchConfig::validate() const {
  if (!(time_limit > 0.0)) throw std::invalid_argument("time limit must be positive");
  if (sgs_r < 1) throw std::invalid_argument("sgs sample size r must be at least 1");
  if (!(ucb_alpha > 0.0) || !std::isfinite(ucb_alpha)) throw std::invalid_argument("ucb alpha must be positive");
  if (objective.k_rank < 1) throw std::invalid_argument("top-k rank must be at least 1");
  if (!std::isfinite(success_threshold)) throw std::invalid_argument("success threshold must be finite");
}

SearchOutcome run_search(const CategoricalInstance& instance, OracleHandle& oracle,
                         const SearchConfig& cfg) {
  switch (cfg.algorithm) {
    case Algorithm::fsgs: return fsgs(instance, oracle, cfg);
    case Algorithm::sgs: return sgs(instance, oracle, cfg);
    case Algorithm::ucbs: return ucbs(instance, oracle, cfg);
    case Algorithm::brute: return brute_force(instance, oracle, cfg);
  }
  throw std::invalid_argument("unknown algorithm");
}

namespace detail {

SearchContext::SearchContext(const CategoricalInstance& instance, OracleHandle& oracle,
                             const SearchConfig& cfg)
    : instance_(instance), oracle_(oracle), cfg_(cfg), budget_(cfg.budget.resolve(instance.num_features())),
      start_(std::chrono::steady_clock::now()), stats_at_start_(oracle.stats()),
      queries_at_iteration_start_(oracle.stats().queries_issued) {
  cfg.validate();
  if (instance.num_features() == 0) throw std::invalid_argument("instance has no features");
  if (instance.true_label < 0 || static_cast<std::size_t>(instance.true_label) >= oracle.num_classes()) {
    throw std::invalid_argument("instance label outside the oracle's classes");
  }
  if (cfg.objective.k_rank >= oracle.num_classes()) {
    throw std::invalid_argument("top-k rank must be below the number of classes");
  }
  oracle_.set_cache_enabled(cfg.cache);
}

double SearchContext::elapsed() const {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
}

double SearchContext::evaluate(const PerturbationSet& p) {
  ProbabilityVector probs;
  return evaluate(p, probs);
}

double SearchContext::evaluate(const PerturbationSet& p, ProbabilityVector& probs) {
  if (elapsed() > cfg_.time_limit) throw TimeLimitReached{};
  iteration_open_ = true;
  probs = oracle_.query(instance_, p);
  const double m = cfg_.objective.margin(probs, instance_.true_label);
  if (m > best_margin_) {
    best_margin_ = m;
    best_ = p;
  }
  return m;
}

void SearchContext::end_iteration() {
  const auto now = oracle_.stats().queries_issued;
  iteration_queries_.push_back(now - queries_at_iteration_start_);
  queries_at_iteration_start_ = now;
  trace_.push_back(best_margin_);
  iteration_open_ = false;
}

SearchOutcome SearchContext::finish(Termination how) {
  if (iteration_open_) end_iteration();
  SearchOutcome out;
  out.success = succeeded();
  out.perturbation = best_;
  out.margin = best_margin_;
  out.margin_trace = std::move(trace_);
  out.iteration_queries = std::move(iteration_queries_);
  const auto& now = oracle_.stats();
  out.stats.queries_issued = now.queries_issued - stats_at_start_.queries_issued;
  out.stats.cache_hits = now.cache_hits - stats_at_start_.cache_hits;
  out.stats.elapsed = now.elapsed - stats_at_start_.elapsed;
  out.wall_time = elapsed();
  out.terminated_by = out.success ? Termination::success : how;
  out.budget = budget_;
  return out;
}

SearchOutcome SearchContext::fail(const std::string& error) {
  auto out = finish(Termination::timeout);
  out.terminated_by = Termination::timeout;
  out.error = error;
  return out;
}

}  // namespace detail

}  // namespace advcat
