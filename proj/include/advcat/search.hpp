// Copyright 2026 The AdvCat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Budgeted search for feature substitutions that flip a black-box decision.
//
// The objective is the decision margin of the perturbed instance; a search
// succeeds once the best margin reaches the success threshold (0 by default).
// Three heuristics are provided along with an exhaustive reference:
//
//   fsgs   forward stepwise greedy: each iteration tries every remaining
//          feature, every subset of the already selected features (with their
//          stored values) and every replacement value, then keeps the feature
//          whose best combination scored highest.
//   sgs    fsgs restricted each iteration to r uniformly sampled features.
//   ucbs   upper-confidence-bound bandit over features: one pass of single
//          edits, then one query per iteration on the growing selected set.
//   brute  every perturbation with at most budget edits.
//
// All ties resolve to the lowest feature index, then the lowest value index.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "advcat/instance.hpp"
#include "advcat/oracle.hpp"

namespace advcat {

enum class Algorithm { fsgs, sgs, ucbs, brute };
enum class Termination { success, budget, timeout, exhausted };

/// How UCBS averages arm rewards: over all rounds elapsed (zeros included
/// for rounds in which the arm was not pulled), or over the arm's own pulls.
enum class UcbMean { rounds, pulls };

const char* to_string(Algorithm a);
const char* to_string(Termination t);
const char* to_string(UcbMean m);
Algorithm parse_algorithm(const std::string& s);
Termination parse_termination(const std::string& s);
UcbMean parse_ucb_mean(const std::string& s);

/// Maximum number of edits: an absolute count, or a fraction of the feature
/// count rounded down with a floor of one edit.
class Budget {
 public:
  static Budget absolute(std::size_t edits);
  static Budget fraction(double share);
  /// "5" or "35%".
  static Budget parse(const std::string& text);

  std::size_t resolve(std::size_t num_features) const;
  std::string str() const;
  bool is_fraction() const noexcept { return is_fraction_; }
  double value() const noexcept { return value_; }

  friend bool operator==(const Budget&, const Budget&) = default;

 private:
  Budget(bool is_fraction, double value) : is_fraction_(is_fraction), value_(value) {}

  bool is_fraction_ = false;
  double value_ = 5;
};

/// max over wrong classes of probs[k] minus probs[true_label]. In [-1, 1];
/// non-negative iff the decision is wrong or tied. Throws for K < 2.
double margin(const ProbabilityVector& probs, ClassIndex true_label);

/// The k_rank-th largest wrong-class probability minus probs[true_label];
/// non-negative iff the true label is outside the top k_rank (ties count as
/// outside). Requires 1 <= k_rank < K. Equals margin() at k_rank = 1.
double margin_topk(const ProbabilityVector& probs, ClassIndex true_label, std::size_t k_rank);

/// What the search maximizes.
struct Objective {
  enum class Goal {
    misclassify,  // push the true label out of the top k_rank
    restore,      // pull the true label back into the top k_rank
  };
  Goal goal = Goal::misclassify;
  std::size_t k_rank = 1;

  double margin(const ProbabilityVector& probs, ClassIndex true_label) const;
  /// Bandit reward in [0, 1]: the k_rank-th largest wrong-class probability
  /// when misclassifying, the true-class probability when restoring.
  double reward(const ProbabilityVector& probs, ClassIndex true_label) const;
};

struct SearchConfig {
  Algorithm algorithm = Algorithm::fsgs;
  Budget budget = Budget::absolute(5);
  double time_limit = 60.0;  // seconds per instance
  std::size_t sgs_r = 5;
  double ucb_alpha = 2.0;
  UcbMean ucb_mean = UcbMean::rounds;
  std::uint64_t seed = 0;
  double success_threshold = 0.0;
  bool cache = true;
  Objective objective;

  /// Throws std::invalid_argument on a broken invariant.
  void validate() const;
};

struct SearchOutcome {
  bool success = false;
  PerturbationSet perturbation;
  /// Best margin over every queried perturbation; -inf when nothing was queried.
  double margin = 0.0;
  std::vector<double> margin_trace;
  /// Backend evaluations per iteration. For ucbs entry 0 is the single-edit
  /// initialization pass; for brute entry k covers perturbations of size k.
  std::vector<std::uint64_t> iteration_queries;
  QueryStats stats;
  double wall_time = 0.0;
  Termination terminated_by = Termination::exhausted;
  std::size_t budget = 0;  // resolved edit budget
  std::string error;       // set when the oracle failed mid-search
};

SearchOutcome fsgs(const CategoricalInstance& instance, OracleHandle& oracle, const SearchConfig& cfg);
SearchOutcome sgs(const CategoricalInstance& instance, OracleHandle& oracle, const SearchConfig& cfg);
SearchOutcome ucbs(const CategoricalInstance& instance, OracleHandle& oracle, const SearchConfig& cfg);

inline constexpr double kBruteForceLimit = 1e6;

/// Size of the brute-force search space: sum_{k<=budget} C(n,k) * A^k with A
/// the largest per-feature alternative count.
double brute_force_space(const CategoricalInstance& instance, std::size_t budget);

/// Exhaustive optimum. Throws std::invalid_argument when the space exceeds
/// kBruteForceLimit.
SearchOutcome brute_force(const CategoricalInstance& instance, OracleHandle& oracle,
                          const SearchConfig& cfg);

/// Dispatches on cfg.algorithm.
SearchOutcome run_search(const CategoricalInstance& instance, OracleHandle& oracle,
                         const SearchConfig& cfg);

}  // namespace advcat
