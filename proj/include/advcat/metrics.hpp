// Copyright 2026 The AdvCat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace advcat {

/// A metric that may be undefined for the data at hand (e.g. FPR without
/// negatives). `defined == false` is the undefined marker.
struct MetricValue {
  bool defined = false;
  double value = 0.0;

  static MetricValue of(double v) { return {true, v}; }
  static MetricValue undefined() { return {}; }
  friend bool operator==(const MetricValue&, const MetricValue&) = default;
};

/// Detection metrics; an absent field was not computed in this mode.
struct MetricSet {
  std::optional<MetricValue> acc, f1, fpr, auc, dr;
  friend bool operator==(const MetricSet&, const MetricSet&) = default;
};

/// Which fields compute_metrics fills.
struct MetricSelection {
  bool acc = true, f1 = true, fpr = true, auc = true, dr = false;
};

/// Relative change (after - before) / before as a fraction; -0.4 renders
/// as -40%. Undefined on a zero or undefined baseline.
struct DeltaSet {
  std::optional<MetricValue> dacc, df1, dfpr, dauc, ddr;
  friend bool operator==(const DeltaSet&, const DeltaSet&) = default;
};

/// acc = mean(prediction == label). The binary metrics treat
/// `positive_class` as positive: f1 on the positive class (0 when there are no
/// true positives), fpr = FP/(FP+TN), dr = TP/(TP+FN), auc by rank sum with
/// ties counted 1/2 over `scores` (the positive-class confidence).
MetricSet compute_metrics(std::span<const int> predictions, std::span<const int> labels,
                          std::span<const double> scores, int positive_class,
                          MetricSelection which = {});

/// Probability that a random positive outscores a random negative.
MetricValue roc_auc(std::span<const double> scores, std::span<const int> positive);

/// Throws std::invalid_argument when before and after carry different fields.
DeltaSet compute_deltas(const MetricSet& before, const MetricSet& after);
MetricValue relative_change(const MetricValue& before, const MetricValue& after);

struct UnitExpense {
  bool attacked = false;
  std::uint64_t queries = 0;
  double runtime = 0.0;
};

struct ExpenseStats {
  std::optional<double> avg_queries;  // empty when nothing was attacked
  std::optional<double> avg_runtime;
  std::size_t attacked_count = 0;
  std::size_t skipped_count = 0;
  friend bool operator==(const ExpenseStats&, const ExpenseStats&) = default;
};

ExpenseStats aggregate_expenses(std::span<const UnitExpense> units);

/// "-40%", "+700%", "0%"; rounded to whole percent.
std::string format_percent(double fraction);

}  // namespace advcat
