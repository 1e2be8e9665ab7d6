// Copyright 2026 The AdvCat Authors
// SPDX-License-Identifier: Apache-2.0

#include "advcat/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace advcat {

MetricValue roc_auc(std::span<const double> scores, std::span<const int> positive) {
  if (scores.size() != positive.size()) throw std::invalid_argument("auc: length mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Average ranks over tied groups.
  double rank_sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t q = i; q < j; ++q) {
      if (positive[order[q]]) {
        rank_sum += avg_rank;
        ++pos;
      }
    }
    i = j;
  }
  const std::size_t neg = scores.size() - pos;
  if (pos == 0 || neg == 0) return MetricValue::undefined();
  const double p = static_cast<double>(pos);
  return MetricValue::of((rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg)));
}

MetricSet compute_metrics(std::span<const int> predictions, std::span<const int> labels,
                          std::span<const double> scores, int positive_class, MetricSelection which) {
  if (predictions.size() != labels.size()) throw std::invalid_argument("metrics: length mismatch");
  if ((which.auc) && scores.size() != labels.size()) {
    throw std::invalid_argument("metrics: scores length mismatch");
  }
  const std::size_t n = labels.size();
  std::size_t correct = 0, tp = 0, fp = 0, tn = 0, fn = 0;
  std::vector<int> positive(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (predictions[i] == labels[i]) ++correct;
    const bool actual = labels[i] == positive_class;
    const bool flagged = predictions[i] == positive_class;
    positive[i] = actual ? 1 : 0;
    if (actual && flagged) ++tp;
    if (!actual && flagged) ++fp;
    if (!actual && !flagged) ++tn;
    if (actual && !flagged) ++fn;
  }
  auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? MetricValue::undefined()
                    : MetricValue::of(static_cast<double>(num) / static_cast<double>(den));
  };
  MetricSet m;
  if (which.acc) m.acc = ratio(correct, n);
  if (which.f1) {
    const std::size_t den = 2 * tp + fp + fn;
    m.f1 = den == 0 ? MetricValue::of(0.0) : ratio(2 * tp, den);
  }
  if (which.fpr) m.fpr = ratio(fp, fp + tn);
  if (which.dr) m.dr = ratio(tp, tp + fn);
  if (which.auc) m.auc = roc_auc(scores, positive);
  return m;
}

MetricValue relative_change(const MetricValue& before, const MetricValue& after) {
  if (!before.defined || !after.defined || before.value == 0.0) return MetricValue::undefined();
  return MetricValue::of((after.value - before.value) / before.value);
}

DeltaSet compute_deltas(const MetricSet& before, const MetricSet& after) {
  auto one = [](const std::optional<MetricValue>& b, const std::optional<MetricValue>& a,
                const char* name) -> std::optional<MetricValue> {
    if (b.has_value() != a.has_value()) {
      throw std::invalid_argument(std::string("deltas: '") + name + "' present on one side only");
    }
    if (!b) return std::nullopt;
    return relative_change(*b, *a);
  };
  DeltaSet d;
  d.dacc = one(before.acc, after.acc, "acc");
  d.df1 = one(before.f1, after.f1, "f1");
  d.dfpr = one(before.fpr, after.fpr, "fpr");
  d.dauc = one(before.auc, after.auc, "auc");
  d.ddr = one(before.dr, after.dr, "dr");
  return d;
}

ExpenseStats aggregate_expenses(std::span<const UnitExpense> units) {
  ExpenseStats s;
  double queries = 0.0, runtime = 0.0;
  for (const auto& u : units) {
    if (!u.attacked) {
      ++s.skipped_count;
      continue;
    }
    ++s.attacked_count;
    queries += static_cast<double>(u.queries);
    runtime += u.runtime;
  }
  if (s.attacked_count > 0) {
    s.avg_queries = queries / static_cast<double>(s.attacked_count);
    s.avg_runtime = runtime / static_cast<double>(s.attacked_count);
  }
  return s;
}

std::string format_percent(double fraction) {
  const long long pct = std::llround(fraction * 100.0);
  if (pct == 0) return "0%";
  return (pct > 0 ? "+" : "") + std::to_string(pct) + "%";
}

}  // namespace advcat
