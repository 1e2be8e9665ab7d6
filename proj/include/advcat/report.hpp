// Copyright 2026 The AdvCat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "advcat/metrics.hpp"
#include "advcat/pipeline.hpp"

namespace advcat {

inline constexpr const char* kToolkitVersion = "0.1.0";

/// Everything needed to re-run the assessment that produced a report.
struct ConfigEcho {
  std::string mode;
  std::string algorithm;
  std::string budget;
  double time_limit = 0.0;
  std::size_t sgs_r = 0;
  double ucb_alpha = 0.0;
  std::string ucb_mean;
  std::size_t k_rank = 1;
  double success_threshold = 0.0;
  bool cache = true;
  std::size_t window = 0;
  double window_fraction = 1.0;
  std::uint64_t seed = 0;
  std::string oracle;
  std::string dataset_digest;
  friend bool operator==(const ConfigEcho&, const ConfigEcho&) = default;
};

struct UnitSummary {
  std::string id;
  int label = 0;
  bool skipped = true;
  bool success = false;
  int clean_prediction = 0;
  int after_prediction = 0;
  std::uint64_t queries = 0;
  std::size_t edits = 0;
  std::optional<double> margin;
  std::string terminated_by;
  std::optional<double> runtime;  // timing reports only
  friend bool operator==(const UnitSummary&, const UnitSummary&) = default;
};

struct DiagnosticReport {
  std::string version = kToolkitVersion;
  ConfigEcho config;
  std::size_t num_units = 0;
  MetricSet before;
  MetricSet after;
  DeltaSet deltas;
  ExpenseStats expenses;
  std::vector<UnitSummary> units;
  std::vector<std::string> warnings;
  /// When false, wall-clock fields are left out so that reports of identical
  /// runs are byte-identical.
  bool timing = false;
  friend bool operator==(const DiagnosticReport&, const DiagnosticReport&) = default;
};

/// Throws std::invalid_argument for a run that has not completed.
DiagnosticReport build_report(const AssessmentRun& run, bool include_timing = false);

enum class RenderStyle { machine, human };

/// machine: key-sorted JSON, lossless. human: markdown tables with
/// "0.55 (-40%)" style cells.
std::string render(const DiagnosticReport& report, RenderStyle style);

/// metric,before,after,delta rows for external plotting; undefined values
/// are empty cells.
std::string render_csv(const DiagnosticReport& report);

/// Inverse of the machine rendering.
DiagnosticReport parse_report(const std::string& machine_text);

/// "-40%", or "n/a (zero baseline)" for an undefined delta.
std::string format_delta(const MetricValue& delta);

/// Human table cell for a post-attack metric and its delta.
std::string format_cell(const std::optional<MetricValue>& after, const std::optional<MetricValue>& delta);

}  // namespace advcat
