// Copyright 2026 The AdvCat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "advcat/instance.hpp"
#include "advcat/metrics.hpp"
#include "advcat/oracle.hpp"
#include "advcat/search.hpp"

namespace advcat {

enum class AssessMode { classification, log_window, session };

const char* to_string(AssessMode mode);
AssessMode parse_mode(const std::string& s);

struct AssessConfig {
  AssessMode mode = AssessMode::classification;
  SearchConfig search;
  std::size_t window = 10;        // total window length M (M-1 inputs + 1 target)
  double window_fraction = 1.0;   // session mode: share of windows attacked per session
  std::size_t workers = 1;

  void validate() const;
};

/// One sliding window: keys [offset, offset + M - 1) predict the key at
/// offset + M - 1.
struct WindowUnit {
  std::string session_id;
  std::size_t offset = 0;
  std::vector<ValueIndex> inputs;
  ValueIndex target = 0;
};

/// Stride-1 windows of `window` keys; length - window + 1 of them. A session
/// shorter than the window yields none and, when `warnings` is given, a note.
std::vector<WindowUnit> slice_windows(const std::string& session_id,
                                      std::span<const ValueIndex> keys, std::size_t window,
                                      std::vector<std::string>* warnings = nullptr);

/// Window as a categorical instance over the full vocabulary.
CategoricalInstance window_instance(const WindowUnit& w, std::size_t vocab);

/// Result for one assessed unit (instance, window or session).
struct UnitOutcome {
  std::string id;
  int label = 0;
  bool skipped = true;  // true when no search ran for this unit
  int clean_prediction = 0;
  int after_prediction = 0;
  double clean_score = 0.0;
  double after_score = 0.0;
  bool success = false;
  std::uint64_t queries = 0;
  std::uint64_t cache_hits = 0;
  double runtime = 0.0;
  std::optional<double> margin;
  std::string terminated_by;
  PerturbationSet perturbation;
  std::string error;
  // Session mode.
  std::size_t windows = 0;
  std::size_t windows_attacked = 0;
  std::size_t windows_flipped = 0;

  friend bool operator==(const UnitOutcome&, const UnitOutcome&) = default;
};

struct AssessmentRun {
  AssessConfig config;
  std::string dataset_digest;
  std::string oracle;
  std::size_t num_classes = 0;
  std::vector<UnitOutcome> units;
  MetricSet before;
  MetricSet after;
  /// One entry per attacked search (windows in session mode).
  std::vector<UnitExpense> expenses;
  std::vector<std::string> warnings;
  bool completed = false;
};

/// Each instance: clean prediction; skipped when already misclassified,
/// otherwise searched; post-attack prediction from the returned perturbation.
AssessmentRun assess_classification(const Dataset& data, const OracleHandle& oracle,
                                    const AssessConfig& cfg);

/// Every window of every session as a next-key instance. A window is
/// consistent when its target is within the top k_rank predictions; the
/// attack tries to make consistent windows inconsistent.
AssessmentRun assess_log_windows(const Dataset& sessions, const OracleHandle& oracle,
                                 const AssessConfig& cfg);

/// Session flagged abnormal iff any window is inconsistent. The attack pass
/// draws ceil(fraction * windows) windows per session; in abnormal sessions
/// it restores inconsistent ones, in normal sessions it breaks consistent ones.
AssessmentRun assess_sessions(const Dataset& sessions, const OracleHandle& oracle,
                              const AssessConfig& cfg);

/// Dispatches on cfg.mode.
AssessmentRun assess(const Dataset& data, const OracleHandle& oracle, const AssessConfig& cfg);

/// One JSON record per unit.
void write_results(const AssessmentRun& run, std::ostream& out);

}  // namespace advcat
