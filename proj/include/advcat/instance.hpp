// Copyright 2026 The AdvCat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace advcat {

/// Malformed dataset input. `line()` is 1-based, 0 when not tied to a line.
class DataError : public std::runtime_error {
 public:
  DataError(const std::string& what, std::size_t line = 0);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

using ValueIndex = std::int32_t;
using ClassIndex = std::int32_t;

/// A single feature substitution: feature `feature` takes value `value`.
struct Edit {
  std::size_t feature = 0;
  ValueIndex value = 0;

  friend bool operator==(const Edit&, const Edit&) = default;
  friend auto operator<=>(const Edit&, const Edit&) = default;
};

/// Set of edits with at most one edit per feature, kept sorted by feature.
class PerturbationSet {
 public:
  PerturbationSet() = default;
  explicit PerturbationSet(std::vector<Edit> edits);

  /// Adds or replaces the edit on `e.feature`.
  void set(Edit e);
  bool contains(std::size_t feature) const;
  std::size_t size() const noexcept { return edits_.size(); }
  bool empty() const noexcept { return edits_.empty(); }
  const std::vector<Edit>& edits() const noexcept { return edits_; }

  auto begin() const noexcept { return edits_.begin(); }
  auto end() const noexcept { return edits_.end(); }

  friend bool operator==(const PerturbationSet&, const PerturbationSet&) = default;

 private:
  std::vector<Edit> edits_;
};

/// An anonymized record: every feature is an integer category index and
/// `candidates[i]` lists the admissible values for feature i (including the
/// current one).
struct CategoricalInstance {
  std::string id;
  ClassIndex true_label = 0;
  std::vector<ValueIndex> values;
  std::vector<std::vector<ValueIndex>> candidates;

  // Log-session datasets only.
  std::optional<std::string> session_id;
  std::optional<int> session_label;

  std::size_t num_features() const noexcept { return values.size(); }

  /// Replacement values for feature i in ascending order, current value excluded.
  std::vector<ValueIndex> alternatives(std::size_t i) const;
  std::size_t num_alternatives(std::size_t i) const;

  /// Throws DataError when an invariant is broken.
  void validate() const;

  friend bool operator==(const CategoricalInstance&, const CategoricalInstance&) = default;
};

enum class DatasetKind { classification, log_sessions };

const char* to_string(DatasetKind kind);

struct Dataset {
  std::vector<CategoricalInstance> instances;
  int num_classes = 2;
  DatasetKind kind = DatasetKind::classification;

  std::size_t size() const noexcept { return instances.size(); }
  void validate() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Reads a line-delimited dataset. Blank lines are ignored. When
/// `num_classes` is not given it is inferred as max(true_label)+1 (min 2).
/// Log-session datasets are detected by the presence of `session_id`.
Dataset load_dataset(const std::filesystem::path& path,
                     std::optional<int> num_classes = std::nullopt);
Dataset parse_dataset(std::istream& in, std::optional<int> num_classes = std::nullopt);

void write_dataset(const Dataset& data, std::ostream& out);
void write_dataset(const Dataset& data, const std::filesystem::path& path);

/// FNV-1a digest over the canonical serialization, hex encoded.
std::string dataset_digest(const Dataset& data);

/// Returns a copy of `instance` with each edit applied. Throws
/// std::invalid_argument for an out-of-range feature or inadmissible value.
CategoricalInstance apply_perturbation(const CategoricalInstance& instance,
                                       const PerturbationSet& p);

/// Value vector after applying `p`, without copying the candidate tables.
std::vector<ValueIndex> perturbed_values(const CategoricalInstance& instance,
                                         const PerturbationSet& p);

PerturbationSet diff(const CategoricalInstance& original,
                     const CategoricalInstance& perturbed);

}  // namespace advcat
