// Copyright 2026 The AdvCat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "advcat/instance.hpp"

namespace advcat {

/// Class distribution returned by a model: non-negative, sums to 1 within 1e-6.
using ProbabilityVector = std::vector<double>;

inline constexpr double kProbabilityTolerance = 1e-6;

/// Backend failure: unreachable endpoint, timeout, malformed or
/// non-normalized response, shape mismatch.
class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws OracleError unless `p` has `num_classes` non-negative finite
/// entries summing to 1 within `tol`.
void check_probability_vector(std::span<const double> p, std::size_t num_classes,
                              double tol = kProbabilityTolerance);

struct QueryStats {
  std::uint64_t queries_issued = 0;  // real backend evaluations
  std::uint64_t cache_hits = 0;
  double elapsed = 0.0;  // seconds spent inside queries

  QueryStats& operator+=(const QueryStats& o) {
    queries_issued += o.queries_issued;
    cache_hits += o.cache_hits;
    elapsed += o.elapsed;
    return *this;
  }
};

/// A black-box model. Implementations must be deterministic and safe for
/// concurrent const use.
class ModelBackend {
 public:
  virtual ~ModelBackend() = default;

  virtual std::size_t num_classes() const = 0;
  /// Expected input length; 0 accepts any length.
  virtual std::size_t num_features() const = 0;
  virtual ProbabilityVector evaluate(std::span<const ValueIndex> values) const = 0;
  virtual std::vector<ProbabilityVector> evaluate_batch(
      const std::vector<std::vector<ValueIndex>>& batch) const;
  virtual std::string describe() const = 0;
};

/// Wraps an arbitrary callable; used for constructed oracles.
class FunctionBackend final : public ModelBackend {
 public:
  using Fn = std::function<ProbabilityVector(std::span<const ValueIndex>)>;

  FunctionBackend(std::size_t num_classes, std::size_t num_features, Fn fn,
                  std::string name = "function");

  std::size_t num_classes() const override { return num_classes_; }
  std::size_t num_features() const override { return num_features_; }
  ProbabilityVector evaluate(std::span<const ValueIndex> values) const override;
  std::string describe() const override { return name_; }

 private:
  std::size_t num_classes_;
  std::size_t num_features_;
  Fn fn_;
  std::string name_;
};

/// Query access to one backend with counting, an optional response cache
/// keyed by the post-perturbation value vector, and time accounting.
/// A handle serves one search at a time; use clone() per worker.
class OracleHandle {
 public:
  explicit OracleHandle(std::shared_ptr<const ModelBackend> backend, bool cache_enabled = true);

  ProbabilityVector query(const CategoricalInstance& instance, const PerturbationSet& p);
  ProbabilityVector query_values(std::span<const ValueIndex> values);
  /// Batched form; cache misses go to the backend in one call.
  std::vector<ProbabilityVector> query_batch(const std::vector<std::vector<ValueIndex>>& batch);

  /// Returns the counters as they were, then zeroes them.
  QueryStats query_count_reset();
  const QueryStats& stats() const noexcept { return stats_; }

  bool cache_enabled() const noexcept { return cache_enabled_; }
  void set_cache_enabled(bool on);
  void clear_cache() { cache_.clear(); }

  /// Same backend, fresh counters and empty cache.
  OracleHandle clone() const { return OracleHandle(backend_, cache_enabled_); }

  std::size_t num_classes() const { return backend_->num_classes(); }
  std::size_t num_features() const { return backend_->num_features(); }
  const ModelBackend& backend() const { return *backend_; }

 private:
  void check_shape(std::size_t n) const;

  std::shared_ptr<const ModelBackend> backend_;
  bool cache_enabled_;
  QueryStats stats_;
  std::map<std::vector<ValueIndex>, ProbabilityVector> cache_;
};

/// Ground-truth synthetic backends addressed by rule name:
///   parity            K=2, one-hot on (sum of values) mod 2
///   successor:V       next-key rule over a V-key vocabulary; the key after the
///                     last input is most likely, probability decays with
///                     cyclic distance
///   random:SEED:K:N:C random additive plus pairwise logits over N features
///                     with values in [0, C); smooth and strictly ranked
std::shared_ptr<const ModelBackend> make_truth_backend(const std::string& rule);

/// Remote endpoint speaking the JSON query protocol. `timeout_s` bounds each
/// request; the ADVCAT_REMOTE_TIMEOUT environment variable overrides it.
std::shared_ptr<const ModelBackend> make_remote_backend(const std::string& url,
                                                         double timeout_s = 10.0);

}  // namespace advcat
