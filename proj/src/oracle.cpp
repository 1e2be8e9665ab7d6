// Copyright 2026 The AdvCat Authors
// SPDX-License-Identifier: Apache-2.0

#include "advcat/oracle.hpp"

#include <chrono>
#include <cmath>

namespace advcat {

void check_probability_vector(std::span<const double> p, std::size_t num_classes, double tol) {
  if (p.size() != num_classes) {
    throw OracleError("response has " + std::to_string(p.size()) + " probabilities, expected " +
                      std::to_string(num_classes));
  }
  double sum = 0.0;
  for (double x : p) {
    if (!std::isfinite(x) || x < 0.0) throw OracleError("response has a negative or non-finite probability");
    sum += x;
  }
  if (std::abs(sum - 1.0) > tol) {
    throw OracleError("response is not normalized (sum " + std::to_string(sum) + ")");
  }
}

std::vector<ProbabilityVector> ModelBackend::evaluate_batch(
    const std::vector<std::vector<ValueIndex>>& batch) const {
  std::vector<ProbabilityVector> out;
  out.reserve(batch.size());
  for (const auto& v : batch) out.push_back(evaluate(v));
  return out;
}

FunctionBackend::FunctionBackend(std::size_t num_classes, std::size_t num_features, Fn fn,
                                 std::string name)
    : num_classes_(num_classes), num_features_(num_features), fn_(std::move(fn)),
      name_(std::move(name)) {}

ProbabilityVector FunctionBackend::evaluate(std::span<const ValueIndex> values) const {
  return fn_(values);
}

OracleHandle::OracleHandle(std::shared_ptr<const ModelBackend> backend, bool cache_enabled)
    : backend_(std::move(backend)), cache_enabled_(cache_enabled) {
  if (!backend_) throw std::invalid_argument("oracle handle needs a backend");
  if (backend_->num_classes() < 2) throw std::invalid_argument("oracle needs at least two classes");
}

void OracleHandle::set_cache_enabled(bool on) {
  cache_enabled_ = on;
  if (!on) cache_.clear();
}

void OracleHandle::check_shape(std::size_t n) const {
  const std::size_t want = backend_->num_features();
  if (want != 0 && want != n) {
    throw OracleError("oracle expects " + std::to_string(want) + " features, got " +
                      std::to_string(n));
  }
}

ProbabilityVector OracleHandle::query(const CategoricalInstance& instance,
                                      const PerturbationSet& p) {
  return query_values(perturbed_values(instance, p));
}

ProbabilityVector OracleHandle::query_values(std::span<const ValueIndex> values) {
  check_shape(values.size());
  const auto start = std::chrono::steady_clock::now();
  std::vector<ValueIndex> key;
  if (cache_enabled_) {
    key.assign(values.begin(), values.end());
    if (auto it = cache_.find(key); it != cache_.end()) {
      ++stats_.cache_hits;
      stats_.elapsed += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      return it->second;
    }
  }
  ProbabilityVector probs;
  try {
    probs = backend_->evaluate(values);
    check_probability_vector(probs, backend_->num_classes());
  } catch (...) {
    stats_.elapsed += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    throw;
  }
  ++stats_.queries_issued;
  if (cache_enabled_) cache_.emplace(std::move(key), probs);
  stats_.elapsed += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return probs;
}

std::vector<ProbabilityVector> OracleHandle::query_batch(
    const std::vector<std::vector<ValueIndex>>& batch) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<ProbabilityVector> out(batch.size());
  std::vector<std::vector<ValueIndex>> misses;
  std::vector<std::size_t> miss_index;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    check_shape(batch[k].size());
    if (cache_enabled_) {
      if (auto it = cache_.find(batch[k]); it != cache_.end()) {
        ++stats_.cache_hits;
        out[k] = it->second;
        continue;
      }
      // A vector repeated inside the batch is evaluated once.
      bool pending = false;
      for (std::size_t j = 0; j < misses.size(); ++j) {
        if (misses[j] == batch[k]) {
          pending = true;
          break;
        }
      }
      if (pending) {
        ++stats_.cache_hits;
        continue;
      }
    }
    misses.push_back(batch[k]);
    miss_index.push_back(k);
  }
  if (!misses.empty()) {
    std::vector<ProbabilityVector> fresh;
    try {
      fresh = backend_->evaluate_batch(misses);
      if (fresh.size() != misses.size()) throw OracleError("batch response has the wrong length");
      for (const auto& p : fresh) check_probability_vector(p, backend_->num_classes());
    } catch (...) {
      stats_.elapsed += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      throw;
    }
    stats_.queries_issued += misses.size();
    for (std::size_t j = 0; j < misses.size(); ++j) {
      out[miss_index[j]] = fresh[j];
      if (cache_enabled_) cache_.emplace(misses[j], fresh[j]);
    }
  }
  if (cache_enabled_) {
    for (std::size_t k = 0; k < batch.size(); ++k) {
      if (out[k].empty()) out[k] = cache_.at(batch[k]);
    }
  }
  stats_.elapsed += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

QueryStats OracleHandle::query_count_reset() {
  QueryStats snapshot = stats_;
  stats_ = {};
  return snapshot;
}

}  // namespace advcat
