// Copyright 2026 The AdvCat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "advcat/instance.hpp"
#include "advcat/oracle.hpp"

namespace advcat {

struct TrainConfig {
  double learning_rate = 0.2;
  int epochs = 60;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
  std::size_t dim = 8;

  void validate() const;
};

/// One training example: feature values and the class to predict.
struct Sample {
  std::vector<ValueIndex> values;
  ClassIndex label = 0;
};

std::vector<Sample> samples_of(const Dataset& data);

/// Linear softmax over per-feature learned embeddings:
///   h = concat_i E_i[values[i]]   (n*D)
///   p = softmax(W h + b)          (K)
/// All parameters live in one flat vector laid out as
/// [E_0 | E_1 | ... | E_{n-1} | W (K x nD, row major) | b].
class SoftmaxClassifier {
 public:
  SoftmaxClassifier() = default;
  /// All-zero parameters. `cardinalities[i]` is the number of distinct
  /// values feature i may take.
  SoftmaxClassifier(std::vector<std::size_t> cardinalities, std::size_t num_classes,
                    std::size_t dim);

  /// Embeddings and weights uniform in [-0.1, 0.1], bias zero.
  void initialize(std::uint64_t seed);

  std::size_t num_features() const noexcept { return cardinalities_.size(); }
  std::size_t num_classes() const noexcept { return num_classes_; }
  std::size_t dim() const noexcept { return dim_; }
  const std::vector<std::size_t>& cardinalities() const noexcept { return cardinalities_; }

  std::span<double> parameters() noexcept { return params_; }
  std::span<const double> parameters() const noexcept { return params_; }

  /// Throws std::out_of_range for a value outside the trained range.
  std::vector<double> logits(std::span<const ValueIndex> values) const;
  ProbabilityVector predict_proba(std::span<const ValueIndex> values) const;

  /// Mean cross-entropy over `batch`. When `grad` is non-empty it must have
  /// parameters().size() entries and receives the gradient of the mean.
  double loss(std::span<const Sample> batch, std::span<double> grad = {}) const;

  void save(const std::filesystem::path& path, std::size_t window = 0) const;
  /// Returns the model and the stored window length (0 for plain classifiers).
  static std::pair<SoftmaxClassifier, std::size_t> load(const std::filesystem::path& path);

  friend bool operator==(const SoftmaxClassifier&, const SoftmaxClassifier&) = default;

 private:
  std::size_t embedding_offset(std::size_t feature, ValueIndex value) const;
  std::size_t weights_offset() const noexcept { return embedding_total_; }
  std::size_t bias_offset() const noexcept {
    return embedding_total_ + num_classes_ * num_features() * dim_;
  }
  void gather(std::span<const ValueIndex> values, std::span<double> h) const;

  std::vector<std::size_t> cardinalities_;
  std::vector<std::size_t> table_offsets_;
  std::size_t num_classes_ = 0;
  std::size_t dim_ = 0;
  std::size_t embedding_total_ = 0;
  std::vector<double> params_;
};

/// Softmax of logits; stable under constant shifts.
ProbabilityVector softmax(std::span<const double> logits);

struct TrainResult {
  SoftmaxClassifier model;
  double train_accuracy = 0.0;
  std::vector<double> epoch_loss;
};

/// Mini-batch gradient descent on mean cross-entropy. Deterministic given
/// cfg.seed. Throws std::invalid_argument for an empty or non-classification
/// dataset and std::runtime_error when the loss becomes non-finite.
TrainResult train_softmax(const Dataset& data, const TrainConfig& cfg);
TrainResult train_softmax(std::span<const Sample> samples,
                          std::vector<std::size_t> cardinalities, std::size_t num_classes,
                          const TrainConfig& cfg);

double accuracy(const SoftmaxClassifier& model, std::span<const Sample> samples);

/// Largest relative error between the analytic gradient of loss(samples)
/// and central finite differences with step `step`, over every parameter.
/// Relative error is |a - f| / max(|a| + |f|, 1e-6).
double gradient_check(const SoftmaxClassifier& model, std::span<const Sample> samples,
                      double step = 1e-5);

/// Next-key predictor over windows of `window` keys: the first window-1 keys
/// are inputs, the last is the prediction target.
struct WindowPredictor {
  SoftmaxClassifier model;
  std::size_t window = 10;

  std::size_t vocab() const noexcept { return model.num_classes(); }
};

/// Vocabulary size of a log-session dataset (max candidate index + 1).
std::size_t session_vocab(const Dataset& sessions);

/// Windows of every session (or only label-0 sessions) as training samples.
std::vector<Sample> window_samples(const Dataset& sessions, std::size_t window, bool normal_only);

WindowPredictor train_window_predictor(const Dataset& sessions, std::size_t window,
                                       const TrainConfig& cfg);

/// Oracle backend over an in-process model.
std::shared_ptr<const ModelBackend> make_model_backend(SoftmaxClassifier model);
std::shared_ptr<const ModelBackend> load_model_backend(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Synthetic data

/// Hidden additive rule: label = argmax_k sum_i weight(k, i, values[i]).
struct ClassificationRule {
  std::size_t n = 0, m = 0, classes = 0;
  std::vector<double> weights;  // classes x n x m

  double weight(std::size_t k, std::size_t i, ValueIndex v) const {
    return weights[(k * n + i) * m + static_cast<std::size_t>(v)];
  }
  ClassIndex label(std::span<const ValueIndex> values) const;
};

ClassificationRule hidden_rule(std::uint64_t seed, std::size_t n, std::size_t m,
                               std::size_t classes);

/// `count` instances over n features with candidates 0..m-1; labels follow
/// hidden_rule(seed, ...) with each label replaced by a uniformly drawn other
/// class with probability `label_noise`.
Dataset synth_classification(std::uint64_t seed, std::size_t n, std::size_t m,
                             std::size_t classes, std::size_t count, double label_noise = 0.05);

/// First-order chain over a vocabulary, row-major transition matrix.
struct MarkovChain {
  std::size_t vocab = 0;
  std::vector<double> transition;

  double prob(ValueIndex from, ValueIndex to) const {
    return transition[static_cast<std::size_t>(from) * vocab + static_cast<std::size_t>(to)];
  }
};

struct LogChains {
  MarkovChain normal;
  MarkovChain abnormal;
};

/// Normal chain: each key has a dominant successor (0.75), a secondary one
/// (0.20) and spreads 0.05 over the rest. The abnormal chain jumps
/// deterministically to a key outside both.
LogChains log_chains(std::uint64_t seed, std::size_t vocab);

/// Sessions of 50..200 keys from the normal chain; abnormal sessions carry a
/// contiguous 5..15 key segment generated by the abnormal chain.
/// true_label and session_label are 0 (normal) or 1 (abnormal).
Dataset synth_log_sessions(std::uint64_t seed, std::size_t vocab, std::size_t count,
                           double abnormal_fraction);

}  // namespace advcat
