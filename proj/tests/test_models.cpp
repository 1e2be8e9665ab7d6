// Copyright 2026 The AdvCat Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

#include "advcat/kernels.hpp"
#include "advcat/models.hpp"
#include "advcat/rng.hpp"
#include "advcat/search.hpp"

using namespace advcat;

namespace {

// Forward pass written out from the documented parameter layout.
std::vector<double> ref_proba(const SoftmaxClassifier& m, const std::vector<ValueIndex>& v) {
  const auto p = m.parameters();
  const std::size_t n = m.num_features(), d = m.dim(), k = m.num_classes();
  std::vector<double> h;
  std::size_t off = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) h.push_back(p[off + static_cast<std::size_t>(v[i]) * d + j]);
    off += m.cardinalities()[i] * d;
  }
  std::vector<double> z(k);
  for (std::size_t c = 0; c < k; ++c) {
    z[c] = p[off + n * d * k + c];
    for (std::size_t j = 0; j < n * d; ++j) z[c] += p[off + c * n * d + j] * h[j];
  }
  const double mx = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (auto& x : z) s += (x = std::exp(x - mx));
  for (auto& x : z) x /= s;
  return z;
}

std::vector<Sample> random_samples(std::mt19937_64& gen, const std::vector<std::size_t>& cards,
                                   std::size_t classes, std::size_t count) {
  std::vector<Sample> out(count);
  for (auto& s : out) {
    for (auto c : cards) s.values.push_back(static_cast<ValueIndex>(gen() % c));
    s.label = static_cast<ClassIndex>(gen() % classes);
  }
  return out;
}

SoftmaxClassifier random_model(std::mt19937_64& gen, std::vector<std::size_t>& cards, std::size_t& classes) {
  cards.assign(1 + gen() % 4, 0);
  for (auto& c : cards) c = 2 + gen() % 4;
  classes = 2 + gen() % 3;
  SoftmaxClassifier m(cards, classes, 1 + gen() % 4);
  m.initialize(gen());
  // Spread the parameters beyond the small init so the check is not trivial.
  std::normal_distribution<double> nd(0.0, 0.5);
  for (auto& x : m.parameters()) x += nd(gen);
  return m;
}

}  // namespace

TEST(Softmax, NormalizedAndShiftInvariant) {
  const std::vector<double> z{1.0, 2.0, -3.0, 0.5};
  const auto p = softmax(z);
  EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-15);
  std::vector<double> shifted;
  for (double x : z) shifted.push_back(x + 1000.0);
  const auto q = softmax(shifted);
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(p[i], q[i], 1e-15);
  EXPECT_GT(p[1], p[0]);
}

TEST(Model, ForwardMatchesReference) {
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::size_t> cards;
    std::size_t classes;
    const auto m = random_model(gen, cards, classes);
    for (const auto& s : random_samples(gen, cards, classes, 10)) {
      const auto a = m.predict_proba(s.values);
      const auto b = ref_proba(m, s.values);
      for (std::size_t k = 0; k < classes; ++k) EXPECT_NEAR(a[k], b[k], 1e-12);
    }
  }
}

TEST(Model, RejectsOutOfRangeValue) {
  SoftmaxClassifier m({3, 3}, 2, 2);
  EXPECT_THROW(m.predict_proba(std::vector<ValueIndex>{0, 3}), std::out_of_range);
  EXPECT_THROW(m.predict_proba(std::vector<ValueIndex>{0}), std::invalid_argument);
}

TEST(Model, GradientCheckOnRandomModels) {
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::size_t> cards;
    std::size_t classes;
    const auto m = random_model(gen, cards, classes);
    const auto samples = random_samples(gen, cards, classes, 8);
    EXPECT_LT(gradient_check(m, samples), 1e-4) << "trial " << trial;
  }
}

TEST(Model, AnalyticGradientMatchesOwnFiniteDifferences) {
  std::mt19937_64 gen(3);
  std::vector<std::size_t> cards;
  std::size_t classes;
  auto m = random_model(gen, cards, classes);
  const auto samples = random_samples(gen, cards, classes, 6);
  std::vector<double> g(m.parameters().size());
  m.loss(samples, g);
  const double h = 1e-6;
  for (std::size_t i = 0; i < g.size(); i += 3) {
    const double keep = m.parameters()[i];
    m.parameters()[i] = keep + h;
    const double up = m.loss(samples);
    m.parameters()[i] = keep - h;
    const double down = m.loss(samples);
    m.parameters()[i] = keep;
    EXPECT_NEAR(g[i], (up - down) / (2 * h), 1e-6);
  }
}

TEST(Training, DeterministicGivenSeed) {
  const auto data = synth_classification(4, 8, 4, 3, 200);
  TrainConfig cfg;
  cfg.epochs = 5;
  const auto a = train_softmax(data, cfg);
  const auto b = train_softmax(data, cfg);
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.epoch_loss, b.epoch_loss);
  cfg.seed = 2;
  EXPECT_NE(train_softmax(data, cfg).model, a.model);
}

TEST(Training, LossDecreasesAndFitsAdditiveRule) {
  const auto data = synth_classification(5, 20, 5, 2, 1000);
  const auto res = train_softmax(data, TrainConfig{});
  ASSERT_FALSE(res.epoch_loss.empty());
  EXPECT_LT(res.epoch_loss.back(), res.epoch_loss.front());
  EXPECT_GE(res.train_accuracy, 0.85);
  EXPECT_DOUBLE_EQ(res.train_accuracy, accuracy(res.model, samples_of(data)));
}

TEST(Training, FitsNoiselessSmallRule) {
  const auto data = synth_classification(1, 4, 3, 2, 200, 0.0);
  const auto res = train_softmax(data, TrainConfig{});
  std::size_t agree = 0;
  for (const auto& x : data.instances) {
    const auto p = res.model.predict_proba(x.values);
    agree += (p[1] > p[0] ? 1 : 0) == x.true_label;
  }
  EXPECT_GE(agree / 200.0, 0.95);
}

TEST(Training, ZeroEpochsLeavesInitialization) {
  const auto data = synth_classification(2, 6, 3, 2, 400, 0.0);
  TrainConfig cfg;
  cfg.epochs = 0;
  const auto res = train_softmax(data, cfg);
  SoftmaxClassifier init(std::vector<std::size_t>(6, 3), 2, cfg.dim);
  init.initialize(derive_seed(cfg.seed, 0));
  EXPECT_EQ(res.model, init);
  EXPECT_NEAR(res.train_accuracy, 0.5, 0.15);
}

TEST(Model, ZeroParametersGiveUniformOutput) {
  SoftmaxClassifier m({3, 4}, 5, 2);
  const auto p = m.predict_proba(std::vector<ValueIndex>{2, 3});
  for (double x : p) EXPECT_DOUBLE_EQ(x, 0.2);
  // Each class once on the same input: the uniform output is the optimum.
  std::vector<Sample> batch;
  for (int k = 0; k < 5; ++k) batch.push_back({{2, 3}, k});
  std::vector<double> grad(m.parameters().size());
  m.loss(batch, grad);
  for (double g : grad) EXPECT_NEAR(g, 0.0, 1e-15);
  EXPECT_LT(gradient_check(m, batch), 1e-4);
}

TEST(Training, RejectsBadInput) {
  TrainConfig cfg;
  cfg.learning_rate = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  EXPECT_THROW(train_softmax(synth_log_sessions(1, 6, 3, 0.0), TrainConfig{}), std::invalid_argument);
  TrainConfig wild;
  wild.learning_rate = 1e6;
  wild.epochs = 50;
  EXPECT_THROW(train_softmax(synth_classification(1, 10, 5, 4, 300), wild), std::runtime_error);
}

TEST(Model, SaveLoadRoundTripIsExact) {
  const auto data = synth_classification(6, 5, 3, 3, 100);
  TrainConfig cfg;
  cfg.epochs = 3;
  const auto res = train_softmax(data, cfg);
  const auto path = std::filesystem::temp_directory_path() / "advcat_model_roundtrip.txt";
  res.model.save(path, 7);
  const auto [back, window] = SoftmaxClassifier::load(path);
  EXPECT_EQ(window, 7u);
  EXPECT_EQ(back, res.model);
  std::filesystem::remove(path);
  EXPECT_THROW(SoftmaxClassifier::load(path), std::runtime_error);
}

TEST(Model, BackendWrapsModel) {
  const auto data = synth_classification(7, 5, 3, 2, 60);
  TrainConfig cfg;
  cfg.epochs = 2;
  const auto res = train_softmax(data, cfg);
  auto b = make_model_backend(res.model);
  EXPECT_EQ(b->num_features(), 5u);
  EXPECT_EQ(b->evaluate(data.instances[0].values), res.model.predict_proba(data.instances[0].values));
  EXPECT_THROW(b->evaluate(std::vector<ValueIndex>{0, 0, 0, 0, 9}), OracleError);
}

TEST(WindowPredictor, ApproachesChainBayesAccuracy) {
  // The normal chain's dominant successor has probability 0.75, so top-1
  // accuracy on normal windows cannot exceed that in expectation; the top-9
  // ceiling is 0.75 + 0.20 + 7 * 0.05 / (V - 2).
  const std::size_t vocab = 30;
  const auto sessions = synth_log_sessions(8, vocab, 60, 0.0);
  const auto pred = train_window_predictor(sessions, 10, TrainConfig{});
  EXPECT_EQ(pred.vocab(), vocab);
  const auto samples = window_samples(sessions, 10, true);
  const double top1 = accuracy(pred.model, samples);
  EXPECT_GT(top1, 0.70);
  EXPECT_LT(top1, 0.80);
  std::size_t hit9 = 0;
  for (const auto& s : samples) {
    if (margin_topk(pred.model.predict_proba(s.values), s.label, 9) < 0) ++hit9;
  }
  const double bayes9 = 0.95 + 7 * 0.05 / (vocab - 2);
  EXPECT_NEAR(static_cast<double>(hit9) / samples.size(), bayes9, 0.03);
}

TEST(WindowPredictor, HeldOutAccuracyAtVocab20) {
  const std::size_t vocab = 20;
  // One draw from a single chain, split into training and held-out sessions.
  auto train = synth_log_sessions(31, vocab, 90, 0.0);
  Dataset held_out = train;
  train.instances.resize(60);
  held_out.instances.erase(held_out.instances.begin(), held_out.instances.begin() + 60);
  const auto pred = train_window_predictor(train, 10, TrainConfig{});
  const auto samples = window_samples(held_out, 10, true);
  ASSERT_FALSE(samples.empty());
  std::size_t hit1 = 0, hit9 = 0;
  for (const auto& s : samples) {
    const auto p = pred.model.predict_proba(s.values);
    hit1 += margin_topk(p, s.label, 1) < 0;
    hit9 += margin_topk(p, s.label, 9) < 0;
  }
  EXPECT_GE(static_cast<double>(hit1) / samples.size(), 0.6);
  EXPECT_GE(static_cast<double>(hit9) / samples.size(), 0.95);
}

TEST(Synth, ChainsHaveDocumentedShape) {
  const auto c = log_chains(3, 12);
  for (std::size_t from = 0; from < 12; ++from) {
    double s = 0.0, top = 0.0, odd = 0.0;
    std::size_t odd_to = 0;
    for (std::size_t to = 0; to < 12; ++to) {
      s += c.normal.transition[from * 12 + to];
      top = std::max(top, c.normal.transition[from * 12 + to]);
      if (c.abnormal.transition[from * 12 + to] > 0) odd_to = to, odd = c.abnormal.transition[from * 12 + to];
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(top, 0.75);
    EXPECT_DOUBLE_EQ(odd, 1.0);
    EXPECT_LT(c.normal.transition[from * 12 + odd_to], 0.1);
  }
}

TEST(Synth, SessionsHaveDocumentedShape) {
  const auto d = synth_log_sessions(9, 20, 50, 0.3);
  std::size_t abnormal = 0;
  for (const auto& s : d.instances) {
    EXPECT_GE(s.values.size(), 50u);
    EXPECT_LE(s.values.size(), 200u);
    abnormal += *s.session_label;
    EXPECT_EQ(s.true_label, *s.session_label);
  }
  EXPECT_EQ(abnormal, 15u);
  EXPECT_EQ(d, synth_log_sessions(9, 20, 50, 0.3));
}

TEST(Synth, NoiselessLabelsFollowHiddenRule) {
  const auto rule = hidden_rule(4, 6, 3, 3);
  const auto d = synth_classification(4, 6, 3, 3, 300, 0.0);
  ASSERT_EQ(d.size(), 300u);
  for (const auto& x : d.instances) {
    // Additive score per class, recomputed from the raw weight table.
    int best = 0;
    double best_score = -1e300;
    for (int k = 0; k < 3; ++k) {
      double score = 0.0;
      for (std::size_t i = 0; i < 6; ++i) score += rule.weights[(k * 6 + i) * 3 + static_cast<std::size_t>(x.values[i])];
      if (score > best_score) best_score = score, best = k;
    }
    EXPECT_EQ(x.true_label, best);
  }
}

TEST(Synth, AbnormalSessionsLeaveTheNormalChain) {
  const std::size_t vocab = 20;
  const auto chains = log_chains(12, vocab);
  const auto d = synth_log_sessions(12, vocab, 40, 0.5);
  for (const auto& s : d.instances) {
    std::size_t rare = 0;
    for (std::size_t t = 1; t < s.values.size(); ++t) {
      rare += chains.normal.prob(s.values[t - 1], s.values[t]) < 0.01;
    }
    if (*s.session_label == 1) {
      EXPECT_GE(rare, 1u) << s.id;
    }
  }
}

TEST(Synth, LabelNoiseRate) {
  const auto rule = hidden_rule(10, 10, 4, 3);
  const auto d = synth_classification(10, 10, 4, 3, 4000, 0.05);
  std::size_t flipped = 0;
  for (const auto& x : d.instances) flipped += rule.label(x.values) != x.true_label;
  EXPECT_NEAR(flipped / 4000.0, 0.05, 0.015);
}

TEST(Kernels, ActiveIsaReported) {
  RecordProperty("isa", kernels::to_string(kernels::active().isa));
  SUCCEED();
}
