// Copyright 2026 The AdvCat Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <numeric>
#include <random>
#include <sstream>

#include "advcat/models.hpp"
#include "advcat/pipeline.hpp"
#include "json.hpp"
#include "test_util.hpp"

using namespace advcat;

namespace {

constexpr std::size_t kVocab = 8;

// Sessions over kVocab keys. Normal ones follow k -> k+1; abnormal ones get a
// few random jumps. Under the successor oracle a window is consistent (top-1)
// exactly when its target follows its last input.
Dataset successor_sessions(std::uint64_t seed, std::size_t count, std::size_t min_len = 8) {
  std::mt19937_64 gen(seed);
  Dataset d;
  d.kind = DatasetKind::log_sessions;
  std::vector<ValueIndex> all(kVocab);
  for (std::size_t v = 0; v < kVocab; ++v) all[v] = static_cast<ValueIndex>(v);
  for (std::size_t s = 0; s < count; ++s) {
    const std::size_t len = min_len + gen() % 10;
    const bool abnormal = gen() % 2;
    CategoricalInstance x;
    x.id = "s" + std::to_string(s);
    x.session_id = x.id;
    x.session_label = abnormal ? 1 : 0;
    x.true_label = *x.session_label;
    x.values.push_back(static_cast<ValueIndex>(gen() % kVocab));
    for (std::size_t t = 1; t < len; ++t) {
      ValueIndex next = static_cast<ValueIndex>((x.values.back() + 1) % kVocab);
      if (abnormal && gen() % 4 == 0) next = static_cast<ValueIndex>(gen() % kVocab);
      x.values.push_back(next);
    }
    x.candidates.assign(len, all);
    d.instances.push_back(std::move(x));
  }
  return d;
}

bool follows(ValueIndex a, ValueIndex b) { return b == static_cast<ValueIndex>((a + 1) % kVocab); }

AssessConfig session_config(std::size_t window = 4) {
  AssessConfig c;
  c.mode = AssessMode::session;
  c.window = window;
  c.search.algorithm = Algorithm::fsgs;
  c.search.budget = Budget::absolute(1);
  return c;
}

void zero_runtime(AssessmentRun& r) {
  for (auto& u : r.units) u.runtime = 0;
  for (auto& e : r.expenses) e.runtime = 0;
}

}  // namespace

TEST(Windows, SliceCountAndContent) {
  const std::vector<ValueIndex> keys{0, 1, 2, 3, 4, 5};
  const auto w = slice_windows("s", keys, 4);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_EQ(w[1].inputs, (std::vector<ValueIndex>{1, 2, 3}));
  EXPECT_EQ(w[1].target, 4);
  EXPECT_EQ(w[2].offset, 2u);
  std::vector<std::string> warnings;
  EXPECT_TRUE(slice_windows("short", keys, 7, &warnings).empty());
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("short"), std::string::npos);
  EXPECT_THROW(slice_windows("s", keys, 1), std::invalid_argument);
}

TEST(Windows, DocumentedCounts) {
  std::vector<ValueIndex> keys(12);
  std::iota(keys.begin(), keys.end(), 0);
  const auto w = slice_windows("s", keys, 10);
  ASSERT_EQ(w.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(w[i].offset, i);
    EXPECT_EQ(w[i].target, static_cast<ValueIndex>(9 + i));
    EXPECT_EQ(w[i].inputs.size(), 9u);
  }
  EXPECT_EQ(slice_windows("s", std::span(keys).first(10), 10).size(), 1u);
}

TEST(Windows, InstanceUsesFullVocabulary) {
  WindowUnit w{"s", 3, {1, 2}, 3};
  const auto x = window_instance(w, 5);
  EXPECT_EQ(x.id, "s@3");
  EXPECT_EQ(x.true_label, 3);
  EXPECT_EQ(x.candidates[0].size(), 5u);
  EXPECT_NO_THROW(x.validate());
  EXPECT_THROW(window_instance({"s", 0, {7}, 0}, 5), std::invalid_argument);
}

TEST(AssessConfig, Validation) {
  AssessConfig c;
  EXPECT_NO_THROW(c.validate());
  c.window_fraction = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.workers = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.mode = AssessMode::log_window;
  c.window = 1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_EQ(parse_mode("session"), AssessMode::session);
  EXPECT_THROW(parse_mode("x"), std::invalid_argument);
}

TEST(Classification, SkipsMisclassifiedAndRecomputesMetrics) {
  const auto data = synth_classification(2, 6, 3, 2, 80);
  auto model = make_truth_backend("random:5:2:6:3");
  OracleHandle oracle(model);
  AssessConfig cfg;
  cfg.search.budget = Budget::absolute(2);
  const auto run = assess_classification(data, oracle, cfg);
  ASSERT_TRUE(run.completed);
  ASSERT_EQ(run.units.size(), 80u);

  std::vector<int> labels, before, after;
  std::vector<double> sb, sa;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& x = data.instances[i];
    const auto& u = run.units[i];
    const auto clean = model->evaluate(x.values);
    const int pred = clean[1] > clean[0] ? 1 : 0;
    EXPECT_EQ(u.clean_prediction, pred);
    EXPECT_EQ(u.skipped, pred != x.true_label);
    if (!u.skipped) {
      const auto p = model->evaluate(perturbed_values(x, u.perturbation));
      EXPECT_EQ(u.after_prediction, p[1] > p[0] ? 1 : 0);
      EXPECT_EQ(u.success, u.after_prediction != x.true_label);
      EXPECT_LE(u.perturbation.size(), 2u);
    } else {
      EXPECT_EQ(u.after_prediction, u.clean_prediction);
      EXPECT_EQ(u.queries, 0u);
    }
    labels.push_back(x.true_label);
    before.push_back(u.clean_prediction);
    after.push_back(u.after_prediction);
    sb.push_back(u.clean_score);
    sa.push_back(u.after_score);
  }
  EXPECT_EQ(run.before, compute_metrics(before, labels, sb, 1));
  EXPECT_EQ(run.after, compute_metrics(after, labels, sa, 1));
  EXPECT_LE(run.after.acc->value, run.before.acc->value);
  const auto e = aggregate_expenses(run.expenses);
  std::size_t skipped = 0;
  for (const auto& u : run.units) skipped += u.skipped;
  EXPECT_EQ(e.skipped_count, skipped);
}

TEST(Classification, AlwaysWrongOracleSkipsEverything) {
  auto data = synth_classification(5, 4, 3, 2, 30);
  for (auto& x : data.instances) x.true_label = 0;
  auto wrong = std::make_shared<FunctionBackend>(2, 4, [](std::span<const ValueIndex>) {
    return ProbabilityVector{0.1, 0.9};
  });
  OracleHandle oracle(wrong);
  const auto run = assess_classification(data, oracle, AssessConfig{});
  for (const auto& u : run.units) {
    EXPECT_TRUE(u.skipped);
    EXPECT_EQ(u.queries, 0u);
  }
  EXPECT_EQ(run.before, run.after);
  const auto e = aggregate_expenses(run.expenses);
  EXPECT_FALSE(e.avg_queries);
  EXPECT_EQ(e.attacked_count, 0u);
}

TEST(Classification, AttackOutcomesAgreeWithExhaustiveSearch) {
  const auto data = synth_classification(6, 5, 3, 2, 60);
  auto model = make_truth_backend("random:11:2:5:3");
  OracleHandle oracle(model);
  AssessConfig cfg;
  cfg.search.budget = Budget::absolute(3);
  const auto run = assess_classification(data, oracle, cfg);
  EXPECT_LT(run.after.acc->value, run.before.acc->value);
  std::size_t checked = 0;
  for (std::size_t i = 0; i < data.size() && checked < 20; ++i) {
    const auto& u = run.units[i];
    if (u.skipped) continue;
    ++checked;
    const double best = ref::ref_best_margin(data.instances[i], *model, 3);
    EXPECT_LE(*u.margin, best);
    if (u.success) {
      EXPECT_GE(best, 0.0);
    }
  }
  EXPECT_EQ(checked, 20u);
}

TEST(Classification, MultiClassReportsAccuracyOnly) {
  const auto data = synth_classification(3, 4, 3, 3, 20);
  OracleHandle oracle(make_truth_backend("random:6:3:4:3"));
  AssessConfig cfg;
  cfg.search.budget = Budget::absolute(1);
  const auto run = assess_classification(data, oracle, cfg);
  EXPECT_TRUE(run.before.acc);
  EXPECT_FALSE(run.before.f1);
  EXPECT_FALSE(run.before.auc);
}

TEST(Classification, WorkerCountDoesNotChangeResults) {
  const auto data = synth_classification(4, 8, 4, 2, 60);
  OracleHandle oracle(make_truth_backend("random:8:2:8:4"));
  AssessConfig cfg;
  cfg.search.algorithm = Algorithm::sgs;
  cfg.search.sgs_r = 3;
  cfg.search.seed = 17;
  cfg.search.budget = Budget::absolute(2);
  auto a = assess_classification(data, oracle, cfg);
  cfg.workers = 4;
  auto b = assess_classification(data, oracle, cfg);
  zero_runtime(a);
  zero_runtime(b);
  EXPECT_EQ(a.units, b.units);
  EXPECT_EQ(a.before, b.before);
  EXPECT_EQ(a.after, b.after);
}

TEST(Classification, OracleFailureSurfaces) {
  const auto data = synth_classification(4, 3, 3, 2, 5);
  auto broken = std::make_shared<FunctionBackend>(2, 3, [](std::span<const ValueIndex>) -> ProbabilityVector {
    throw OracleError("down");
  });
  OracleHandle oracle(broken);
  EXPECT_THROW(assess_classification(data, oracle, AssessConfig{}), OracleError);
}

TEST(LogWindows, ConsistencyAndLabels) {
  const auto data = successor_sessions(5, 12);
  OracleHandle oracle(make_truth_backend("successor:" + std::to_string(kVocab)));
  AssessConfig cfg;
  cfg.mode = AssessMode::log_window;
  cfg.window = 4;
  cfg.search.budget = Budget::absolute(1);
  const auto run = assess_log_windows(data, oracle, cfg);
  std::size_t idx = 0;
  for (const auto& s : data.instances) {
    for (std::size_t off = 0; off + 4 <= s.values.size(); ++off, ++idx) {
      const auto& u = run.units[idx];
      EXPECT_EQ(u.id, *s.session_id + "@" + std::to_string(off));
      EXPECT_EQ(u.label, *s.session_label == 0 ? 1 : 0);
      const bool ok = follows(s.values[off + 2], s.values[off + 3]);
      EXPECT_EQ(u.clean_prediction, ok ? 1 : 0);
      EXPECT_EQ(u.skipped, !ok);
      // One edit on the last input always breaks a successor window.
      if (ok) {
        EXPECT_EQ(u.after_prediction, 0);
      }
    }
  }
  EXPECT_EQ(idx, run.units.size());
}

TEST(LogWindows, SameSuccessesAsClassificationAtTop1) {
  const auto sessions = successor_sessions(6, 10);
  auto model = make_truth_backend("successor:" + std::to_string(kVocab));
  OracleHandle oracle(model);
  AssessConfig cfg;
  cfg.mode = AssessMode::log_window;
  cfg.window = 5;
  cfg.search.algorithm = Algorithm::ucbs;
  cfg.search.budget = Budget::absolute(2);
  cfg.search.seed = 3;
  const auto windows = assess_log_windows(sessions, oracle, cfg);

  Dataset flat;
  flat.num_classes = static_cast<int>(kVocab);
  for (const auto& s : sessions.instances) {
    for (const auto& w : slice_windows(*s.session_id, s.values, 5)) flat.instances.push_back(window_instance(w, kVocab));
  }
  cfg.mode = AssessMode::classification;
  const auto plain = assess_classification(flat, oracle, cfg);
  ASSERT_EQ(plain.units.size(), windows.units.size());
  for (std::size_t i = 0; i < plain.units.size(); ++i) {
    EXPECT_EQ(plain.units[i].success, windows.units[i].success) << i;
    EXPECT_EQ(plain.units[i].skipped, windows.units[i].skipped) << i;
  }
}

TEST(LogWindows, TrainedPredictorLosesConsistency) {
  const auto sessions = synth_log_sessions(14, 20, 12, 0.0);
  const auto pred = train_window_predictor(sessions, 10, TrainConfig{});
  OracleHandle oracle(make_model_backend(pred.model));
  AssessConfig cfg;
  cfg.mode = AssessMode::log_window;
  cfg.window = 10;
  cfg.search.budget = Budget::absolute(5);
  const auto run = assess_log_windows(sessions, oracle, cfg);
  double before = 0, after = 0;
  for (const auto& u : run.units) {
    before += u.clean_prediction;
    after += u.after_prediction;
  }
  ASSERT_GT(before, 0);
  EXPECT_LT(after, 0.1 * before);
}

TEST(LogWindows, ExtremeRankNeedsTrueKeyAtTheBottom) {
  // At k_rank = V - 1 a window only becomes inconsistent when the true key is
  // the least likely one. Every reported success must meet that, checked
  // here on the raw probabilities, and it must be far rarer than at top-1.
  const std::size_t vocab = 12;
  const auto sessions = synth_log_sessions(15, vocab, 6, 0.0);
  const auto pred = train_window_predictor(sessions, 6, TrainConfig{});
  auto model = make_model_backend(pred.model);
  OracleHandle oracle(model);
  std::vector<CategoricalInstance> windows;
  for (const auto& s : sessions.instances) {
    for (const auto& w : slice_windows(*s.session_id, s.values, 6)) windows.push_back(window_instance(w, vocab));
  }
  AssessConfig cfg;
  cfg.mode = AssessMode::log_window;
  cfg.window = 6;
  cfg.search.budget = Budget::absolute(1);

  auto success_rate = [&](std::size_t k_rank) {
    cfg.search.objective.k_rank = k_rank;
    const auto run = assess_log_windows(sessions, oracle, cfg);
    std::size_t attacked = 0, flipped = 0;
    for (std::size_t i = 0; i < run.units.size(); ++i) {
      const auto& u = run.units[i];
      if (u.skipped) continue;
      ++attacked;
      flipped += u.success;
      if (u.success && k_rank == vocab - 1) {
        const auto p = model->evaluate(perturbed_values(windows[i], u.perturbation));
        const double t = p[static_cast<std::size_t>(windows[i].true_label)];
        EXPECT_EQ(*std::min_element(p.begin(), p.end()), t) << u.id;
      }
    }
    return static_cast<double>(flipped) / static_cast<double>(attacked);
  };
  const double top1 = success_rate(1);
  const double bottom = success_rate(vocab - 1);
  EXPECT_GT(top1, 0.9);
  EXPECT_LT(bottom, 0.5 * top1);
}

TEST(LogWindows, RejectsPlainDataset) {
  OracleHandle oracle(make_truth_backend("successor:4"));
  AssessConfig cfg;
  cfg.mode = AssessMode::log_window;
  EXPECT_THROW(assess_log_windows(synth_classification(1, 3, 4, 2, 4), oracle, cfg), std::invalid_argument);
}

TEST(Sessions, FlagIsOrOfWindowInconsistency) {
  OracleHandle oracle(make_truth_backend("successor:" + std::to_string(kVocab)));
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto data = successor_sessions(seed, 20);
    const auto run = assess_sessions(data, oracle, session_config());
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto& keys = data.instances[i].values;
      bool any_bad = false;
      std::size_t bad = 0, windows = 0;
      for (std::size_t off = 0; off + 4 <= keys.size(); ++off, ++windows) {
        const bool b = !follows(keys[off + 2], keys[off + 3]);
        any_bad |= b;
        bad += b;
      }
      EXPECT_EQ(run.units[i].clean_prediction, any_bad ? 1 : 0);
      EXPECT_EQ(run.units[i].windows, windows);
      EXPECT_DOUBLE_EQ(run.units[i].clean_score, static_cast<double>(bad) / windows);
    }
  }
}

TEST(Sessions, WindowCountIsConserved) {
  OracleHandle oracle(make_truth_backend("successor:" + std::to_string(kVocab)));
  const auto data = successor_sessions(25, 40, 2);
  const auto run = assess_sessions(data, oracle, session_config(6));
  std::size_t expected = 0, got = 0, short_sessions = 0;
  for (const auto& s : data.instances) {
    if (s.values.size() >= 6) expected += s.values.size() - 6 + 1;
    else ++short_sessions;
  }
  for (const auto& u : run.units) got += u.windows;
  EXPECT_EQ(got, expected);
  EXPECT_EQ(run.warnings.size(), short_sessions);
  ASSERT_GT(short_sessions, 0u);
}

TEST(Sessions, RestoringEveryWindowZeroesDetection) {
  OracleHandle oracle(make_truth_backend("successor:" + std::to_string(kVocab)));
  const auto data = successor_sessions(21, 30);
  const auto run = assess_sessions(data, oracle, session_config());
  ASSERT_TRUE(run.before.dr && run.after.dr);
  EXPECT_GT(run.before.dr->value, 0.0);
  EXPECT_EQ(run.after.dr->value, 0.0);
  EXPECT_EQ(run.after.fpr->value, 1.0);  // every normal session gets a false alarm
  for (const auto& u : run.units) {
    if (u.windows_attacked > 0) {
      EXPECT_EQ(u.windows_flipped, u.windows_attacked);
    }
  }
  // One expense entry per attacked window, plus one per untouched session.
  std::size_t attacked = 0, untouched = 0;
  for (const auto& u : run.units) {
    attacked += u.windows_attacked;
    untouched += u.windows_attacked == 0;
  }
  const auto e = aggregate_expenses(run.expenses);
  EXPECT_EQ(e.attacked_count, attacked);
  EXPECT_EQ(e.skipped_count, untouched);
}

TEST(Sessions, FractionControlsAttackedWindows) {
  OracleHandle oracle(make_truth_backend("successor:" + std::to_string(kVocab)));
  auto data = successor_sessions(22, 10);
  for (auto& s : data.instances) {  // all normal: every consistent window is a target
    s.session_label = 0;
    s.true_label = 0;
    for (std::size_t t = 1; t < s.values.size(); ++t) {
      s.values[t] = static_cast<ValueIndex>((s.values[t - 1] + 1) % kVocab);
    }
  }
  auto cfg = session_config();
  cfg.window_fraction = 0.3;
  const auto run = assess_sessions(data, oracle, cfg);
  for (const auto& u : run.units) {
    EXPECT_EQ(u.windows_attacked, static_cast<std::size_t>(std::ceil(0.3 * u.windows - 1e-9)));
  }
  EXPECT_FALSE(run.before.dr->defined);  // no abnormal sessions
}

TEST(Sessions, WorkersAndSeedsAreDeterministic) {
  OracleHandle oracle(make_truth_backend("successor:" + std::to_string(kVocab)));
  const auto data = successor_sessions(23, 16);
  auto cfg = session_config();
  cfg.window_fraction = 0.5;
  cfg.search.algorithm = Algorithm::ucbs;
  cfg.search.seed = 4;
  auto a = assess_sessions(data, oracle, cfg);
  cfg.workers = 3;
  auto b = assess_sessions(data, oracle, cfg);
  zero_runtime(a);
  zero_runtime(b);
  EXPECT_EQ(a.units, b.units);
  cfg.search.seed = 5;
  auto c = assess_sessions(data, oracle, cfg);
  zero_runtime(c);
  EXPECT_NE(a.units, c.units);
}

TEST(Results, OneJsonRecordPerUnit) {
  OracleHandle oracle(make_truth_backend("successor:" + std::to_string(kVocab)));
  const auto data = successor_sessions(24, 5);
  const auto run = assess_sessions(data, oracle, session_config());
  std::ostringstream os;
  write_results(run, os);
  std::istringstream in(os.str());
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("id"), run.units[n].id);
    EXPECT_TRUE(j.contains("windows_attacked"));
    ++n;
  }
  EXPECT_EQ(n, run.units.size());
}
