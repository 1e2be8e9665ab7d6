// Copyright 2026 The AdvCat Authors
// SPDX-License-Identifier: Apache-2.0

#include "advcat/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <ostream>
#include <thread>

#include "advcat/rng.hpp"
#include "json.hpp"

namespace advcat {

const char* to_string(AssessMode mode) {
  switch (mode) {
    case AssessMode::classification: return "classification";
    case AssessMode::log_window: return "log_window";
    case AssessMode::session: return "session";
  }
  return "?";
}

AssessMode parse_mode(const std::string& s) {
  for (auto m : {AssessMode::classification, AssessMode::log_window, AssessMode::session}) {
    if (s == to_string(m)) return m;
  }
  throw std::invalid_argument("unknown mode '" + s + "' (classification, log_window, session)");
}

void AssessConfig::validate() const {
  search.validate();
  if (mode != AssessMode::classification && window < 2) {
    throw std::invalid_argument("window must hold at least two keys");
  }
  if (!(window_fraction > 0.0) || window_fraction > 1.0) {
    throw std::invalid_argument("window fraction must be in (0, 1]");
  }
  if (workers < 1) throw std::invalid_argument("workers must be at least 1");
}

std::vector<WindowUnit> slice_windows(const std::string& session_id, std::span<const ValueIndex> keys,
                                      std::size_t window, std::vector<std::string>* warnings) {
  if (window < 2) throw std::invalid_argument("window must hold at least two keys");
  std::vector<WindowUnit> out;
  if (keys.size() < window) {
    if (warnings) {
      warnings->push_back("session '" + session_id + "' has " + std::to_string(keys.size()) +
                          " keys, fewer than the window of " + std::to_string(window));
    }
    return out;
  }
  out.reserve(keys.size() - window + 1);
  for (std::size_t off = 0; off + window <= keys.size(); ++off) {
    WindowUnit w;
    w.session_id = session_id;
    w.offset = off;
    w.inputs.assign(keys.begin() + static_cast<std::ptrdiff_t>(off),
                    keys.begin() + static_cast<std::ptrdiff_t>(off + window - 1));
    w.target = keys[off + window - 1];
    out.push_back(std::move(w));
  }
  return out;
}

CategoricalInstance window_instance(const WindowUnit& w, std::size_t vocab) {
  std::vector<ValueIndex> all(vocab);
  std::iota(all.begin(), all.end(), 0);
  CategoricalInstance inst;
  inst.id = w.session_id + "@" + std::to_string(w.offset);
  inst.true_label = w.target;
  inst.values = w.inputs;
  inst.candidates.assign(w.inputs.size(), all);
  for (ValueIndex k : w.inputs) {
    if (k < 0 || static_cast<std::size_t>(k) >= vocab) {
      throw std::invalid_argument("window '" + inst.id + "' has a key outside the vocabulary");
    }
  }
  if (w.target < 0 || static_cast<std::size_t>(w.target) >= vocab) {
    throw std::invalid_argument("window '" + inst.id + "' targets a key outside the vocabulary");
  }
  return inst;
}

namespace {

template <typename F>
void parallel_for(std::size_t count, std::size_t workers, F&& body) {
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  const std::size_t n_threads = std::min(workers, count);
  pool.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

int argmax(const ProbabilityVector& p) {
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

/// True label inside the top k_rank predictions.
bool consistent(const ProbabilityVector& p, ClassIndex target, std::size_t k_rank) {
  return margin_topk(p, target, k_rank) < 0.0;
}

void record_search(UnitOutcome& u, const SearchOutcome& s) {
  u.skipped = false;
  u.success = s.success;
  u.queries = s.stats.queries_issued;
  u.cache_hits = s.stats.cache_hits;
  u.runtime = s.wall_time;
  if (std::isfinite(s.margin)) u.margin = s.margin;
  u.terminated_by = to_string(s.terminated_by);
  u.perturbation = s.perturbation;
  u.error = s.error;
}

AssessmentRun start_run(const Dataset& data, const OracleHandle& oracle, const AssessConfig& cfg) {
  cfg.validate();
  AssessmentRun run;
  run.config = cfg;
  run.dataset_digest = dataset_digest(data);
  run.oracle = oracle.backend().describe();
  run.num_classes = oracle.num_classes();
  if (cfg.search.objective.k_rank >= oracle.num_classes()) {
    throw std::invalid_argument("top-k rank must be below the oracle's number of classes");
  }
  return run;
}

void collect_expenses(AssessmentRun& run) {
  run.expenses.clear();
  for (const auto& u : run.units) run.expenses.push_back({!u.skipped, u.queries, u.runtime});
}

}  // namespace

AssessmentRun assess_classification(const Dataset& data, const OracleHandle& oracle,
                                    const AssessConfig& cfg) {
  if (cfg.mode != AssessMode::classification) throw std::invalid_argument("config mode is not classification");
  auto run = start_run(data, oracle, cfg);
  SearchConfig search = cfg.search;
  search.objective.goal = Objective::Goal::misclassify;

  run.units.resize(data.size());
  parallel_for(data.size(), cfg.workers, [&](std::size_t idx) {
    const auto& inst = data.instances[idx];
    OracleHandle handle = oracle.clone();
    handle.set_cache_enabled(search.cache);
    UnitOutcome& u = run.units[idx];
    u.id = inst.id;
    u.label = inst.true_label;
    if (static_cast<std::size_t>(inst.true_label) >= handle.num_classes()) {
      throw OracleError("instance '" + inst.id + "' label exceeds the oracle's classes");
    }
    const auto clean = handle.query_values(inst.values);
    u.clean_prediction = u.after_prediction = argmax(clean);
    u.clean_score = u.after_score = clean.size() == 2 ? clean[1] : clean[static_cast<std::size_t>(inst.true_label)];
    if (search.objective.margin(clean, inst.true_label) >= 0.0) return;  // already wrong

    SearchConfig local = search;
    local.seed = derive_seed(search.seed, idx);
    const auto outcome = run_search(inst, handle, local);
    record_search(u, outcome);
    const auto after = handle.query(inst, outcome.perturbation);
    u.after_prediction = argmax(after);
    u.after_score = after.size() == 2 ? after[1] : after[static_cast<std::size_t>(inst.true_label)];
  });

  std::vector<int> labels, before, after;
  std::vector<double> s_before, s_after;
  for (const auto& u : run.units) {
    labels.push_back(u.label);
    before.push_back(u.clean_prediction);
    after.push_back(u.after_prediction);
    s_before.push_back(u.clean_score);
    s_after.push_back(u.after_score);
  }
  MetricSelection which;
  if (run.num_classes != 2) which = {true, false, false, false, false};
  run.before = compute_metrics(before, labels, s_before, 1, which);
  run.after = compute_metrics(after, labels, s_after, 1, which);
  collect_expenses(run);
  run.completed = true;
  return run;
}

AssessmentRun assess_log_windows(const Dataset& sessions, const OracleHandle& oracle,
                                 const AssessConfig& cfg) {
  if (cfg.mode != AssessMode::log_window) throw std::invalid_argument("config mode is not log_window");
  if (sessions.kind != DatasetKind::log_sessions) {
    throw std::invalid_argument("log window assessment needs a log-session dataset");
  }
  auto run = start_run(sessions, oracle, cfg);
  const std::size_t vocab = oracle.num_classes();
  const std::size_t k_rank = cfg.search.objective.k_rank;
  SearchConfig search = cfg.search;
  search.objective.goal = Objective::Goal::misclassify;

  std::vector<WindowUnit> windows;
  std::vector<int> window_label;  // 1 = window of a normal session (expected consistent)
  for (const auto& s : sessions.instances) {
    for (auto& w : slice_windows(*s.session_id, s.values, cfg.window, &run.warnings)) {
      windows.push_back(std::move(w));
      window_label.push_back(s.session_label.value_or(0) == 0 ? 1 : 0);
    }
  }

  run.units.resize(windows.size());
  parallel_for(windows.size(), cfg.workers, [&](std::size_t idx) {
    const auto inst = window_instance(windows[idx], vocab);
    OracleHandle handle = oracle.clone();
    handle.set_cache_enabled(search.cache);
    UnitOutcome& u = run.units[idx];
    u.id = inst.id;
    u.label = window_label[idx];
    const auto clean = handle.query_values(inst.values);
    const bool ok = consistent(clean, inst.true_label, k_rank);
    u.clean_prediction = u.after_prediction = ok ? 1 : 0;
    u.clean_score = u.after_score = clean[static_cast<std::size_t>(inst.true_label)];
    if (!ok) return;

    SearchConfig local = search;
    local.seed = derive_seed(search.seed, idx);
    const auto outcome = run_search(inst, handle, local);
    record_search(u, outcome);
    const auto after = handle.query(inst, outcome.perturbation);
    u.after_prediction = consistent(after, inst.true_label, k_rank) ? 1 : 0;
    u.after_score = after[static_cast<std::size_t>(inst.true_label)];
  });

  std::vector<int> labels, before, after;
  std::vector<double> s_before, s_after;
  for (const auto& u : run.units) {
    labels.push_back(u.label);
    before.push_back(u.clean_prediction);
    after.push_back(u.after_prediction);
    s_before.push_back(u.clean_score);
    s_after.push_back(u.after_score);
  }
  run.before = compute_metrics(before, labels, s_before, 1);
  run.after = compute_metrics(after, labels, s_after, 1);
  collect_expenses(run);
  run.completed = true;
  return run;
}

AssessmentRun assess_sessions(const Dataset& sessions, const OracleHandle& oracle,
                              const AssessConfig& cfg) {
  if (cfg.mode != AssessMode::session) throw std::invalid_argument("config mode is not session");
  if (sessions.kind != DatasetKind::log_sessions) {
    throw std::invalid_argument("session assessment needs a log-session dataset");
  }
  auto run = start_run(sessions, oracle, cfg);
  const std::size_t vocab = oracle.num_classes();
  const std::size_t k_rank = cfg.search.objective.k_rank;

  std::vector<std::vector<WindowUnit>> per_session;
  for (const auto& s : sessions.instances) {
    per_session.push_back(slice_windows(*s.session_id, s.values, cfg.window, &run.warnings));
  }
  std::vector<std::vector<UnitExpense>> window_expenses(sessions.size());

  run.units.resize(sessions.size());
  parallel_for(sessions.size(), cfg.workers, [&](std::size_t idx) {
    const auto& session = sessions.instances[idx];
    const auto& windows = per_session[idx];
    const bool abnormal = session.session_label.value_or(0) == 1;
    OracleHandle handle = oracle.clone();
    handle.set_cache_enabled(cfg.search.cache);

    UnitOutcome& u = run.units[idx];
    u.id = *session.session_id;
    u.label = abnormal ? 1 : 0;
    u.windows = windows.size();

    std::vector<CategoricalInstance> instances;
    std::vector<bool> ok_before;
    for (const auto& w : windows) {
      instances.push_back(window_instance(w, vocab));
      ok_before.push_back(consistent(handle.query_values(instances.back().values),
                                     instances.back().true_label, k_rank));
    }
    std::vector<bool> ok_after = ok_before;

    const auto chosen_count = static_cast<std::size_t>(
        std::ceil(cfg.window_fraction * static_cast<double>(windows.size()) - 1e-9));
    std::vector<std::size_t> all(windows.size());
    std::iota(all.begin(), all.end(), 0);
    const std::uint64_t session_seed = derive_seed(cfg.search.seed, idx);
    Rng rng(session_seed);
    auto chosen = rng.sample(std::move(all), chosen_count);
    std::sort(chosen.begin(), chosen.end());

    SearchConfig search = cfg.search;
    // Evasion in abnormal sessions, false alarms in normal ones.
    search.objective.goal = abnormal ? Objective::Goal::restore : Objective::Goal::misclassify;
    for (std::size_t w : chosen) {
      const bool needs_attack = abnormal ? !ok_before[w] : ok_before[w];
      if (!needs_attack) continue;
      handle.clear_cache();
      SearchConfig local = search;
      local.seed = derive_seed(session_seed, w + 1);
      const auto outcome = run_search(instances[w], handle, local);
      ok_after[w] = consistent(handle.query(instances[w], outcome.perturbation),
                               instances[w].true_label, k_rank);
      ++u.windows_attacked;
      if (ok_after[w] != ok_before[w]) ++u.windows_flipped;
      u.queries += outcome.stats.queries_issued;
      u.cache_hits += outcome.stats.cache_hits;
      u.runtime += outcome.wall_time;
      if (!outcome.error.empty() && u.error.empty()) u.error = outcome.error;
      window_expenses[idx].push_back({true, outcome.stats.queries_issued, outcome.wall_time});
    }
    u.skipped = u.windows_attacked == 0;
    u.success = u.windows_attacked > 0 && u.windows_flipped == u.windows_attacked;

    auto inconsistent_share = [&](const std::vector<bool>& ok) {
      if (ok.empty()) return 0.0;
      const auto bad = static_cast<double>(std::count(ok.begin(), ok.end(), false));
      return bad / static_cast<double>(ok.size());
    };
    u.clean_prediction = std::find(ok_before.begin(), ok_before.end(), false) != ok_before.end() ? 1 : 0;
    u.after_prediction = std::find(ok_after.begin(), ok_after.end(), false) != ok_after.end() ? 1 : 0;
    u.clean_score = inconsistent_share(ok_before);
    u.after_score = inconsistent_share(ok_after);
  });

  std::vector<int> labels, before, after;
  std::vector<double> s_before, s_after;
  for (const auto& u : run.units) {
    labels.push_back(u.label);
    before.push_back(u.clean_prediction);
    after.push_back(u.after_prediction);
    s_before.push_back(u.clean_score);
    s_after.push_back(u.after_score);
  }
  const MetricSelection which{true, true, true, true, true};
  run.before = compute_metrics(before, labels, s_before, 1, which);
  run.after = compute_metrics(after, labels, s_after, 1, which);
  for (const auto& e : window_expenses) run.expenses.insert(run.expenses.end(), e.begin(), e.end());
  // Sessions without any attacked window count as skipped units.
  for (const auto& u : run.units) {
    if (u.skipped) run.expenses.push_back({false, 0, 0.0});
  }
  run.completed = true;
  return run;
}

AssessmentRun assess(const Dataset& data, const OracleHandle& oracle, const AssessConfig& cfg) {
  switch (cfg.mode) {
    case AssessMode::classification: return assess_classification(data, oracle, cfg);
    case AssessMode::log_window: return assess_log_windows(data, oracle, cfg);
    case AssessMode::session: return assess_sessions(data, oracle, cfg);
  }
  throw std::invalid_argument("unknown mode");
}

void write_results(const AssessmentRun& run, std::ostream& out) {
  using nlohmann::json;
  for (const auto& u : run.units) {
    json rec;
    rec["id"] = u.id;
    rec["label"] = u.label;
    rec["skipped"] = u.skipped;
    rec["clean_prediction"] = u.clean_prediction;
    rec["after_prediction"] = u.after_prediction;
    rec["clean_score"] = u.clean_score;
    rec["after_score"] = u.after_score;
    rec["success"] = u.success;
    rec["queries"] = u.queries;
    rec["cache_hits"] = u.cache_hits;
    rec["runtime"] = u.runtime;
    rec["margin"] = u.margin ? json(*u.margin) : json(nullptr);
    rec["terminated_by"] = u.terminated_by;
    json edits = json::array();
    for (const auto& e : u.perturbation) edits.push_back({e.feature, e.value});
    rec["edits"] = edits;
    if (!u.error.empty()) rec["error"] = u.error;
    if (run.config.mode == AssessMode::session) {
      rec["windows"] = u.windows;
      rec["windows_attacked"] = u.windows_attacked;
      rec["windows_flipped"] = u.windows_flipped;
    }
    out << rec.dump() << '\n';
  }
}

}  // namespace advcat
