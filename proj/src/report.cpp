// Copyright 2026 The AdvCat Authors
// SPDX-License-Identifier: Apache-2.0

#include "advcat/report.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace advcat {

using nlohmann::json;

DiagnosticReport build_report(const AssessmentRun& run, bool include_timing) {
  if (!run.completed) throw std::invalid_argument("cannot report on an incomplete assessment run");
  DiagnosticReport r;
  const auto& cfg = run.config;
  const auto& s = cfg.search;
  r.config.mode = to_string(cfg.mode);
  r.config.algorithm = to_string(s.algorithm);
  r.config.budget = s.budget.str();
  r.config.time_limit = s.time_limit;
  r.config.sgs_r = s.sgs_r;
  r.config.ucb_alpha = s.ucb_alpha;
  r.config.ucb_mean = to_string(s.ucb_mean);
  r.config.k_rank = s.objective.k_rank;
  r.config.success_threshold = s.success_threshold;
  r.config.cache = s.cache;
  r.config.window = cfg.mode == AssessMode::classification ? 0 : cfg.window;
  r.config.window_fraction = cfg.window_fraction;
  r.config.seed = s.seed;
  r.config.oracle = run.oracle;
  r.config.dataset_digest = run.dataset_digest;

  r.num_units = run.units.size();
  r.before = run.before;
  r.after = run.after;
  r.deltas = compute_deltas(run.before, run.after);
  r.expenses = aggregate_expenses(run.expenses);
  r.timing = include_timing;
  if (!include_timing) r.expenses.avg_runtime.reset();
  for (const auto& u : run.units) {
    UnitSummary us;
    us.id = u.id;
    us.label = u.label;
    us.skipped = u.skipped;
    us.success = u.success;
    us.clean_prediction = u.clean_prediction;
    us.after_prediction = u.after_prediction;
    us.queries = u.queries;
    us.edits = u.perturbation.size();
    us.margin = u.margin;
    us.terminated_by = u.terminated_by;
    if (include_timing) us.runtime = u.runtime;
    r.units.push_back(std::move(us));
  }
  r.warnings = run.warnings;
  return r;
}

namespace {

json metric_json(const std::optional<MetricValue>& m) {
  return m->defined ? json(m->value) : json(nullptr);
}

json metrics_json(const MetricSet& m) {
  json j = json::object();
  if (m.acc) j["acc"] = metric_json(m.acc);
  if (m.f1) j["f1"] = metric_json(m.f1);
  if (m.fpr) j["fpr"] = metric_json(m.fpr);
  if (m.auc) j["auc"] = metric_json(m.auc);
  if (m.dr) j["dr"] = metric_json(m.dr);
  return j;
}

json deltas_json(const DeltaSet& d) {
  json j = json::object();
  if (d.dacc) j["dacc"] = metric_json(d.dacc);
  if (d.df1) j["df1"] = metric_json(d.df1);
  if (d.dfpr) j["dfpr"] = metric_json(d.dfpr);
  if (d.dauc) j["dauc"] = metric_json(d.dauc);
  if (d.ddr) j["ddr"] = metric_json(d.ddr);
  return j;
}

std::optional<MetricValue> metric_from(const json& j, const char* key) {
  if (!j.contains(key)) return std::nullopt;
  const auto& v = j.at(key);
  if (v.is_null()) return MetricValue::undefined();
  return MetricValue::of(v.get<double>());
}

MetricSet metrics_from(const json& j) {
  return {metric_from(j, "acc"), metric_from(j, "f1"), metric_from(j, "fpr"), metric_from(j, "auc"),
          metric_from(j, "dr")};
}

DeltaSet deltas_from(const json& j) {
  return {metric_from(j, "dacc"), metric_from(j, "df1"), metric_from(j, "dfpr"),
          metric_from(j, "dauc"), metric_from(j, "ddr")};
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_number(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string format_delta(const MetricValue& delta) {
  if (!delta.defined) return "n/a (zero baseline)";
  return format_percent(delta.value);
}

std::string format_cell(const std::optional<MetricValue>& after, const std::optional<MetricValue>& delta) {
  if (!after) return "-";
  const std::string value = after->defined ? fixed2(after->value) : "undefined";
  if (!delta) return value;
  if (!delta->defined) return value + " / " + format_delta(*delta);
  return value + " (" + format_delta(*delta) + ")";
}

std::string render(const DiagnosticReport& r, RenderStyle style) {
  if (style == RenderStyle::machine) {
    json j;
    j["version"] = r.version;
    const auto& c = r.config;
    j["config"] = {{"mode", c.mode},
                   {"algorithm", c.algorithm},
                   {"budget", c.budget},
                   {"time_limit", c.time_limit},
                   {"sgs_r", c.sgs_r},
                   {"ucb_alpha", c.ucb_alpha},
                   {"ucb_mean", c.ucb_mean},
                   {"k_rank", c.k_rank},
                   {"success_threshold", c.success_threshold},
                   {"cache", c.cache},
                   {"window", c.window},
                   {"window_fraction", c.window_fraction},
                   {"seed", c.seed},
                   {"oracle", c.oracle},
                   {"dataset_digest", c.dataset_digest}};
    j["num_units"] = r.num_units;
    j["before"] = metrics_json(r.before);
    j["after"] = metrics_json(r.after);
    j["deltas"] = deltas_json(r.deltas);
    json e = {{"avg_queries", optional_number(r.expenses.avg_queries)},
              {"attacked_count", r.expenses.attacked_count},
              {"skipped_count", r.expenses.skipped_count}};
    if (r.timing) e["avg_runtime"] = optional_number(r.expenses.avg_runtime);
    j["expenses"] = e;
    json units = json::array();
    for (const auto& u : r.units) {
      json ju = {{"id", u.id},
                 {"label", u.label},
                 {"skipped", u.skipped},
                 {"success", u.success},
                 {"clean_prediction", u.clean_prediction},
                 {"after_prediction", u.after_prediction},
                 {"queries", u.queries},
                 {"edits", u.edits},
                 {"margin", optional_number(u.margin)},
                 {"terminated_by", u.terminated_by}};
      if (r.timing) ju["runtime"] = optional_number(u.runtime);
      units.push_back(std::move(ju));
    }
    j["units"] = std::move(units);
    j["warnings"] = r.warnings;
    j["timing"] = r.timing;
    return j.dump(2) + "\n";
  }

  std::ostringstream os;
  const auto& c = r.config;
  os << "# Robustness assessment report\n\n";
  os << "- mode: " << c.mode << "\n";
  os << "- algorithm: " << c.algorithm << ", budget " << c.budget << ", time limit " << c.time_limit
     << " s";
  if (c.algorithm == "sgs") os << ", r " << c.sgs_r;
  if (c.algorithm == "ucbs") os << ", alpha " << c.ucb_alpha << " (" << c.ucb_mean << " mean)";
  os << "\n";
  os << "- top-k: " << c.k_rank << ", success threshold " << c.success_threshold << ", seed " << c.seed
     << "\n";
  if (c.mode != "classification") {
    os << "- window: " << c.window;
    if (c.mode == "session") os << ", attacked share " << c.window_fraction;
    os << "\n";
  }
  os << "- oracle: " << c.oracle << "\n";
  os << "- dataset digest: " << c.dataset_digest << "\n";
  os << "- units: " << r.num_units << "\n\n";

  os << "| Metric | Before | After (delta) |\n|---|---|---|\n";
  auto row = [&](const char* name, const std::optional<MetricValue>& b,
                 const std::optional<MetricValue>& a, const std::optional<MetricValue>& d) {
    if (!b && !a) return;
    os << "| " << name << " | " << format_cell(b, std::nullopt) << " | " << format_cell(a, d) << " |\n";
  };
  row("Acc", r.before.acc, r.after.acc, r.deltas.dacc);
  row("F1", r.before.f1, r.after.f1, r.deltas.df1);
  row("FPR", r.before.fpr, r.after.fpr, r.deltas.dfpr);
  row("AUC", r.before.auc, r.after.auc, r.deltas.dauc);
  row("DR", r.before.dr, r.after.dr, r.deltas.ddr);

  os << "\n| Expense | Value |\n|---|---|\n";
  os << "| attacked | " << r.expenses.attacked_count << " |\n";
  os << "| skipped | " << r.expenses.skipped_count << " |\n";
  if (r.expenses.avg_queries) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", *r.expenses.avg_queries);
    os << "| avg queries | " << buf << " |\n";
  } else {
    os << "| avg queries | n/a (nothing attacked) |\n";
  }
  if (r.timing) {
    if (r.expenses.avg_runtime) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.4f", *r.expenses.avg_runtime);
      os << "| avg runtime (s) | " << buf << " |\n";
    } else {
      os << "| avg runtime (s) | n/a (nothing attacked) |\n";
    }
  }
  if (!r.warnings.empty()) {
    os << "\n## Warnings\n\n";
    for (const auto& w : r.warnings) os << "- " << w << "\n";
  }
  return os.str();
}

std::string render_csv(const DiagnosticReport& r) {
  std::ostringstream os;
  os << "metric,before,after,delta\n";
  auto cell = [](const std::optional<MetricValue>& m) {
    if (!m || !m->defined) return std::string();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", m->value);
    return std::string(buf);
  };
  auto row = [&](const char* name, const std::optional<MetricValue>& b,
                 const std::optional<MetricValue>& a, const std::optional<MetricValue>& d) {
    if (!b && !a) return;
    os << name << "," << cell(b) << "," << cell(a) << "," << cell(d) << "\n";
  };
  row("acc", r.before.acc, r.after.acc, r.deltas.dacc);
  row("f1", r.before.f1, r.after.f1, r.deltas.df1);
  row("fpr", r.before.fpr, r.after.fpr, r.deltas.dfpr);
  row("auc", r.before.auc, r.after.auc, r.deltas.dauc);
  row("dr", r.before.dr, r.after.dr, r.deltas.ddr);
  return os.str();
}

DiagnosticReport parse_report(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("report is not valid JSON: ") + e.what());
  }
  DiagnosticReport r;
  try {
    r.version = j.at("version").get<std::string>();
    const auto& c = j.at("config");
    r.config.mode = c.at("mode").get<std::string>();
    r.config.algorithm = c.at("algorithm").get<std::string>();
    r.config.budget = c.at("budget").get<std::string>();
    r.config.time_limit = c.at("time_limit").get<double>();
    r.config.sgs_r = c.at("sgs_r").get<std::size_t>();
    r.config.ucb_alpha = c.at("ucb_alpha").get<double>();
    r.config.ucb_mean = c.at("ucb_mean").get<std::string>();
    r.config.k_rank = c.at("k_rank").get<std::size_t>();
    r.config.success_threshold = c.at("success_threshold").get<double>();
    r.config.cache = c.at("cache").get<bool>();
    r.config.window = c.at("window").get<std::size_t>();
    r.config.window_fraction = c.at("window_fraction").get<double>();
    r.config.seed = c.at("seed").get<std::uint64_t>();
    r.config.oracle = c.at("oracle").get<std::string>();
    r.config.dataset_digest = c.at("dataset_digest").get<std::string>();
    r.num_units = j.at("num_units").get<std::size_t>();
    r.before = metrics_from(j.at("before"));
    r.after = metrics_from(j.at("after"));
    r.deltas = deltas_from(j.at("deltas"));
    r.timing = j.at("timing").get<bool>();
    const auto& e = j.at("expenses");
    r.expenses.avg_queries = optional_number(e.at("avg_queries"));
    r.expenses.attacked_count = e.at("attacked_count").get<std::size_t>();
    r.expenses.skipped_count = e.at("skipped_count").get<std::size_t>();
    if (r.timing) r.expenses.avg_runtime = optional_number(e.at("avg_runtime"));
    for (const auto& ju : j.at("units")) {
      UnitSummary u;
      u.id = ju.at("id").get<std::string>();
      u.label = ju.at("label").get<int>();
      u.skipped = ju.at("skipped").get<bool>();
      u.success = ju.at("success").get<bool>();
      u.clean_prediction = ju.at("clean_prediction").get<int>();
      u.after_prediction = ju.at("after_prediction").get<int>();
      u.queries = ju.at("queries").get<std::uint64_t>();
      u.edits = ju.at("edits").get<std::size_t>();
      u.margin = optional_number(ju.at("margin"));
      u.terminated_by = ju.at("terminated_by").get<std::string>();
      if (r.timing) u.runtime = optional_number(ju.at("runtime"));
      r.units.push_back(std::move(u));
    }
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed report: ") + e.what());
  }
  return r;
}

}  // namespace advcat
