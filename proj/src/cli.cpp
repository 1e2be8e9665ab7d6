// Copyright 2026 The AdvCat Authors
// SPDX-License-Identifier: Apache-2.0

#include "advcat/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "advcat/models.hpp"
#include "advcat/pipeline.hpp"
#include "advcat/report.hpp"

namespace advcat {

namespace {

// Bad flag values and unreadable inputs; mapped to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SynthArgs {
  std::string kind = "classification";
  std::uint64_t seed = 1;
  std::size_t features = 20;
  std::size_t values = 5;
  std::size_t classes = 2;
  std::size_t count = 1000;
  double noise = 0.05;
  std::size_t vocab = 30;
  double abnormal = 0.3;
  std::string out;
};

struct TrainArgs {
  std::string dataset;
  std::string out;
  TrainConfig cfg;
  std::size_t window = 10;
};

struct AssessArgs {
  std::string dataset;
  std::string oracle;
  std::string mode = "classification";
  std::string algo = "fsgs";
  std::string budget = "5";
  double time_limit = 60.0;
  std::size_t sgs_r = 5;
  double ucb_alpha = 2.0;
  std::string ucb_mean = "rounds";
  std::uint64_t seed = 0;
  double gamma = 0.0;
  bool no_cache = false;
  std::size_t topk = 1;
  std::size_t window = 0;  // 0: take it from the model, else 10
  double fraction = 1.0;
  std::size_t workers = 1;
  std::string report;
  std::string human;
  std::string results;
  bool timing = false;
};

struct ReportArgs {
  std::string in;
  std::string format = "human";
  std::string out;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read dataset '" + path + "'");
  return parse_dataset(in);
}

int do_synth(const SynthArgs& a, std::ostream& out) {
  Dataset data;
  if (a.kind == "classification") {
    data = synth_classification(a.seed, a.features, a.values, a.classes, a.count, a.noise);
  } else if (a.kind == "logs") {
    data = synth_log_sessions(a.seed, a.vocab, a.count, a.abnormal);
  } else {
    throw ConfigError("unknown dataset kind '" + a.kind + "' (classification, logs)");
  }
  write_dataset(data, std::filesystem::path(a.out));
  out << "wrote " << data.size() << " instances to " << a.out << "\n";
  return kExitOk;
}

int do_train(const TrainArgs& a, std::ostream& out) {
  a.cfg.validate();
  const Dataset data = read_dataset(a.dataset);
  char buf[64];
  if (data.kind == DatasetKind::log_sessions) {
    if (a.window < 2) throw ConfigError("window must hold at least two keys");
    const auto pred = train_window_predictor(data, a.window, a.cfg);
    pred.model.save(a.out, a.window);
    const auto samples = window_samples(data, a.window, true);
    std::snprintf(buf, sizeof buf, "%.4f", accuracy(pred.model, samples));
    out << "window predictor over " << pred.vocab() << " keys, top-1 accuracy on normal windows "
        << buf << "\n";
  } else {
    const auto res = train_softmax(data, a.cfg);
    res.model.save(a.out, 0);
    std::snprintf(buf, sizeof buf, "%.4f", res.train_accuracy);
    out << "classifier over " << res.model.num_features() << " features, training accuracy " << buf
        << "\n";
  }
  out << "model written to " << a.out << "\n";
  return kExitOk;
}

int do_assess(const AssessArgs& a, std::ostream& out) {
  AssessConfig cfg;
  cfg.mode = parse_mode(a.mode);
  auto& s = cfg.search;
  s.algorithm = parse_algorithm(a.algo);
  s.budget = Budget::parse(a.budget);
  s.time_limit = a.time_limit;
  s.sgs_r = a.sgs_r;
  s.ucb_alpha = a.ucb_alpha;
  s.ucb_mean = parse_ucb_mean(a.ucb_mean);
  s.seed = a.seed;
  s.success_threshold = a.gamma;
  s.cache = !a.no_cache;
  s.objective.k_rank = a.topk;
  cfg.window_fraction = a.fraction;
  cfg.workers = a.workers;
  cfg.window = a.window == 0 ? 10 : a.window;
  cfg.validate();

  const Dataset data = read_dataset(a.dataset);
  std::size_t model_window = 0;
  auto backend = open_oracle(a.oracle, &model_window);
  if (a.window == 0 && model_window != 0) cfg.window = model_window;
  if (cfg.mode != AssessMode::classification && model_window != 0 && cfg.window != model_window) {
    throw ConfigError("window " + std::to_string(cfg.window) + " does not match the model's window " +
                      std::to_string(model_window));
  }

  OracleHandle oracle(backend, s.cache);
  AssessmentRun run = assess(data, oracle, cfg);
  run.oracle = a.oracle;
  const auto report = build_report(run, a.timing);
  const std::string machine = render(report, RenderStyle::machine);
  if (!a.report.empty()) write_file(a.report, machine);
  if (!a.human.empty()) write_file(a.human, render(report, RenderStyle::human));
  if (!a.results.empty()) {
    std::ostringstream rs;
    write_results(run, rs);
    write_file(a.results, rs.str());
  }
  if (a.report.empty() && a.human.empty()) out << render(report, RenderStyle::human);
  return kExitOk;
}

int do_report(const ReportArgs& a, std::ostream& out) {
  const DiagnosticReport report = parse_report(read_file(a.in));
  std::string text;
  if (a.format == "human") {
    text = render(report, RenderStyle::human);
  } else if (a.format == "csv") {
    text = render_csv(report);
  } else if (a.format == "json") {
    text = render(report, RenderStyle::machine);
  } else {
    throw ConfigError("unknown report format '" + a.format + "' (human, csv, json)");
  }
  if (a.out.empty()) {
    out << text;
  } else {
    write_file(a.out, text);
  }
  return kExitOk;
}

}  // namespace

std::shared_ptr<const ModelBackend> open_oracle(const std::string& spec, std::size_t* window) {
  if (window) *window = 0;
  const auto colon = spec.find(':');
  if (colon == std::string::npos) {
    throw ConfigError("oracle spec '" + spec + "' must be builtin:<file>, remote:<url> or truth:<rule>");
  }
  const std::string kind = spec.substr(0, colon);
  const std::string arg = spec.substr(colon + 1);
  if (kind == "builtin") {
    if (!std::ifstream(arg)) throw ConfigError("cannot read model '" + arg + "'");
    auto [model, w] = SoftmaxClassifier::load(arg);
    if (window) *window = w;
    return make_model_backend(std::move(model));
  }
  if (kind == "remote") return make_remote_backend(arg);
  if (kind == "truth") {
    try {
      return make_truth_backend(arg);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  throw ConfigError("unknown oracle kind '" + kind + "' (builtin, remote, truth)");
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Black-box robustness assessment for categorical inputs", "advcat"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolkitVersion);
  // Config files are read at the top level; options go under a [synth],
  // [train] or [assess] section. Fallthrough lets "assess --config f" work.
  app.set_config("--config", "", "TOML/INI file with per-subcommand sections");
  app.fallthrough();
  app.allow_config_extras(CLI::config_extras_mode::error);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth->add_option("--kind", sa.kind, "classification or logs")->capture_default_str();
  synth->add_option("--seed", sa.seed)->capture_default_str();
  synth->add_option("--features", sa.features, "classification: feature count")->capture_default_str();
  synth->add_option("--values", sa.values, "classification: values per feature")->capture_default_str();
  synth->add_option("--classes", sa.classes, "classification: class count")->capture_default_str();
  synth->add_option("--count", sa.count, "instances or sessions")->capture_default_str();
  synth->add_option("--noise", sa.noise, "classification: label noise")->capture_default_str();
  synth->add_option("--vocab", sa.vocab, "logs: number of log keys")->capture_default_str();
  synth->add_option("--abnormal", sa.abnormal, "logs: share of abnormal sessions")->capture_default_str();
  synth->add_option("--out", sa.out)->required();

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train the built-in softmax model");
  train->add_option("--dataset", ta.dataset)->required();
  train->add_option("--out", ta.out)->required();
  train->add_option("--lr", ta.cfg.learning_rate)->capture_default_str();
  train->add_option("--epochs", ta.cfg.epochs)->capture_default_str();
  train->add_option("--batch", ta.cfg.batch_size)->capture_default_str();
  train->add_option("--dim", ta.cfg.dim, "embedding width")->capture_default_str();
  train->add_option("--seed", ta.cfg.seed)->capture_default_str();
  train->add_option("--window", ta.window, "log datasets: window length")->capture_default_str();

  AssessArgs aa;
  auto* assess_cmd = app.add_subcommand("assess", "Attack every unit and report metric changes");
  assess_cmd->add_option("--dataset", aa.dataset)->required();
  assess_cmd->add_option("--oracle", aa.oracle, "builtin:<file>, remote:<url> or truth:<rule>")->required();
  assess_cmd->add_option("--mode", aa.mode, "classification, log_window or session")->capture_default_str();
  assess_cmd->add_option("--algo", aa.algo, "fsgs, sgs, ucbs or brute")->capture_default_str();
  assess_cmd->add_option("--budget", aa.budget, "edit budget: 5 or 35%")->capture_default_str();
  assess_cmd->add_option("--time-limit", aa.time_limit, "seconds per search")->capture_default_str();
  assess_cmd->add_option("--sgs-r", aa.sgs_r)->capture_default_str();
  assess_cmd->add_option("--ucb-alpha", aa.ucb_alpha)->capture_default_str();
  assess_cmd->add_option("--ucb-mean", aa.ucb_mean, "rounds or pulls")->capture_default_str();
  assess_cmd->add_option("--seed", aa.seed)->capture_default_str();
  assess_cmd->add_option("--gamma", aa.gamma, "success threshold")->capture_default_str();
  assess_cmd->add_flag("--no-cache", aa.no_cache);
  assess_cmd->add_option("--topk", aa.topk, "top-k rank for consistency")->capture_default_str();
  assess_cmd->add_option("--window", aa.window, "window length (default 10 or the model's)");
  assess_cmd->add_option("--fraction", aa.fraction, "session mode: share of windows attacked")
      ->capture_default_str();
  assess_cmd->add_option("--workers", aa.workers)->capture_default_str();
  assess_cmd->add_option("--report", aa.report, "machine report path");
  assess_cmd->add_option("--human", aa.human, "human report path");
  assess_cmd->add_option("--results", aa.results, "per-unit results path");
  assess_cmd->add_flag("--report-timing", aa.timing, "include wall-clock fields");

  ReportArgs ra;
  auto* report_cmd = app.add_subcommand("report", "Render a machine report");
  report_cmd->add_option("--in", ra.in)->required();
  report_cmd->add_option("--format", ra.format, "human, csv or json")->capture_default_str();
  report_cmd->add_option("--out", ra.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (synth->parsed()) return do_synth(sa, out);
    if (train->parsed()) return do_train(ta, out);
    if (assess_cmd->parsed()) return do_assess(aa, out);
    return do_report(ra, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace advcat
