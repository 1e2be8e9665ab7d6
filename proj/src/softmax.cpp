// Copyright 2026 The AdvCat Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "advcat/kernels.hpp"
#include "advcat/models.hpp"
#include "advcat/rng.hpp"

namespace advcat {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning rate must be positive");
  }
  if (epochs < 0) throw std::invalid_argument("epochs must be non-negative");
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
  if (dim == 0) throw std::invalid_argument("embedding dimension must be positive");
}

std::vector<Sample> samples_of(const Dataset& data) {
  std::vector<Sample> out;
  out.reserve(data.size());
  for (const auto& inst : data.instances) out.push_back({inst.values, inst.true_label});
  return out;
}

ProbabilityVector softmax(std::span<const double> logits) {
  const auto& k = kernels::active();
  ProbabilityVector p(logits.size());
  const double m = k.max(logits.data(), logits.size());
  k.sub_scalar(logits.data(), m, p.data(), p.size());
  double s = 0.0;
  for (double& x : p) {
    x = std::exp(x);
    s += x;
  }
  for (double& x : p) x /= s;
  return p;
}

SoftmaxClassifier::SoftmaxClassifier(std::vector<std::size_t> cardinalities,
                                     std::size_t num_classes, std::size_t dim)
    : cardinalities_(std::move(cardinalities)), num_classes_(num_classes), dim_(dim) {
  if (cardinalities_.empty()) throw std::invalid_argument("model needs at least one feature");
  if (num_classes_ < 2) throw std::invalid_argument("model needs at least two classes");
  if (dim_ == 0) throw std::invalid_argument("embedding dimension must be positive");
  table_offsets_.reserve(cardinalities_.size());
  for (std::size_t c : cardinalities_) {
    if (c == 0) throw std::invalid_argument("feature cardinality must be positive");
    table_offsets_.push_back(embedding_total_);
    embedding_total_ += c * dim_;
  }
  params_.assign(bias_offset() + num_classes_, 0.0);
}

void SoftmaxClassifier::initialize(std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t i = 0; i < bias_offset(); ++i) params_[i] = rng.uniform(-0.1, 0.1);
  std::fill(params_.begin() + static_cast<std::ptrdiff_t>(bias_offset()), params_.end(), 0.0);
}

std::size_t SoftmaxClassifier::embedding_offset(std::size_t feature, ValueIndex value) const {
  if (value < 0 || static_cast<std::size_t>(value) >= cardinalities_[feature]) {
    throw std::out_of_range("value " + std::to_string(value) + " out of range for feature " +
                            std::to_string(feature));
  }
  return table_offsets_[feature] + static_cast<std::size_t>(value) * dim_;
}

void SoftmaxClassifier::gather(std::span<const ValueIndex> values, std::span<double> h) const {
  if (values.size() != num_features()) {
    throw std::invalid_argument("model expects " + std::to_string(num_features()) +
                                " features, got " + std::to_string(values.size()));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double* e = params_.data() + embedding_offset(i, values[i]);
    std::copy(e, e + dim_, h.begin() + static_cast<std::ptrdiff_t>(i * dim_));
  }
}

std::vector<double> SoftmaxClassifier::logits(std::span<const ValueIndex> values) const {
  const std::size_t width = num_features() * dim_;
  std::vector<double> h(width);
  gather(values, h);
  const auto& k = kernels::active();
  std::vector<double> z(num_classes_);
  const double* w = params_.data() + weights_offset();
  const double* b = params_.data() + bias_offset();
  for (std::size_t c = 0; c < num_classes_; ++c) z[c] = k.dot(w + c * width, h.data(), width) + b[c];
  return z;
}

ProbabilityVector SoftmaxClassifier::predict_proba(std::span<const ValueIndex> values) const {
  return softmax(logits(values));
}

double SoftmaxClassifier::loss(std::span<const Sample> batch, std::span<double> grad) const {
  if (batch.empty()) throw std::invalid_argument("loss over an empty batch");
  const bool want_grad = !grad.empty();
  if (want_grad) {
    if (grad.size() != params_.size()) throw std::invalid_argument("gradient buffer has the wrong size");
    std::fill(grad.begin(), grad.end(), 0.0);
  }
  const auto& k = kernels::active();
  const std::size_t width = num_features() * dim_;
  const double* w = params_.data() + weights_offset();
  const double* b = params_.data() + bias_offset();
  std::vector<double> h(width), z(num_classes_), dh(width);
  double total = 0.0;
  for (const auto& s : batch) {
    if (s.label < 0 || static_cast<std::size_t>(s.label) >= num_classes_) {
      throw std::out_of_range("label out of range");
    }
    gather(s.values, h);
    for (std::size_t c = 0; c < num_classes_; ++c) z[c] = k.dot(w + c * width, h.data(), width) + b[c];
    const double zmax = k.max(z.data(), z.size());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - zmax);
    const double lse = zmax + std::log(sum);
    total += lse - z[static_cast<std::size_t>(s.label)];
    if (!want_grad) continue;

    std::fill(dh.begin(), dh.end(), 0.0);
    double* gw = grad.data() + weights_offset();
    double* gb = grad.data() + bias_offset();
    for (std::size_t c = 0; c < num_classes_; ++c) {
      const double dz = std::exp(z[c] - lse) - (static_cast<ClassIndex>(c) == s.label ? 1.0 : 0.0);
      k.axpy(dz, h.data(), gw + c * width, width);
      k.axpy(dz, w + c * width, dh.data(), width);
      gb[c] += dz;
    }
    for (std::size_t i = 0; i < num_features(); ++i) {
      double* ge = grad.data() + embedding_offset(i, s.values[i]);
      k.axpy(1.0, dh.data() + i * dim_, ge, dim_);
    }
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  if (want_grad) {
    for (double& g : grad) g *= inv;
  }
  return total * inv;
}

namespace {

constexpr const char* kMagic = "advcat-softmax";
constexpr int kFormatVersion = 1;

}  // namespace

void SoftmaxClassifier::save(const std::filesystem::path& path, std::size_t window) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model '" + path.string() + "'");
  out << kMagic << ' ' << kFormatVersion << '\n';
  out << "window " << window << '\n';
  out << "classes " << num_classes_ << '\n';
  out << "dim " << dim_ << '\n';
  out << "cardinalities " << cardinalities_.size();
  for (std::size_t c : cardinalities_) out << ' ' << c;
  out << '\n' << "params " << params_.size() << '\n';
  char buf[40];
  for (double p : params_) {
    std::snprintf(buf, sizeof buf, "%.17g", p);
    out << buf << '\n';
  }
  if (!out) throw std::runtime_error("failed writing model '" + path.string() + "'");
}

std::pair<SoftmaxClassifier, std::size_t> SoftmaxClassifier::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model '" + path.string() + "'");
  auto fail = [&](const std::string& why) -> std::runtime_error {
    return std::runtime_error("model '" + path.string() + "': " + why);
  };
  std::string magic, key;
  int version = 0;
  in >> magic >> version;
  if (magic != kMagic) throw fail("not a model file");
  if (version != kFormatVersion) throw fail("unsupported format version " + std::to_string(version));
  std::size_t window = 0, classes = 0, dim = 0, n = 0, count = 0;
  if (!(in >> key >> window) || key != "window") throw fail("missing window");
  if (!(in >> key >> classes) || key != "classes") throw fail("missing classes");
  if (!(in >> key >> dim) || key != "dim") throw fail("missing dim");
  if (!(in >> key >> n) || key != "cardinalities") throw fail("missing cardinalities");
  std::vector<std::size_t> cards(n);
  for (auto& c : cards) {
    if (!(in >> c)) throw fail("truncated cardinalities");
  }
  SoftmaxClassifier model;
  try {
    model = SoftmaxClassifier(std::move(cards), classes, dim);
  } catch (const std::invalid_argument& e) {
    throw fail(e.what());
  }
  if (!(in >> key >> count) || key != "params") throw fail("missing params");
  if (count != model.params_.size()) throw fail("parameter count does not match the shape");
  std::string tok;
  for (double& p : model.params_) {
    if (!(in >> tok)) throw fail("truncated parameters");
    char* end = nullptr;
    p = std::strtod(tok.c_str(), &end);
    if (*end != '\0' || !std::isfinite(p)) throw fail("bad parameter '" + tok + "'");
  }
  return {std::move(model), window};
}

double accuracy(const SoftmaxClassifier& model, std::span<const Sample> samples) {
  if (samples.empty()) return 0.0;
  std::size_t hit = 0;
  for (const auto& s : samples) {
    const auto z = model.logits(s.values);
    const auto best = std::max_element(z.begin(), z.end()) - z.begin();
    if (best == s.label) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(samples.size());
}

TrainResult train_softmax(std::span<const Sample> samples, std::vector<std::size_t> cardinalities,
                          std::size_t num_classes, const TrainConfig& cfg) {
  cfg.validate();
  if (samples.empty()) throw std::invalid_argument("cannot train on an empty dataset");
  TrainResult result;
  result.model = SoftmaxClassifier(std::move(cardinalities), num_classes, cfg.dim);
  result.model.initialize(derive_seed(cfg.seed, 0));

  Rng rng(derive_seed(cfg.seed, 1));
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grad(result.model.parameters().size());
  std::vector<Sample> batch;
  auto params = result.model.parameters();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t j = start; j < stop; ++j) batch.push_back(samples[order[j]]);
      const double l = result.model.loss(batch, grad);
      if (!std::isfinite(l)) {
        throw std::runtime_error("training diverged (non-finite loss); lower the learning rate");
      }
      epoch_loss += l * static_cast<double>(batch.size());
      kernels::active().axpy(-cfg.learning_rate, grad.data(), params.data(), params.size());
    }
    result.epoch_loss.push_back(epoch_loss / static_cast<double>(samples.size()));
  }
  result.train_accuracy = accuracy(result.model, samples);
  return result;
}

TrainResult train_softmax(const Dataset& data, const TrainConfig& cfg) {
  if (data.instances.empty()) throw std::invalid_argument("cannot train on an empty dataset");
  if (data.kind != DatasetKind::classification) {
    throw std::invalid_argument("train_softmax needs a classification dataset");
  }
  const std::size_t n = data.instances.front().num_features();
  std::vector<std::size_t> cards(n, 1);
  for (const auto& inst : data.instances) {
    if (inst.num_features() != n) throw std::invalid_argument("instances differ in feature count");
    for (std::size_t i = 0; i < n; ++i) {
      for (ValueIndex v : inst.candidates[i]) {
        cards[i] = std::max(cards[i], static_cast<std::size_t>(v) + 1);
      }
    }
  }
  const auto samples = samples_of(data);
  return train_softmax(samples, std::move(cards), static_cast<std::size_t>(data.num_classes), cfg);
}

double gradient_check(const SoftmaxClassifier& model, std::span<const Sample> samples, double step) {
  SoftmaxClassifier probe = model;
  std::vector<double> analytic(probe.parameters().size());
  probe.loss(samples, analytic);
  auto params = probe.parameters();
  double worst = 0.0;
  for (std::size_t j = 0; j < params.size(); ++j) {
    const double saved = params[j];
    params[j] = saved + step;
    const double up = probe.loss(samples);
    params[j] = saved - step;
    const double down = probe.loss(samples);
    params[j] = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double rel =
        std::abs(analytic[j] - numeric) / std::max(std::abs(analytic[j]) + std::abs(numeric), 1e-6);
    worst = std::max(worst, rel);
  }
  return worst;
}

std::size_t session_vocab(const Dataset& sessions) {
  std::size_t vocab = 0;
  for (const auto& inst : sessions.instances) {
    for (const auto& c : inst.candidates) {
      for (ValueIndex v : c) vocab = std::max(vocab, static_cast<std::size_t>(v) + 1);
    }
  }
  return vocab;
}

std::vector<Sample> window_samples(const Dataset& sessions, std::size_t window, bool normal_only) {
  if (window < 2) throw std::invalid_argument("window must hold at least two keys");
  std::vector<Sample> out;
  for (const auto& inst : sessions.instances) {
    if (normal_only && inst.session_label.value_or(0) != 0) continue;
    const auto& keys = inst.values;
    if (keys.size() < window) continue;
    for (std::size_t off = 0; off + window <= keys.size(); ++off) {
      Sample s;
      s.values.assign(keys.begin() + static_cast<std::ptrdiff_t>(off),
                      keys.begin() + static_cast<std::ptrdiff_t>(off + window - 1));
      s.label = keys[off + window - 1];
      out.push_back(std::move(s));
    }
  }
  return out;
}

WindowPredictor train_window_predictor(const Dataset& sessions, std::size_t window,
                                       const TrainConfig& cfg) {
  const std::size_t vocab = session_vocab(sessions);
  if (vocab < 2) throw std::invalid_argument("session vocabulary needs at least two keys");
  const auto samples = window_samples(sessions, window, true);
  if (samples.empty()) throw std::invalid_argument("no normal session is long enough for the window");
  auto trained = train_softmax(samples, std::vector<std::size_t>(window - 1, vocab), vocab, cfg);
  return {std::move(trained.model), window};
}

namespace {

class ModelBackendImpl final : public ModelBackend {
 public:
  explicit ModelBackendImpl(SoftmaxClassifier model) : model_(std::move(model)) {}
  std::size_t num_classes() const override { return model_.num_classes(); }
  std::size_t num_features() const override { return model_.num_features(); }
  ProbabilityVector evaluate(std::span<const ValueIndex> values) const override {
    try {
      return model_.predict_proba(values);
    } catch (const std::out_of_range& e) {
      throw OracleError(e.what());
    } catch (const std::invalid_argument& e) {
      throw OracleError(e.what());
    }
  }
  std::string describe() const override { return "builtin softmax"; }

 private:
  SoftmaxClassifier model_;
};

}  // namespace

std::shared_ptr<const ModelBackend> make_model_backend(SoftmaxClassifier model) {
  return std::make_shared<ModelBackendImpl>(std::move(model));
}

std::shared_ptr<const ModelBackend> load_model_backend(const std::filesystem::path& path) {
  return make_model_backend(SoftmaxClassifier::load(path).first);
}

}  // namespace advcat
