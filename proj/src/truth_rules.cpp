// Copyright 2026 The AdvCat Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <sstream>

#include "advcat/oracle.hpp"
#include "advcat/rng.hpp"

namespace advcat {

namespace {

class ParityRule final : public ModelBackend {
 public:
  std::size_t num_classes() const override { return 2; }
  std::size_t num_features() const override { return 0; }
  ProbabilityVector evaluate(std::span<const ValueIndex> values) const override {
    long long sum = 0;
    for (auto v : values) sum += v;
    return sum % 2 == 0 ? ProbabilityVector{1.0, 0.0} : ProbabilityVector{0.0, 1.0};
  }
  std::string describe() const override { return "truth:parity"; }
};

class SuccessorRule final : public ModelBackend {
 public:
  explicit SuccessorRule(std::size_t vocab) : vocab_(vocab) {
    if (vocab < 2) throw std::invalid_argument("successor rule needs a vocabulary of at least 2");
  }
  std::size_t num_classes() const override { return vocab_; }
  std::size_t num_features() const override { return 0; }
  ProbabilityVector evaluate(std::span<const ValueIndex> values) const override {
    if (values.empty()) throw OracleError("successor rule needs at least one key");
    const auto last = static_cast<std::size_t>(values.back());
    if (last >= vocab_) throw OracleError("key out of vocabulary");
    const std::size_t next = (last + 1) % vocab_;
    ProbabilityVector p(vocab_);
    double z = 0.0;
    for (std::size_t k = 0; k < vocab_; ++k) {
      const std::size_t d = (k + vocab_ - next) % vocab_;
      p[k] = std::exp(-static_cast<double>(d));
      z += p[k];
    }
    for (double& x : p) x /= z;
    return p;
  }
  std::string describe() const override { return "truth:successor:" + std::to_string(vocab_); }

 private:
  std::size_t vocab_;
};

class RandomLogitRule final : public ModelBackend {
 public:
  RandomLogitRule(std::uint64_t seed, std::size_t classes, std::size_t features,
                  std::size_t cardinality)
      : seed_(seed), classes_(classes), features_(features), card_(cardinality) {
    if (classes < 2 || features < 1 || cardinality < 1) {
      throw std::invalid_argument("random rule needs K>=2, N>=1, C>=1");
    }
    Rng rng(seed);
    unary_.resize(classes * features * cardinality);
    for (double& w : unary_) w = 1.5 * rng.normal();
    const std::size_t pairs = features * (features - 1) / 2;
    pair_.resize(classes * pairs * cardinality * cardinality);
    for (double& w : pair_) w = 0.75 * rng.normal();
  }

  std::size_t num_classes() const override { return classes_; }
  std::size_t num_features() const override { return features_; }

  ProbabilityVector evaluate(std::span<const ValueIndex> values) const override {
    for (auto v : values) {
      if (v < 0 || static_cast<std::size_t>(v) >= card_) throw OracleError("value out of range");
    }
    const std::size_t pairs = features_ * (features_ - 1) / 2;
    std::vector<double> logits(classes_, 0.0);
    for (std::size_t k = 0; k < classes_; ++k) {
      double z = 0.0;
      for (std::size_t i = 0; i < features_; ++i) {
        z += unary_[(k * features_ + i) * card_ + static_cast<std::size_t>(values[i])];
      }
      std::size_t pi = 0;
      for (std::size_t i = 0; i < features_; ++i) {
        for (std::size_t j = i + 1; j < features_; ++j, ++pi) {
          z += pair_[((k * pairs + pi) * card_ + static_cast<std::size_t>(values[i])) * card_ +
                     static_cast<std::size_t>(values[j])];
        }
      }
      logits[k] = z;
    }
    const double m = *std::max_element(logits.begin(), logits.end());
    double s = 0.0;
    for (double& z : logits) {
      z = std::exp(z - m);
      s += z;
    }
    for (double& z : logits) z /= s;
    return logits;
  }

  std::string describe() const override {
    std::ostringstream os;
    os << "truth:random:" << seed_ << ':' << classes_ << ':' << features_ << ':' << card_;
    return os.str();
  }

 private:
  std::uint64_t seed_;
  std::size_t classes_, features_, card_;
  std::vector<double> unary_;
  std::vector<double> pair_;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) parts.push_back(cur);
  return parts;
}

std::uint64_t parse_uint(const std::string& s, const std::string& rule) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty()) throw std::invalid_argument("bad number in truth rule '" + rule + "'");
  return v;
}

}  // namespace

std::shared_ptr<const ModelBackend> make_truth_backend(const std::string& rule) {
  const auto parts = split(rule, ':');
  if (parts.empty()) throw std::invalid_argument("empty truth rule");
  if (parts[0] == "parity" && parts.size() == 1) return std::make_shared<ParityRule>();
  if (parts[0] == "successor" && parts.size() == 2) {
    return std::make_shared<SuccessorRule>(parse_uint(parts[1], rule));
  }
  if (parts[0] == "random" && parts.size() == 5) {
    return std::make_shared<RandomLogitRule>(parse_uint(parts[1], rule), parse_uint(parts[2], rule),
                                             parse_uint(parts[3], rule), parse_uint(parts[4], rule));
  }
  throw std::invalid_argument("unknown truth rule '" + rule + "'");
}

}  // namespace advcat
