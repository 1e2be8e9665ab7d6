// Copyright 2026 The AdvCat Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <numeric>

#include "advcat/models.hpp"
#include "advcat/rng.hpp"

namespace advcat {

ClassIndex ClassificationRule::label(std::span<const ValueIndex> values) const {
  ClassIndex best = 0;
  double best_score = 0.0;
  for (std::size_t k = 0; k < classes; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += weight(k, i, values[i]);
    if (k == 0 || s > best_score) {
      best = static_cast<ClassIndex>(k);
      best_score = s;
    }
  }
  return best;
}

ClassificationRule hidden_rule(std::uint64_t seed, std::size_t n, std::size_t m,
                               std::size_t classes) {
  if (n == 0 || m < 2 || classes < 2) {
    throw std::invalid_argument("synthetic rule needs n >= 1, m >= 2, K >= 2");
  }
  ClassificationRule rule{n, m, classes, std::vector<double>(classes * n * m)};
  Rng rng(derive_seed(seed, 0));
  for (double& w : rule.weights) w = rng.normal();
  return rule;
}

Dataset synth_classification(std::uint64_t seed, std::size_t n, std::size_t m,
                             std::size_t classes, std::size_t count, double label_noise) {
  if (count == 0) throw std::invalid_argument("synthetic dataset needs at least one instance");
  if (label_noise < 0.0 || label_noise > 1.0) throw std::invalid_argument("label noise must be in [0, 1]");
  const auto rule = hidden_rule(seed, n, m, classes);
  Rng rng(derive_seed(seed, 1));
  std::vector<ValueIndex> all(m);
  std::iota(all.begin(), all.end(), 0);

  Dataset data;
  data.num_classes = static_cast<int>(classes);
  data.kind = DatasetKind::classification;
  data.instances.reserve(count);
  for (std::size_t c = 0; c < count; ++c) {
    CategoricalInstance inst;
    inst.id = "c" + std::to_string(c);
    inst.values.resize(n);
    for (auto& v : inst.values) v = static_cast<ValueIndex>(rng.index(m));
    inst.candidates.assign(n, all);
    inst.true_label = rule.label(inst.values);
    if (rng.bernoulli(label_noise)) {
      const auto shift = 1 + rng.index(classes - 1);
      inst.true_label = static_cast<ClassIndex>((static_cast<std::size_t>(inst.true_label) + shift) % classes);
    }
    data.instances.push_back(std::move(inst));
  }
  return data;
}

LogChains log_chains(std::uint64_t seed, std::size_t vocab) {
  if (vocab < 4) throw std::invalid_argument("log chains need a vocabulary of at least 4 keys");
  Rng rng(derive_seed(seed, 10));
  std::vector<std::size_t> primary(vocab);
  std::iota(primary.begin(), primary.end(), 0);
  rng.shuffle(std::span<std::size_t>(primary));

  LogChains chains;
  chains.normal = {vocab, std::vector<double>(vocab * vocab, 0.0)};
  chains.abnormal = {vocab, std::vector<double>(vocab * vocab, 0.0)};
  const double rest = 0.05 / static_cast<double>(vocab - 2);
  for (std::size_t from = 0; from < vocab; ++from) {
    const std::size_t first = primary[from];
    std::size_t second;
    do {
      second = rng.index(vocab);
    } while (second == first);
    std::size_t odd;
    do {
      odd = rng.index(vocab);
    } while (odd == first || odd == second);
    for (std::size_t to = 0; to < vocab; ++to) {
      chains.normal.transition[from * vocab + to] = to == first ? 0.75 : to == second ? 0.20 : rest;
    }
    chains.abnormal.transition[from * vocab + odd] = 1.0;
  }
  return chains;
}

namespace {

std::size_t draw(Rng& rng, const MarkovChain& chain, std::size_t from) {
  double u = rng.uniform();
  const double* row = chain.transition.data() + from * chain.vocab;
  for (std::size_t to = 0; to + 1 < chain.vocab; ++to) {
    if (u < row[to]) return to;
    u -= row[to];
  }
  // Rounding leftovers land on the last key with non-zero mass.
  for (std::size_t to = chain.vocab; to-- > 0;) {
    if (row[to] > 0.0) return to;
  }
  return chain.vocab - 1;
}

}  // namespace

Dataset synth_log_sessions(std::uint64_t seed, std::size_t vocab, std::size_t count,
                           double abnormal_fraction) {
  if (count == 0) throw std::invalid_argument("synthetic dataset needs at least one session");
  if (abnormal_fraction < 0.0 || abnormal_fraction > 1.0) {
    throw std::invalid_argument("abnormal fraction must be in [0, 1]");
  }
  const auto chains = log_chains(seed, vocab);
  Rng rng(derive_seed(seed, 11));
  std::vector<ValueIndex> all(vocab);
  std::iota(all.begin(), all.end(), 0);

  Dataset data;
  data.kind = DatasetKind::log_sessions;
  data.num_classes = 2;
  const auto abnormal_count = static_cast<std::size_t>(abnormal_fraction * static_cast<double>(count) + 0.5);
  std::vector<bool> abnormal(count, false);
  for (auto idx : rng.sample([&] {
         std::vector<std::size_t> v(count);
         std::iota(v.begin(), v.end(), 0);
         return v;
       }(), abnormal_count)) {
    abnormal[idx] = true;
  }

  for (std::size_t s = 0; s < count; ++s) {
    const std::size_t len = 50 + rng.index(151);
    std::size_t seg_start = len, seg_len = 0;
    if (abnormal[s]) {
      seg_len = 5 + rng.index(11);
      seg_start = 1 + rng.index(len - seg_len);
    }
    std::vector<ValueIndex> keys(len);
    keys[0] = static_cast<ValueIndex>(rng.index(vocab));
    for (std::size_t t = 1; t < len; ++t) {
      const bool in_segment = t >= seg_start && t < seg_start + seg_len;
      const auto& chain = in_segment ? chains.abnormal : chains.normal;
      keys[t] = static_cast<ValueIndex>(draw(rng, chain, static_cast<std::size_t>(keys[t - 1])));
    }
    CategoricalInstance inst;
    inst.id = "s" + std::to_string(s);
    inst.session_id = inst.id;
    inst.session_label = abnormal[s] ? 1 : 0;
    inst.true_label = *inst.session_label;
    inst.values = std::move(keys);
    inst.candidates.assign(len, all);
    data.instances.push_back(std::move(inst));
  }
  return data;
}

}  // namespace advcat
