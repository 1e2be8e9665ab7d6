// Copyright 2026 The AdvCat Authors
// SPDX-License-Identifier: Apache-2.0

#include "advcat/instance.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace advcat {

using nlohmann::json;

DataError::DataError(const std::string& what, std::size_t line)
    : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
      line_(line) {}

PerturbationSet::PerturbationSet(std::vector<Edit> edits) {
  for (const auto& e : edits) {
    if (contains(e.feature)) {
      throw std::invalid_argument("duplicate edit on feature " + std::to_string(e.feature));
    }
    set(e);
  }
}

void PerturbationSet::set(Edit e) {
  auto it = std::lower_bound(edits_.begin(), edits_.end(), e.feature,
                             [](const Edit& a, std::size_t f) { return a.feature < f; });
  if (it != edits_.end() && it->feature == e.feature) {
    it->value = e.value;
  } else {
    edits_.insert(it, e);
  }
}

bool PerturbationSet::contains(std::size_t feature) const {
  return std::binary_search(edits_.begin(), edits_.end(), Edit{feature, 0},
                            [](const Edit& a, const Edit& b) { return a.feature < b.feature; });
}

std::vector<ValueIndex> CategoricalInstance::alternatives(std::size_t i) const {
  std::vector<ValueIndex> out;
  out.reserve(candidates.at(i).size());
  for (ValueIndex v : candidates[i]) {
    if (v != values[i]) out.push_back(v);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t CategoricalInstance::num_alternatives(std::size_t i) const {
  const auto& c = candidates.at(i);
  return c.size() - static_cast<std::size_t>(std::count(c.begin(), c.end(), values[i]));
}

void CategoricalInstance::validate() const {
  if (values.empty()) throw DataError("instance '" + id + "' has no features");
  if (candidates.size() != values.size()) {
    throw DataError("instance '" + id + "': values and candidates differ in length");
  }
  if (true_label < 0) throw DataError("instance '" + id + "': negative label");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] < 0) throw DataError("instance '" + id + "': negative value index");
    std::unordered_set<ValueIndex> seen;
    for (ValueIndex c : candidates[i]) {
      if (c < 0) throw DataError("instance '" + id + "': negative candidate index");
      if (!seen.insert(c).second) {
        throw DataError("instance '" + id + "': duplicate candidate at feature " +
                        std::to_string(i));
      }
    }
    if (!seen.contains(values[i])) {
      throw DataError("instance '" + id + "': value not in candidates at feature " +
                      std::to_string(i));
    }
  }
  if (session_label && *session_label != 0 && *session_label != 1) {
    throw DataError("instance '" + id + "': session_label must be 0 or 1");
  }
}

const char* to_string(DatasetKind kind) {
  return kind == DatasetKind::classification ? "classification" : "log_sessions";
}

void Dataset::validate() const {
  if (instances.empty()) throw DataError("dataset is empty");
  if (num_classes < 2) throw DataError("dataset needs at least two classes");
  for (const auto& inst : instances) {
    inst.validate();
    if (inst.true_label >= num_classes) {
      throw DataError("instance '" + inst.id + "': label " + std::to_string(inst.true_label) +
                      " >= number of classes " + std::to_string(num_classes));
    }
    if (kind == DatasetKind::log_sessions && (!inst.session_id || !inst.session_label)) {
      throw DataError("instance '" + inst.id + "': log session record lacks session fields");
    }
  }
}

namespace {

template <typename T>
T require(const json& rec, const char* key, std::size_t line) {
  auto it = rec.find(key);
  if (it == rec.end()) throw DataError(std::string("missing field '") + key + "'", line);
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw DataError(std::string("field '") + key + "' has the wrong type", line);
  }
}

CategoricalInstance parse_record(const json& rec, std::size_t line) {
  if (!rec.is_object()) throw DataError("record is not an object", line);
  CategoricalInstance inst;
  inst.id = require<std::string>(rec, "id", line);
  inst.true_label = require<ClassIndex>(rec, "true_label", line);
  inst.values = require<std::vector<ValueIndex>>(rec, "values", line);
  inst.candidates = require<std::vector<std::vector<ValueIndex>>>(rec, "candidates", line);
  if (rec.contains("session_id")) inst.session_id = require<std::string>(rec, "session_id", line);
  if (rec.contains("session_label")) inst.session_label = require<int>(rec, "session_label", line);
  for (const auto& [key, _] : rec.items()) {
    if (key != "id" && key != "true_label" && key != "values" && key != "candidates" &&
        key != "session_id" && key != "session_label") {
      throw DataError("unknown field '" + key + "'", line);
    }
  }
  try {
    inst.validate();
  } catch (const DataError& e) {
    throw DataError(e.what(), line);
  }
  return inst;
}

}  // namespace

Dataset parse_dataset(std::istream& in, std::optional<int> num_classes) {
  Dataset data;
  std::string text;
  std::size_t line = 0;
  std::vector<std::size_t> lines;
  bool any_session = false;
  bool any_plain = false;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(text);
    } catch (const json::parse_error& e) {
      throw DataError(std::string("invalid record: ") + e.what(), line);
    }
    auto inst = parse_record(rec, line);
    (inst.session_id ? any_session : any_plain) = true;
    data.instances.push_back(std::move(inst));
    lines.push_back(line);
  }
  if (data.instances.empty()) throw DataError("dataset is empty");
  if (any_session && any_plain) throw DataError("dataset mixes session and plain records");
  data.kind = any_session ? DatasetKind::log_sessions : DatasetKind::classification;

  ClassIndex max_label = 0;
  for (const auto& inst : data.instances) max_label = std::max(max_label, inst.true_label);
  data.num_classes = num_classes.value_or(std::max(2, max_label + 1));
  for (std::size_t k = 0; k < data.instances.size(); ++k) {
    if (data.instances[k].true_label >= data.num_classes) {
      throw DataError("label " + std::to_string(data.instances[k].true_label) +
                          " >= number of classes " + std::to_string(data.num_classes),
                      lines[k]);
    }
  }
  data.validate();
  return data;
}

Dataset load_dataset(const std::filesystem::path& path, std::optional<int> num_classes) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset '" + path.string() + "'");
  return parse_dataset(in, num_classes);
}

void write_dataset(const Dataset& data, std::ostream& out) {
  for (const auto& inst : data.instances) {
    json rec;
    rec["id"] = inst.id;
    rec["true_label"] = inst.true_label;
    rec["values"] = inst.values;
    rec["candidates"] = inst.candidates;
    if (inst.session_id) rec["session_id"] = *inst.session_id;
    if (inst.session_label) rec["session_label"] = *inst.session_label;
    out << rec.dump() << '\n';
  }
}

void write_dataset(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write dataset '" + path.string() + "'");
  write_dataset(data, out);
}

std::string dataset_digest(const Dataset& data) {
  std::ostringstream os;
  write_dataset(data, os);
  os << "num_classes=" << data.num_classes;
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : os.str()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<ValueIndex> perturbed_values(const CategoricalInstance& instance,
                                         const PerturbationSet& p) {
  std::vector<ValueIndex> v = instance.values;
  for (const auto& e : p) {
    if (e.feature >= v.size()) {
      throw std::invalid_argument("edit references feature " + std::to_string(e.feature) +
                                  " of a " + std::to_string(v.size()) + "-feature instance");
    }
    v[e.feature] = e.value;
  }
  return v;
}

CategoricalInstance apply_perturbation(const CategoricalInstance& instance,
                                       const PerturbationSet& p) {
  for (const auto& e : p) {
    if (e.feature >= instance.num_features()) {
      throw std::invalid_argument("edit references out-of-range feature " +
                                  std::to_string(e.feature));
    }
    const auto& cands = instance.candidates[e.feature];
    if (std::find(cands.begin(), cands.end(), e.value) == cands.end()) {
      throw std::invalid_argument("inadmissible value " + std::to_string(e.value) +
                                  " for feature " + std::to_string(e.feature));
    }
    if (e.value == instance.values[e.feature]) {
      throw std::invalid_argument("edit on feature " + std::to_string(e.feature) +
                                  " does not change its value");
    }
  }
  CategoricalInstance out = instance;
  out.values = perturbed_values(instance, p);
  return out;
}

PerturbationSet diff(const CategoricalInstance& original, const CategoricalInstance& perturbed) {
  if (original.num_features() != perturbed.num_features() ||
      original.candidates != perturbed.candidates) {
    throw std::invalid_argument("diff: instances have different shapes");
  }
  PerturbationSet p;
  for (std::size_t i = 0; i < original.num_features(); ++i) {
    if (original.values[i] != perturbed.values[i]) p.set({i, perturbed.values[i]});
  }
  return p;
}

}  // namespace advcat
