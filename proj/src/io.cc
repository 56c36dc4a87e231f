// Copyright 2026 The SEHM Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sehm/io.h"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace sehm {
namespace {

using json = nlohmann::ordered_json;

constexpr char kMagic[4] = {'S', 'E', 'H', 'M'};
constexpr uint32_t kFormatVersion = 1;

// Reads the keys of one config section and rejects any it did not ask for.
class Section {
 public:
  Section(const json& root, std::string name) : name_(std::move(name)) {
    if (root.contains(name_)) {
      node_ = &root.at(name_);
      if (!node_->is_object()) throw SehmError("config: section '" + name_ + "' must be an object");
    }
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (node_ == nullptr || !node_->contains(key)) return;
    try {
      out = node_->at(key).get<T>();
    } catch (const json::exception& e) {
      throw SehmError("config: " + name_ + "." + key + ": " + e.what());
    }
  }

  // Enum stored by name.
  template <typename T, typename Parse>
  void read_enum(const char* key, T& out, Parse parse) {
    std::string text;
    bool present = node_ != nullptr && node_->contains(key);
    read(key, text);
    if (!present) return;
    try {
      out = parse(text);
    } catch (const SehmError& e) {
      throw SehmError("config: " + name_ + "." + key + ": " + e.what());
    }
  }

  const json* raw(const char* key) {
    seen_.insert(key);
    return node_ != nullptr && node_->contains(key) ? &node_->at(key) : nullptr;
  }

  void finish() const {
    if (node_ == nullptr) return;
    for (const auto& item : node_->items()) {
      if (!seen_.count(item.key())) throw SehmError("config: unknown key '" + name_ + "." + item.key() + "'");
    }
  }

 private:
  std::string name_;
  const json* node_ = nullptr;
  std::set<std::string> seen_;
};

GradientMatch parse_match(const std::string& s) {
  if (s == "identity") return GradientMatch::kIdentity;
  if (s == "all_ones") return GradientMatch::kAllOnes;
  throw SehmError("unknown gradient match '" + s + "' (identity, all_ones)");
}

const char* match_name(GradientMatch m) { return m == GradientMatch::kIdentity ? "identity" : "all_ones"; }

json motifs_json(const std::vector<Motif>& motifs) {
  json out = json::array();
  for (const Motif& m : motifs) {
    json rows = json::array();
    const size_t w = m.variables.size();
    for (int64_t k = 0; k < m.length(); ++k) {
      rows.push_back(std::vector<double>(m.pattern.begin() + static_cast<int64_t>(k * w),
                                         m.pattern.begin() + static_cast<int64_t>((k + 1) * w)));
    }
    out.push_back({{"variables", m.variables}, {"pattern", rows}});
  }
  return out;
}

std::vector<Motif> motifs_from(const json& j) {
  if (!j.is_array()) throw SehmError("config: data.motifs must be an array");
  std::vector<Motif> out;
  for (const json& item : j) {
    if (!item.is_object() || !item.contains("variables") || !item.contains("pattern") || item.size() != 2) {
      throw SehmError("config: each motif needs exactly 'variables' and 'pattern'");
    }
    Motif m;
    try {
      m.variables = item.at("variables").get<std::vector<int64_t>>();
      for (const json& row : item.at("pattern")) {
        const auto values = row.get<std::vector<double>>();
        if (values.size() != m.variables.size()) {
          throw SehmError("config: motif pattern rows must have one value per variable");
        }
        m.pattern.insert(m.pattern.end(), values.begin(), values.end());
      }
    } catch (const json::exception& e) {
      throw SehmError(std::string("config: data.motifs: ") + e.what());
    }
    out.push_back(std::move(m));
  }
  return out;
}

json to_json(const ExperimentConfig& c) {
  const SyntheticSpec& d = c.data;
  const ModelConfig& m = c.model;
  const TrainConfig& t = c.train;
  const EvaluateConfig& e = c.evaluate;
  json j;
  j["data"] = {{"samples", d.samples},
               {"length", d.length},
               {"variables", d.variables},
               {"gaps_per_variable", d.gaps_per_variable},
               {"gap_min", d.gap_min},
               {"gap_max", d.gap_max},
               {"joint_gaps", d.joint_gaps},
               {"joint_gap_min", d.joint_gap_min},
               {"joint_gap_max", d.joint_gap_max},
               {"motifs", motifs_json(d.motifs)},
               {"region_begin", d.region_begin},
               {"region_end", d.region_end},
               {"decoy_probability", d.decoy_probability},
               {"background_amplitude", d.background_amplitude},
               {"noise", d.noise},
               {"positive_fraction", d.positive_fraction},
               {"seed", d.seed}};
  j["model"] = {{"neighbor", m.neighbor}, {"heads", m.heads},         {"features", m.features},
                {"output_dim", m.output_dim}, {"hidden", m.hidden},   {"cell", cell_name(m.cell)},
                {"locality", m.locality},   {"kernelized", m.kernelized}, {"attention", m.attention},
                {"seed", m.seed}};
  j["train"] = {{"batch_size", t.batch_size},
                {"learning_rate", t.learning_rate},
                {"epochs", t.epochs},
                {"zero_encoding", t.zero_encoding},
                {"test_fraction", t.test_fraction},
                {"validation_fraction", t.validation_fraction},
                {"seed", t.seed},
                {"split_seed", t.split_seed},
                {"explainer", explainer_mode_name(t.explainer)},
                {"theta_depth", t.theta_depth},
                {"theta_activation", activation_name(t.theta_activation)},
                {"theta_learning_rate", t.theta_learning_rate},
                {"perturbation_radius", t.perturbation_radius},
                {"perturbations", t.perturbations},
                {"centers_per_batch", t.centers_per_batch},
                {"posthoc_epochs", t.posthoc_epochs},
                {"lambda", t.objective.lambda},
                {"lambda_r", t.objective.lambda_r},
                {"gradient_match", match_name(t.objective.match)},
                {"power_iters", t.objective.power_iters},
                {"power_tol", t.objective.power_tol}};
  j["evaluate"] = {{"aopc_cutoffs", e.aopc_cutoffs},         {"aopc_samples", e.aopc_samples},
                   {"random_rankings", e.random_rankings},   {"seed", e.seed},
                   {"lipschitz_radius", e.lipschitz_radius}, {"lipschitz_centers", e.lipschitz_centers},
                   {"lipschitz_points", e.lipschitz_points}, {"batch_size", e.batch_size}};
  j["benchmark"] = {{"neighbors", c.benchmark.neighbors}, {"repetitions", c.benchmark.repetitions}};
  j["ablate"] = {{"seeds", c.ablate.seeds},
                 {"inference_runs", c.ablate.inference_runs},
                 {"inference_batch", c.ablate.inference_batch},
                 {"workers", c.ablate.workers}};
  return j;
}

ExperimentConfig from_json(const json& j) {
  if (!j.is_object()) throw SehmError("config: top level must be an object");
  static const std::set<std::string> sections = {"data", "model", "train", "evaluate", "benchmark", "ablate"};
  for (const auto& item : j.items()) {
    if (!sections.count(item.key())) throw SehmError("config: unknown section '" + item.key() + "'");
  }
  ExperimentConfig c;
  {
    Section s(j, "data");
    SyntheticSpec& d = c.data;
    s.read("samples", d.samples);
    s.read("length", d.length);
    s.read("variables", d.variables);
    s.read("gaps_per_variable", d.gaps_per_variable);
    s.read("gap_min", d.gap_min);
    s.read("gap_max", d.gap_max);
    s.read("joint_gaps", d.joint_gaps);
    s.read("joint_gap_min", d.joint_gap_min);
    s.read("joint_gap_max", d.joint_gap_max);
    if (const json* motifs = s.raw("motifs")) d.motifs = motifs_from(*motifs);
    s.read("region_begin", d.region_begin);
    s.read("region_end", d.region_end);
    s.read("decoy_probability", d.decoy_probability);
    s.read("background_amplitude", d.background_amplitude);
    s.read("noise", d.noise);
    s.read("positive_fraction", d.positive_fraction);
    s.read("seed", d.seed);
    s.finish();
  }
  {
    Section s(j, "model");
    ModelConfig& m = c.model;
    s.read("neighbor", m.neighbor);
    s.read("heads", m.heads);
    s.read("features", m.features);
    s.read("output_dim", m.output_dim);
    s.read("hidden", m.hidden);
    s.read_enum("cell", m.cell, parse_cell);
    s.read("locality", m.locality);
    s.read("kernelized", m.kernelized);
    s.read("attention", m.attention);
    s.read("seed", m.seed);
    s.finish();
  }
  {
    Section s(j, "train");
    TrainConfig& t = c.train;
    s.read("batch_size", t.batch_size);
    s.read("learning_rate", t.learning_rate);
    s.read("epochs", t.epochs);
    s.read("zero_encoding", t.zero_encoding);
    s.read("test_fraction", t.test_fraction);
    s.read("validation_fraction", t.validation_fraction);
    s.read("seed", t.seed);
    s.read("split_seed", t.split_seed);
    s.read_enum("explainer", t.explainer, parse_explainer_mode);
    s.read("theta_depth", t.theta_depth);
    s.read_enum("theta_activation", t.theta_activation, parse_activation);
    s.read("theta_learning_rate", t.theta_learning_rate);
    s.read("perturbation_radius", t.perturbation_radius);
    s.read("perturbations", t.perturbations);
    s.read("centers_per_batch", t.centers_per_batch);
    s.read("posthoc_epochs", t.posthoc_epochs);
    s.read("lambda", t.objective.lambda);
    s.read("lambda_r", t.objective.lambda_r);
    s.read_enum("gradient_match", t.objective.match, parse_match);
    s.read("power_iters", t.objective.power_iters);
    s.read("power_tol", t.objective.power_tol);
    s.finish();
  }
  {
    Section s(j, "evaluate");
    EvaluateConfig& e = c.evaluate;
    s.read("aopc_cutoffs", e.aopc_cutoffs);
    s.read("aopc_samples", e.aopc_samples);
    s.read("random_rankings", e.random_rankings);
    s.read("seed", e.seed);
    s.read("lipschitz_radius", e.lipschitz_radius);
    s.read("lipschitz_centers", e.lipschitz_centers);
    s.read("lipschitz_points", e.lipschitz_points);
    s.read("batch_size", e.batch_size);
    s.finish();
  }
  {
    Section s(j, "benchmark");
    s.read("neighbors", c.benchmark.neighbors);
    s.read("repetitions", c.benchmark.repetitions);
    s.finish();
  }
  {
    Section s(j, "ablate");
    s.read("seeds", c.ablate.seeds);
    s.read("inference_runs", c.ablate.inference_runs);
    s.read("inference_batch", c.ablate.inference_batch);
    s.read("workers", c.ablate.workers);
    s.finish();
  }
  c.model.length = c.data.length;
  c.model.variables = c.data.variables;
  return c;
}

void apply_override(json& root, const std::string& assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw SehmError("override '" + assignment + "' is not of the form section.key=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json* node = &root;
  size_t start = 0;
  while (true) {
    const size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw SehmError("override '" + assignment + "' has an empty key");
    if (!node->is_object()) throw SehmError("override '" + assignment + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

// Little-endian encoding independent of the host.
void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class ByteReader {
 public:
  ByteReader(const std::string& bytes, std::string path) : bytes_(bytes), path_(std::move(path)) {}
  uint64_t u(int width) {
    need(static_cast<size_t>(width));
    uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += static_cast<size_t>(width);
    return v;
  }
  std::string str(size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }
  void need(size_t n) const {
    if (bytes_.size() - pos_ < n) throw SehmError(path_ + ": truncated tensor file");
  }

 private:
  const std::string& bytes_;
  std::string path_;
  size_t pos_ = 0;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json model_config_json(const ModelConfig& m) {
  return {{"length", m.length},     {"variables", m.variables},   {"neighbor", m.neighbor},
          {"heads", m.heads},       {"features", m.features},     {"output_dim", m.output_dim},
          {"hidden", m.hidden},     {"cell", cell_name(m.cell)},  {"locality", m.locality},
          {"kernelized", m.kernelized}, {"attention", m.attention}, {"seed", m.seed}};
}

ModelConfig model_config_from(const json& j) {
  ModelConfig m;
  try {
    m.length = j.at("length").get<int64_t>();
    m.variables = j.at("variables").get<int64_t>();
    m.neighbor = j.at("neighbor").get<int64_t>();
    m.heads = j.at("heads").get<int64_t>();
    m.features = j.at("features").get<int64_t>();
    m.output_dim = j.at("output_dim").get<int64_t>();
    m.hidden = j.at("hidden").get<int64_t>();
    m.cell = parse_cell(j.at("cell").get<std::string>());
    m.locality = j.at("locality").get<bool>();
    m.kernelized = j.at("kernelized").get<bool>();
    m.attention = j.at("attention").get<bool>();
    m.seed = j.at("seed").get<uint64_t>();
  } catch (const json::exception& e) {
    throw SehmError(std::string("model header: ") + e.what());
  }
  return m;
}

}  // namespace

void ExperimentConfig::validate() const {
  data.validate();
  model.validate();
  train.validate();
  evaluate.validate();
  benchmark.validate();
  ablate.validate();
  if (model.length != data.length || model.variables != data.variables) {
    throw SehmError("config: model shape does not follow the data section");
  }
}

ExperimentConfig parse_config(const std::string& text, const std::vector<std::string>& overrides) {
  json root = json::parse(text, nullptr, false, true);
  if (root.is_discarded()) throw SehmError("config: not valid JSON");
  if (root.is_null()) root = json::object();
  for (const std::string& o : overrides) apply_override(root, o);
  ExperimentConfig c = from_json(root);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  try {
    return parse_config(read_text(path), overrides);
  } catch (const SehmError& e) {
    throw SehmError(path + ": " + e.what());
  }
}

std::string config_json(const ExperimentConfig& config) { return to_json(config).dump(2) + "\n"; }

void write_dataset(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw SehmError("cannot write " + path);
  const int64_t t_len = data.length(), d = data.variables();
  for (int64_t i = 0; i < data.size(); ++i) {
    std::string line = "{\"id\":" + json(data.ids.at(static_cast<size_t>(i))).dump() +
                       ",\"label\":" + (data.labels[static_cast<size_t>(i)] == 1.0 ? "1" : "0") + ",\"values\":[";
    for (int64_t t = 0; t < t_len; ++t) {
      line += t == 0 ? "[" : ",[";
      for (int64_t v = 0; v < d; ++v) {
        if (v > 0) line += ",";
        const size_t k = static_cast<size_t>((i * t_len + t) * d + v);
        line += data.mask[k] == 1.0 ? fmt(data.values[k]) : "null";
      }
      line += "]";
    }
    line += "]}\n";
    out << line;
  }
  if (!out) throw SehmError("error writing " + path);
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SehmError("cannot read " + path);
  std::vector<std::string> ids;
  std::vector<double> values, mask, labels;
  int64_t t_len = -1, d = -1;
  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(line_no) + ": ";
    const json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object()) throw SehmError(where + "not a JSON object");
    if (!rec.contains("id") || !rec.contains("label") || !rec.contains("values")) {
      throw SehmError(where + "record needs id, label and values");
    }
    const json& grid = rec.at("values");
    if (!grid.is_array() || grid.empty()) throw SehmError(where + "values must be a non-empty T x D array");
    if (t_len < 0) {
      t_len = static_cast<int64_t>(grid.size());
      if (!grid.front().is_array() || grid.front().empty()) throw SehmError(where + "values rows must be arrays");
      d = static_cast<int64_t>(grid.front().size());
    }
    if (static_cast<int64_t>(grid.size()) != t_len) throw SehmError(where + "series length differs from earlier records");
    for (const json& row : grid) {
      if (!row.is_array() || static_cast<int64_t>(row.size()) != d) {
        throw SehmError(where + "every row must hold " + std::to_string(d) + " entries");
      }
      for (const json& v : row) {
        if (v.is_null()) {
          values.push_back(0.0);
          mask.push_back(0.0);
        } else if (v.is_number()) {
          values.push_back(v.get<double>());
          mask.push_back(1.0);
        } else {
          throw SehmError(where + "values must be numbers or null");
        }
      }
    }
    const json& label = rec.at("label");
    if (!label.is_number() || (label.get<double>() != 0.0 && label.get<double>() != 1.0)) {
      throw SehmError(where + "label must be 0 or 1");
    }
    labels.push_back(label.get<double>());
    ids.push_back(rec.at("id").is_string() ? rec.at("id").get<std::string>() : rec.at("id").dump());
  }
  if (labels.empty()) throw SehmError(path + ": no records");
  const auto n = static_cast<int64_t>(labels.size());
  Dataset ds;
  ds.ids = std::move(ids);
  ds.variable_names = default_variable_names(d);
  ds.values = Tensor({n, t_len, d}, std::move(values));
  ds.mask = Tensor({n, t_len, d}, std::move(mask));
  ds.labels = Tensor({n}, std::move(labels));
  return ds;
}

void write_tensors(const std::string& path, const std::string& header_json, const ParameterSet& tensors) {
  std::string out(kMagic, 4);
  put_u32(out, kFormatVersion);
  put_u64(out, header_json.size());
  out += header_json;
  put_u64(out, tensors.size());
  for (size_t i = 0; i < tensors.size(); ++i) {
    const std::string& name = tensors.name(i);
    const Tensor& t = tensors[i];
    put_u32(out, static_cast<uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<uint32_t>(t.rank()));
    for (int64_t dim : t.shape()) put_u64(out, static_cast<uint64_t>(dim));
    for (double v : t.data()) put_u64(out, std::bit_cast<uint64_t>(v));
  }
  write_text(path, out);
}

std::pair<std::string, ParameterSet> read_tensors(const std::string& path) {
  const std::string bytes = read_text(path);
  ByteReader r(bytes, path);
  if (r.str(4) != std::string(kMagic, 4)) throw SehmError(path + ": not a model file (bad magic)");
  const uint64_t version = r.u(4);
  if (version != kFormatVersion) throw SehmError(path + ": unsupported format version " + std::to_string(version));
  const uint64_t header_len = r.u(8);
  std::string header = r.str(header_len);
  const uint64_t count = r.u(8);
  ParameterSet set;
  for (uint64_t i = 0; i < count; ++i) {
    const std::string name = r.str(r.u(4));
    const uint64_t rank = r.u(4);
    if (rank > 8) throw SehmError(path + ": tensor '" + name + "' has implausible rank");
    Shape shape;
    for (uint64_t k = 0; k < rank; ++k) shape.push_back(static_cast<int64_t>(r.u(8)));
    const int64_t n = shape_numel(shape);
    r.need(static_cast<size_t>(n) * 8);
    std::vector<double> data(static_cast<size_t>(n));
    for (double& v : data) v = std::bit_cast<double>(r.u(8));
    set.add(name, Tensor(shape, std::move(data)));
  }
  if (!r.done()) throw SehmError(path + ": trailing bytes after the last tensor");
  return {std::move(header), std::move(set)};
}

void save_bundle(const std::string& path, const SehmModel& model, const ThetaNetwork* theta) {
  json header = {{"model", model_config_json(model.config())}};
  ParameterSet all = model.params();
  if (theta != nullptr) {
    header["theta"] = {{"depth", theta->depth()}, {"activation", activation_name(theta->activation())}};
    theta->add_to(all, "theta");
  } else {
    header["theta"] = nullptr;
  }
  write_tensors(path, header.dump(), all);
}

ModelBundle load_bundle(const std::string& path) {
  auto [header_text, all] = read_tensors(path);
  const json header = json::parse(header_text, nullptr, false);
  if (header.is_discarded() || !header.contains("model")) throw SehmError(path + ": malformed header");
  const ModelConfig config = model_config_from(header.at("model"));
  ParameterSet model_params, theta_params;
  for (size_t i = 0; i < all.size(); ++i) {
    (all.name(i).rfind("theta.", 0) == 0 ? theta_params : model_params).add(all.name(i), all[i]);
  }
  ModelBundle bundle{SehmModel(config, std::move(model_params)), std::nullopt};
  if (header.contains("theta") && !header.at("theta").is_null()) {
    const Activation act = parse_activation(header.at("theta").at("activation").get<std::string>());
    bundle.theta = ThetaNetwork::from(theta_params, "theta", act);
  } else if (theta_params.size() > 0) {
    throw SehmError(path + ": theta tensors present without a theta header");
  }
  return bundle;
}

void write_explanation_csv(const std::string& path, const Explanation& e, const Tensor& raw,
                           const std::vector<std::string>& variable_names) {
  const int64_t t_len = e.beta.dim(0), d = e.beta.dim(1);
  if (raw.shape() != e.beta.shape() || static_cast<int64_t>(variable_names.size()) != d) {
    throw SehmError("explanation table: raw series and names must match the contributions");
  }
  std::string out = "time,variable,value,beta,missing\n";
  for (int64_t t = 0; t < t_len; ++t) {
    for (int64_t v = 0; v < d; ++v) {
      const size_t k = static_cast<size_t>(t * d + v);
      const bool missing = e.missing[k] == 1.0;
      out += std::to_string(t) + "," + variable_names[static_cast<size_t>(v)] + "," +
             (missing ? "0" : fmt(raw[k])) + "," + fmt(e.beta[k]) + "," + (missing ? "1" : "0") + "\n";
    }
  }
  write_text(path, out);
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::string out = "epoch,train_loss,validation_loss,validation_auroc,validation_auprc,explanation_objective\n";
  for (const EpochRecord& r : history) {
    out += std::to_string(r.epoch) + "," + fmt(r.train_loss) + "," + fmt(r.validation_loss) + "," +
           fmt(r.validation_auroc) + "," + fmt(r.validation_auprc) + "," + fmt(r.explanation_objective) + "\n";
  }
  return out;
}

std::string timing_csv(const std::vector<EpochRecord>& history) {
  std::string out = "epoch,milliseconds\n";
  for (const EpochRecord& r : history) out += std::to_string(r.epoch) + "," + fmt(r.milliseconds) + "\n";
  return out;
}

std::string report_json(const MetricsReport& report) {
  json j = {{"auroc", report.auroc}, {"auprc", report.auprc}};
  j["local_accuracy"] = report.local_accuracy ? json(*report.local_accuracy) : json(nullptr);
  if (report.aopc) {
    json random = json::array();
    std::vector<double> random_mean(report.aopc->cutoffs.size(), 0.0);
    for (const auto& curve : report.aopc->random) {
      random.push_back(curve);
      for (size_t c = 0; c < curve.size(); ++c) random_mean[c] += curve[c] / static_cast<double>(report.aopc->random.size());
    }
    j["aopc"] = {{"cutoffs", report.aopc->cutoffs},
                 {"beta", report.aopc->beta},
                 {"random_mean", random_mean},
                 {"random", random}};
  } else {
    j["aopc"] = nullptr;
  }
  j["estimated_lipschitz"] = report.estimated_lipschitz ? json(*report.estimated_lipschitz) : json(nullptr);
  j["lipschitz_certificate"] = report.lipschitz_certificate ? json(*report.lipschitz_certificate) : json(nullptr);
  j["epoch_milliseconds"] = report.epoch_milliseconds;
  return j.dump(2) + "\n";
}

std::string benchmark_csv(const std::vector<TimingRow>& rows) {
  std::string out = "neighbor,median_ms,mean_ms,stddev_ms,repetitions\n";
  for (const TimingRow& r : rows) {
    out += std::to_string(r.neighbor) + "," + fmt(r.median_ms) + "," + fmt(r.mean_ms) + "," + fmt(r.stddev_ms) +
           "," + std::to_string(r.milliseconds.size()) + "\n";
  }
  return out;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string out = "locality,zero_encoding,kernelization,auroc,auprc,auroc_stddev,inference_ms,seeds\n";
  for (const AblationRow& r : rows) {
    out += std::string(r.locality ? "1" : "0") + "," + (r.zero_encoding ? "1" : "0") + "," +
           (r.kernelization ? "1" : "0") + "," + fmt(r.mean_auroc()) + "," + fmt(r.mean_auprc()) + "," +
           fmt(stddev(r.auroc)) + "," + fmt(r.inference_ms) + "," + std::to_string(r.auroc.size()) + "\n";
  }
  return out;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SehmError("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SehmError("cannot write " + path);
  out << text;
  if (!out) throw SehmError("error writing " + path);
}

}  // namespace sehm
