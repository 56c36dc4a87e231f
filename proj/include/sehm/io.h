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

// On-disk formats: run configuration, datasets, model bundles, explanation
// tables and reports. README.md describes every layout.

#ifndef SEHM_IO_H_
#define SEHM_IO_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sehm/explainer.h"
#include "sehm/harness.h"
#include "sehm/model.h"
#include "sehm/synthetic.h"
#include "sehm/training.h"

namespace sehm {

// Everything a run reads from its configuration file. The model's length and
// variable count always follow the data section.
struct ExperimentConfig {
  SyntheticSpec data;
  ModelConfig model;
  TrainConfig train;
  EvaluateConfig evaluate;
  BenchmarkConfig benchmark;
  AblationConfig ablate;

  void validate() const;
};

// JSON text to config. Sections and keys are optional; unknown keys are
// rejected. Each override is "section.key=value" with a JSON value (bare
// words are taken as strings).
ExperimentConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {});
ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});
// Complete, pretty-printed JSON; parse_config(config_json(c)) == c.
std::string config_json(const ExperimentConfig& config);

// One JSON record per line: {"id": str, "label": 0|1, "values": T x D grid
// with null for missing entries}.
void write_dataset(const std::string& path, const Dataset& data);
Dataset read_dataset(const std::string& path);

// Model and optional theta network in one binary file.
struct ModelBundle {
  SehmModel model;
  std::optional<ThetaNetwork> theta;
};
void save_bundle(const std::string& path, const SehmModel& model, const ThetaNetwork* theta);
ModelBundle load_bundle(const std::string& path);

// Raw tensor layer of the bundle format.
void write_tensors(const std::string& path, const std::string& header_json, const ParameterSet& tensors);
std::pair<std::string, ParameterSet> read_tensors(const std::string& path);

// Rows time, variable, value, beta, missing for one sample. `raw` is the
// unstandardized T x D series (0 where missing).
void write_explanation_csv(const std::string& path, const Explanation& e, const Tensor& raw,
                           const std::vector<std::string>& variable_names);

std::string history_csv(const std::vector<EpochRecord>& history);
std::string timing_csv(const std::vector<EpochRecord>& history);
std::string report_json(const MetricsReport& report);
std::string benchmark_csv(const std::vector<TimingRow>& rows);
std::string ablation_csv(const std::vector<AblationRow>& rows);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

}  // namespace sehm

#endif  // SEHM_IO_H_
