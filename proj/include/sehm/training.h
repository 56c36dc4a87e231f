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

// Preprocessing, data splits and the training loop.

#ifndef SEHM_TRAINING_H_
#define SEHM_TRAINING_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sehm/explainer.h"
#include "sehm/model.h"
#include "sehm/synthetic.h"

namespace sehm {

// Stratified split: `test_fraction` of each class goes to test, then
// `validation_fraction` of the remaining training rows to validation.
struct Split {
  std::vector<int64_t> train;
  std::vector<int64_t> validation;
  std::vector<int64_t> test;
};
Split split_dataset(const Tensor& labels, double test_fraction, double validation_fraction, uint64_t seed);

// Per-variable standardization fitted on observed training values.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Dataset& data);
  // Standardized N x T x D inputs. With zero encoding every missing entry is
  // exactly 0; without it missing entries carry the last observed value
  // (the first observed value before any observation, 0 if none).
  Tensor apply(const Dataset& data, bool zero_encoding) const;
};

enum class ExplainerMode { kJoint, kPosthoc, kOff };
const char* explainer_mode_name(ExplainerMode mode);
ExplainerMode parse_explainer_mode(const std::string& name);

struct TrainConfig {
  int64_t batch_size = 64;
  double learning_rate = 3e-3;
  int64_t epochs = 30;
  bool zero_encoding = true;
  double test_fraction = 0.25;
  double validation_fraction = 0.1;
  uint64_t seed = 1;        // shuffling and theta initialization
  uint64_t split_seed = 1;

  ExplainerMode explainer = ExplainerMode::kJoint;
  int theta_depth = 2;
  Activation theta_activation = Activation::kRelu;
  ObjectiveConfig objective;
  double theta_learning_rate = 1e-3;
  double perturbation_radius = 0.1;  // fraction of |z| at each center
  int64_t perturbations = 25;
  int64_t centers_per_batch = 8;
  int64_t posthoc_epochs = 10;

  void validate() const;
};

struct EpochRecord {
  int64_t epoch = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
  double validation_auroc = 0.0;
  double validation_auprc = 0.0;
  double explanation_objective = 0.0;  // mean over steps, 0 when off
  double milliseconds = 0.0;
};

struct PreparedData {
  Split split;
  Standardizer standardizer;
  Dataset train, validation, test;    // raw subsets
  Tensor train_x, validation_x, test_x;  // preprocessed inputs
};

PreparedData prepare(const Dataset& data, const TrainConfig& config);

struct TrainResult {
  SehmModel model;
  std::optional<ThetaNetwork> theta;
  std::vector<EpochRecord> history;
};

// Probabilities for N x T x D in batches.
Tensor predict_batched(const SehmModel& model, const Tensor& x, int64_t batch_size = 256);
Tensor embed_batched(const SehmModel& model, const Tensor& x, int64_t batch_size = 256);

// Rows `index` of an N x ... tensor.
Tensor gather_rows(const Tensor& x, const std::vector<int64_t>& index);

// One epoch of classification training; returns mean batch loss. When
// `trainer` is set, theta takes one step per batch on perturbations of the
// batch's attention outputs.
double train_epoch(SehmModel& model, AdamState& adam, const Tensor& x, const Tensor& y, const TrainConfig& config,
                   uint64_t epoch_seed, ThetaTrainer* trainer, double* explanation_objective);

// Theta steps over the training inputs with the classifier frozen.
double train_theta_epoch(const SehmModel& model, ThetaTrainer& trainer, const Tensor& x, const TrainConfig& config,
                         uint64_t epoch_seed);

ThetaTrainer make_theta_trainer(const SehmModel& model, const TrainConfig& config);

TrainResult train(const ModelConfig& model_config, const PreparedData& data, const TrainConfig& config);

}  // namespace sehm

#endif  // SEHM_TRAINING_H_
