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

// The hierarchical classifier: local attention over windows of the raw
// series, a recurrent layer over the window summaries, and a sigmoid head.
//
//   x (B x T x D) -> windows (B x L x C x D) -> heads -> W^O -> z (B x L x D_o)
//     -> recurrent layer -> final hidden -> f in (0, 1)
//
// With locality off the whole series forms one window and every per-query
// attention output (T of them) feeds the recurrent layer. With attention off
// the recurrent layer reads the raw series directly.

#ifndef SEHM_MODEL_H_
#define SEHM_MODEL_H_

#include <cstdint>
#include <vector>

#include "sehm/local_attention.h"
#include "sehm/optim.h"
#include "sehm/recurrent.h"

namespace sehm {

struct ModelConfig {
  int64_t length = 600;   // T
  int64_t variables = 8;  // D
  int64_t neighbor = 30;  // C
  int64_t heads = 2;
  int64_t features = 8;     // R, shared by every head
  int64_t output_dim = 8;   // D_o
  int64_t hidden = 16;      // recurrent state size
  CellKind cell = CellKind::kGru;
  bool locality = true;
  bool kernelized = true;
  bool attention = true;
  uint64_t seed = 1;

  // Window length actually used (T when locality is off).
  int64_t window() const { return locality ? neighbor : length; }
  // Number of recurrent steps.
  int64_t steps() const;
  // Width of one recurrent input row.
  int64_t step_width() const { return attention ? output_dim : variables; }
  // Length of the flattened attention output z.
  int64_t explanation_dim() const { return steps() * step_width(); }

  void validate() const;
};

// Parameters bound on one tape.
struct ModelVars {
  std::vector<HeadVars> heads;
  ad::Var output_projection;
  ad::Var omega_t;  // D x R, never trainable
  RecurrentVars rnn;
  ad::Var classifier_weight;  // H x 1
  ad::Var classifier_bias;    // [1]
  std::vector<ad::Var> all;   // in ParameterSet order
};

class SehmModel {
 public:
  SehmModel() = default;
  explicit SehmModel(const ModelConfig& config);
  // Rebuilds a model around stored parameters; the random features are
  // redrawn from config.seed.
  SehmModel(const ModelConfig& config, ParameterSet params);

  const ModelConfig& config() const { return config_; }
  const ParameterSet& params() const { return params_; }
  ParameterSet& params() { return params_; }
  const RandomFeatureMatrix& features() const { return features_; }

  ModelVars bind(ad::Tape& tape, bool trainable) const;

  // z for a batch: B x L x D_o (B x T x D when attention is off).
  ad::Var attention_output(const ModelVars& vars, const ad::Var& batch) const;
  // f from z given as B x steps x width or flattened B x D_r.
  ad::Var probability_from_z(const ModelVars& vars, const ad::Var& z) const;
  ad::Var probability(const ModelVars& vars, const ad::Var& batch) const;

  // Forward passes without gradients.
  Tensor predict(const Tensor& batch) const;         // B
  Tensor embed(const Tensor& batch) const;           // B x D_r
  Tensor predict_from_z(const Tensor& z) const;      // N x D_r -> N

  // Tensor-level views for the explainer.
  AttentionHead head(int64_t h) const;
  MultiHeadConfig multi_head() const;
  RecurrentParams recurrent() const;
  ClassifierHead classifier() const;

 private:
  void check_batch(const Shape& shape) const;

  ModelConfig config_;
  ParameterSet params_;
  RandomFeatureMatrix features_;
};

}  // namespace sehm

#endif  // SEHM_MODEL_H_
