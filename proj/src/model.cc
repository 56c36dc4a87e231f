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

#include "sehm/model.h"

#include <cmath>
#include <random>
#include <string>

namespace sehm {
namespace {

constexpr uint64_t kFeatureStream = 0x9e3779b97f4a7c15ULL;

std::string head_name(int64_t h, const char* part) { return "head" + std::to_string(h) + "." + part; }

}  // namespace

int64_t ModelConfig::steps() const {
  if (!attention || !locality) return length;
  return (length + neighbor - 1) / neighbor;
}

void ModelConfig::validate() const {
  if (length < 1 || variables < 1) throw SehmError("model: series length and variable count must be positive");
  if (attention) {
    if (locality && neighbor < 1) throw SehmError("model: neighbor size must be positive");
    if (heads < 1 || output_dim < 1) throw SehmError("model: need at least one head and output dimension");
    if (kernelized && features < 1) throw SehmError("model: feature count must be positive");
  }
  if (hidden < 1) throw SehmError("model: hidden size must be positive");
}

SehmModel::SehmModel(const ModelConfig& config) : config_(config) {
  config_.validate();
  std::mt19937_64 rng(config_.seed);
  const int64_t d = config_.variables;
  if (config_.attention) {
    const double proj_bound = 1.0 / std::sqrt(static_cast<double>(d));
    for (int64_t h = 0; h < config_.heads; ++h) {
      // Small q and k keep the few-feature kernel estimate close to uniform
      // attention at the start of training.
      params_.add(head_name(h, "query"), uniform_tensor({d, d}, 0.25 * proj_bound, rng));
      params_.add(head_name(h, "key"), uniform_tensor({d, d}, 0.25 * proj_bound, rng));
      if (config_.locality) {
        // Positive around 1/C so every window starts near its mean.
        const int64_t c = config_.neighbor;
        Tensor w = uniform_tensor({c}, 1.0 / static_cast<double>(c), rng);
        for (double& v : w.mutable_data()) v += 1.0 / static_cast<double>(c);
        params_.add(head_name(h, "aggregation"), std::move(w));
      }
    }
    params_.add("output_projection",
                uniform_tensor({config_.heads * d, config_.output_dim},
                               1.0 / std::sqrt(static_cast<double>(config_.heads * d)), rng));
  }
  RecurrentParams::init(config_.cell, config_.step_width(), config_.hidden, rng).add_to(params_, "rnn");
  params_.add("classifier.weight",
              uniform_tensor({config_.hidden, 1}, 1.0 / std::sqrt(static_cast<double>(config_.hidden)), rng));
  params_.add("classifier.bias", Tensor({1}));
  if (config_.attention && config_.kernelized) {
    features_ = draw_orthogonal_features(d, config_.features, config_.seed ^ kFeatureStream);
  }
}

SehmModel::SehmModel(const ModelConfig& config, ParameterSet params) : SehmModel(config) {
  if (params.size() != params_.size()) {
    throw SehmError("model: stored parameter count " + std::to_string(params.size()) + " differs from " +
                    std::to_string(params_.size()));
  }
  for (size_t i = 0; i < params_.size(); ++i) {
    if (params.name(i) != params_.name(i) || params[i].shape() != params_[i].shape()) {
      throw SehmError("model: stored parameter " + params.name(i) + " " + shape_string(params[i].shape()) +
                      " does not match " + params_.name(i) + " " + shape_string(params_[i].shape()));
    }
  }
  params_ = std::move(params);
}

ModelVars SehmModel::bind(ad::Tape& tape, bool trainable) const {
  ModelVars v;
  v.all = params_.bind(tape, trainable);
  const auto get = [&](const std::string& name) { return v.all[params_.index(name)]; };
  if (config_.attention) {
    for (int64_t h = 0; h < config_.heads; ++h) {
      HeadVars hv{get(head_name(h, "query")), get(head_name(h, "key")), {}};
      if (config_.locality) hv.aggregation = get(head_name(h, "aggregation"));
      v.heads.push_back(hv);
    }
    v.output_projection = get("output_projection");
    if (config_.kernelized) v.omega_t = tape.constant(ad::transpose2d(features_.omega));
  }
  v.rnn = {config_.cell, config_.hidden, get("rnn.w_input"), get("rnn.w_hidden"), get("rnn.b_input"),
           get("rnn.b_hidden")};
  v.classifier_weight = get("classifier.weight");
  v.classifier_bias = get("classifier.bias");
  return v;
}

void SehmModel::check_batch(const Shape& shape) const {
  if (shape.size() != 3 || shape[1] != config_.length || shape[2] != config_.variables) {
    throw SehmError("model: expected batch B x " + std::to_string(config_.length) + " x " +
                    std::to_string(config_.variables) + ", got " + shape_string(shape));
  }
}

ad::Var SehmModel::attention_output(const ModelVars& vars, const ad::Var& batch) const {
  check_batch(batch.shape());
  if (!config_.attention) return batch;
  const int64_t b = batch.shape()[0];
  const int64_t d = config_.variables;
  const int64_t steps = config_.steps();
  ad::Var windows;
  if (config_.locality) {
    const int64_t c = config_.neighbor;
    const int64_t padded = steps * c;
    ad::Var x = batch;
    if (padded != config_.length) {
      ad::Tape& tape = *batch.tape();
      x = ad::concat({batch, tape.constant(Tensor({b, padded - config_.length, d}))}, 1);
    }
    windows = ad::reshape(x, {b * steps, c, d});
  } else {
    windows = batch;  // one window of T steps per series
  }
  std::vector<ad::Var> outs;
  for (const HeadVars& head : vars.heads) {
    const ad::Var o = config_.kernelized ? kernel_attention(windows, head, vars.omega_t, config_.locality)
                                         : exact_attention(windows, head, config_.locality);
    outs.push_back(ad::reshape(o, {b, steps, d}));
  }
  return aggregate_heads(outs, vars.output_projection);
}

ad::Var SehmModel::probability_from_z(const ModelVars& vars, const ad::Var& z) const {
  const int64_t b = z.shape()[0];
  if (shape_numel(z.shape()) != b * config_.explanation_dim()) {
    throw SehmError("model: z of shape " + shape_string(z.shape()) + " does not hold " +
                    std::to_string(config_.explanation_dim()) + " values per sample");
  }
  const ad::Var seq = ad::reshape(z, {b, config_.steps(), config_.step_width()});
  return classify(run_recurrent(vars.rnn, seq), vars.classifier_weight, vars.classifier_bias);
}

ad::Var SehmModel::probability(const ModelVars& vars, const ad::Var& batch) const {
  return probability_from_z(vars, attention_output(vars, batch));
}

Tensor SehmModel::predict(const Tensor& batch) const {
  ad::Tape tape;
  const ModelVars vars = bind(tape, false);
  return probability(vars, tape.constant(batch)).value();
}

Tensor SehmModel::embed(const Tensor& batch) const {
  ad::Tape tape;
  const ModelVars vars = bind(tape, false);
  const Tensor z = attention_output(vars, tape.constant(batch)).value();
  return z.reshaped({batch.dim(0), config_.explanation_dim()});
}

Tensor SehmModel::predict_from_z(const Tensor& z) const {
  ad::Tape tape;
  const ModelVars vars = bind(tape, false);
  return probability_from_z(vars, tape.constant(z)).value();
}

AttentionHead SehmModel::head(int64_t h) const {
  if (!config_.attention || h < 0 || h >= config_.heads) throw SehmError("model: no attention head " + std::to_string(h));
  AttentionHead out;
  out.query = params_[params_.index(head_name(h, "query"))];
  out.key = params_[params_.index(head_name(h, "key"))];
  if (config_.locality) out.aggregation = params_[params_.index(head_name(h, "aggregation"))];
  return out;
}

MultiHeadConfig SehmModel::multi_head() const {
  if (!config_.attention) throw SehmError("model: attention is disabled");
  return {config_.heads, params_[params_.index("output_projection")]};
}

RecurrentParams SehmModel::recurrent() const { return RecurrentParams::from(params_, "rnn", config_.cell); }

ClassifierHead SehmModel::classifier() const {
  return {params_[params_.index("classifier.weight")].reshaped({config_.hidden}),
          params_[params_.index("classifier.bias")]};
}

}  // namespace sehm
