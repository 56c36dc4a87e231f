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

#include "sehm/training.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "sehm/metrics.h"

namespace sehm {
namespace {

uint64_t mix_seed(uint64_t a, uint64_t b) {
  uint64_t x = a * 0x9e3779b97f4a7c15ULL + b + 0x632be59bd9b4e019ULL;
  x ^= x >> 31;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  return x;
}

// Stacks `per_center` perturbations around the first `centers` rows of z.
Tensor perturb_rows(const Tensor& z, int64_t centers, const TrainConfig& config, uint64_t seed) {
  const int64_t d = z.dim(1);
  Tensor points({centers * config.perturbations, d});
  for (int64_t c = 0; c < centers; ++c) {
    const Tensor center({d}, std::vector<double>(z.data().begin() + c * d, z.data().begin() + (c + 1) * d));
    double norm = 0.0;
    for (double v : center.data()) norm += v * v;
    const PerturbationSet set = sample_perturbations(center, config.perturbation_radius * std::sqrt(norm),
                                                     config.perturbations, mix_seed(seed, static_cast<uint64_t>(c)));
    std::copy(set.points.data().begin(), set.points.data().end(),
              points.mutable_data().begin() + c * config.perturbations * d);
  }
  return points;
}

double theta_step(const SehmModel& model, ThetaTrainer& trainer, const Tensor& z, const TrainConfig& config,
                  uint64_t seed) {
  const int64_t centers = std::min(config.centers_per_batch, z.dim(0));
  const Tensor points = perturb_rows(z, centers, config, seed);
  return trainer.step(points, grad_f(model_score(model), points), centers);
}

double seconds_to_ms(std::chrono::steady_clock::duration d) {
  return std::chrono::duration<double, std::milli>(d).count();
}

}  // namespace

Split split_dataset(const Tensor& labels, double test_fraction, double validation_fraction, uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0) || !(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw SehmError("split: fractions must lie in (0, 1)");
  }
  std::mt19937_64 rng(seed);
  Split s;
  for (double cls : {0.0, 1.0}) {
    std::vector<int64_t> idx;
    for (int64_t i = 0; i < labels.dim(0); ++i) {
      if (labels[static_cast<size_t>(i)] == cls) idx.push_back(i);
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n = static_cast<int64_t>(idx.size());
    const int64_t n_test = std::llround(test_fraction * static_cast<double>(n));
    const int64_t n_val = std::llround(validation_fraction * static_cast<double>(n - n_test));
    s.test.insert(s.test.end(), idx.begin(), idx.begin() + n_test);
    s.validation.insert(s.validation.end(), idx.begin() + n_test, idx.begin() + n_test + n_val);
    s.train.insert(s.train.end(), idx.begin() + n_test + n_val, idx.end());
  }
  for (std::vector<int64_t>* part : {&s.train, &s.validation, &s.test}) std::sort(part->begin(), part->end());
  if (s.train.empty() || s.test.empty()) throw SehmError("split: too few samples for the requested fractions");
  return s;
}

Standardizer Standardizer::fit(const Dataset& data) {
  const int64_t d = data.variables();
  std::vector<double> sum(static_cast<size_t>(d), 0.0), sq(static_cast<size_t>(d), 0.0), count(static_cast<size_t>(d), 0.0);
  const auto x = data.values.data();
  const auto m = data.mask.data();
  for (size_t i = 0; i < x.size(); ++i) {
    if (m[i] == 0.0) continue;
    const size_t v = i % static_cast<size_t>(d);
    sum[v] += x[i];
    sq[v] += x[i] * x[i];
    count[v] += 1.0;
  }
  Standardizer s;
  for (int64_t v = 0; v < d; ++v) {
    const size_t k = static_cast<size_t>(v);
    const double mu = count[k] > 0.0 ? sum[k] / count[k] : 0.0;
    const double var = count[k] > 1.0 ? std::max(0.0, sq[k] / count[k] - mu * mu) : 0.0;
    s.mean.push_back(mu);
    s.scale.push_back(var > 1e-12 ? std::sqrt(var) : 1.0);
  }
  return s;
}

Tensor Standardizer::apply(const Dataset& data, bool zero_encoding) const {
  const int64_t n = data.size(), t_len = data.length(), d = data.variables();
  if (static_cast<int64_t>(mean.size()) != d) throw SehmError("standardizer: variable count mismatch");
  Tensor out({n, t_len, d});
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t v = 0; v < d; ++v) {
      const size_t k = static_cast<size_t>(v);
      double carry = 0.0;
      if (!zero_encoding) {
        // Value before the first observation: the first observed value.
        for (int64_t t = 0; t < t_len; ++t) {
          const size_t at = static_cast<size_t>((i * t_len + t) * d + v);
          if (data.mask[at] != 0.0) {
            carry = (data.values[at] - mean[k]) / scale[k];
            break;
          }
        }
      }
      for (int64_t t = 0; t < t_len; ++t) {
        const size_t at = static_cast<size_t>((i * t_len + t) * d + v);
        if (data.mask[at] != 0.0) {
          out[at] = (data.values[at] - mean[k]) / scale[k];
          carry = out[at];
        } else {
          out[at] = zero_encoding ? 0.0 : carry;
        }
      }
    }
  }
  return out;
}

const char* explainer_mode_name(ExplainerMode mode) {
  switch (mode) {
    case ExplainerMode::kJoint: return "joint";
    case ExplainerMode::kPosthoc: return "posthoc";
    case ExplainerMode::kOff: return "off";
  }
  return "?";
}

ExplainerMode parse_explainer_mode(const std::string& name) {
  if (name == "joint") return ExplainerMode::kJoint;
  if (name == "posthoc") return ExplainerMode::kPosthoc;
  if (name == "off") return ExplainerMode::kOff;
  throw SehmError("unknown explainer mode '" + name + "' (use joint, posthoc or off)");
}

void TrainConfig::validate() const {
  static constexpr int64_t kBatchSizes[] = {16, 32, 64, 128, 256};
  if (std::find(std::begin(kBatchSizes), std::end(kBatchSizes), batch_size) == std::end(kBatchSizes)) {
    throw SehmError("train: batch size must be one of 16, 32, 64, 128, 256");
  }
  if (learning_rate < 1e-4 || learning_rate > 1e-2) throw SehmError("train: learning rate must lie in [1e-4, 1e-2]");
  if (epochs < 0 || posthoc_epochs < 0) throw SehmError("train: epoch counts must be non-negative");
  if (perturbations < 1 || centers_per_batch < 1 || theta_depth < 1) {
    throw SehmError("train: perturbation count, centers per batch and theta depth must be positive");
  }
  if (perturbation_radius < 0.0) throw SehmError("train: perturbation radius must be non-negative");
}

PreparedData prepare(const Dataset& data, const TrainConfig& config) {
  PreparedData p;
  p.split = split_dataset(data.labels, config.test_fraction, config.validation_fraction, config.split_seed);
  p.train = data.subset(p.split.train);
  p.test = data.subset(p.split.test);
  if (!p.split.validation.empty()) p.validation = data.subset(p.split.validation);
  p.standardizer = Standardizer::fit(p.train);
  p.train_x = p.standardizer.apply(p.train, config.zero_encoding);
  p.test_x = p.standardizer.apply(p.test, config.zero_encoding);
  if (!p.split.validation.empty()) p.validation_x = p.standardizer.apply(p.validation, config.zero_encoding);
  return p;
}

Tensor gather_rows(const Tensor& x, const std::vector<int64_t>& index) {
  Shape shape = x.shape();
  const int64_t row = shape_numel(shape) / shape[0];
  shape[0] = static_cast<int64_t>(index.size());
  Tensor out(shape);
  for (size_t k = 0; k < index.size(); ++k) {
    std::copy_n(x.data().begin() + index[k] * row, row, out.mutable_data().begin() + static_cast<int64_t>(k) * row);
  }
  return out;
}

Tensor predict_batched(const SehmModel& model, const Tensor& x, int64_t batch_size) {
  const int64_t n = x.dim(0);
  Tensor out({n});
  for (int64_t b = 0; b < n; b += batch_size) {
    std::vector<int64_t> idx(static_cast<size_t>(std::min(batch_size, n - b)));
    std::iota(idx.begin(), idx.end(), b);
    const Tensor p = model.predict(gather_rows(x, idx));
    std::copy(p.data().begin(), p.data().end(), out.mutable_data().begin() + b);
  }
  return out;
}

Tensor embed_batched(const SehmModel& model, const Tensor& x, int64_t batch_size) {
  const int64_t n = x.dim(0), d = model.config().explanation_dim();
  Tensor out({n, d});
  for (int64_t b = 0; b < n; b += batch_size) {
    std::vector<int64_t> idx(static_cast<size_t>(std::min(batch_size, n - b)));
    std::iota(idx.begin(), idx.end(), b);
    const Tensor z = model.embed(gather_rows(x, idx));
    std::copy(z.data().begin(), z.data().end(), out.mutable_data().begin() + b * d);
  }
  return out;
}

double train_epoch(SehmModel& model, AdamState& adam, const Tensor& x, const Tensor& y, const TrainConfig& config,
                   uint64_t epoch_seed, ThetaTrainer* trainer, double* explanation_objective) {
  const int64_t n = x.dim(0);
  std::vector<int64_t> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), int64_t{0});
  std::mt19937_64 rng(epoch_seed);
  std::shuffle(order.begin(), order.end(), rng);
  double loss_sum = 0.0, objective_sum = 0.0;
  int64_t batches = 0;
  for (int64_t b = 0; b < n; b += config.batch_size) {
    const std::vector<int64_t> idx(order.begin() + b, order.begin() + std::min(n, b + config.batch_size));
    const Tensor xb = gather_rows(x, idx);
    const Tensor yb = gather_rows(y, idx);
    ad::Tape tape;
    const ModelVars vars = model.bind(tape, true);
    const ad::Var z = model.attention_output(vars, tape.constant(xb));
    const ad::Var loss = bce_loss(model.probability_from_z(vars, z), tape.constant(yb));
    const double value = loss.value().item();
    if (!std::isfinite(value)) throw SehmError("train: loss diverged at batch " + std::to_string(batches));
    const ad::Gradients g = tape.backward(loss);
    std::vector<Tensor> grads;
    for (const ad::Var& v : vars.all) grads.push_back(g[v]);
    adam_step(model.params().tensors(), grads, adam);
    loss_sum += value;
    if (trainer != nullptr) {
      // z is detached: theta never feeds gradients back into the classifier.
      const Tensor zv = z.value().reshaped({xb.dim(0), model.config().explanation_dim()});
      objective_sum += theta_step(model, *trainer, zv, config, mix_seed(epoch_seed, static_cast<uint64_t>(batches)));
    }
    ++batches;
  }
  if (explanation_objective != nullptr) *explanation_objective = objective_sum / static_cast<double>(batches);
  return loss_sum / static_cast<double>(batches);
}

double train_theta_epoch(const SehmModel& model, ThetaTrainer& trainer, const Tensor& x, const TrainConfig& config,
                         uint64_t epoch_seed) {
  const int64_t n = x.dim(0);
  std::vector<int64_t> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), int64_t{0});
  std::mt19937_64 rng(epoch_seed);
  std::shuffle(order.begin(), order.end(), rng);
  double sum = 0.0;
  int64_t steps = 0;
  for (int64_t b = 0; b < n; b += config.centers_per_batch) {
    const std::vector<int64_t> idx(order.begin() + b, order.begin() + std::min(n, b + config.centers_per_batch));
    const Tensor z = model.embed(gather_rows(x, idx));
    sum += theta_step(model, trainer, z, config, mix_seed(epoch_seed, static_cast<uint64_t>(steps)));
    ++steps;
  }
  return sum / static_cast<double>(steps);
}

ThetaTrainer make_theta_trainer(const SehmModel& model, const TrainConfig& config) {
  const int64_t dr = model.config().explanation_dim();
  std::mt19937_64 rng(mix_seed(config.seed, 0x7e7a));
  AdamConfig adam;
  adam.learning_rate = config.theta_learning_rate;
  return ThetaTrainer(ThetaNetwork::init(dr, config.theta_depth, dr, config.theta_activation, rng), config.objective,
                      adam);
}

TrainResult train(const ModelConfig& model_config, const PreparedData& data, const TrainConfig& config) {
  config.validate();
  if (config.explainer != ExplainerMode::kOff && !(model_config.attention && model_config.locality)) {
    throw SehmError("train: the explainer needs local attention; set explainer = off for this model");
  }
  TrainResult result{SehmModel(model_config), std::nullopt, {}};
  SehmModel& model = result.model;
  AdamConfig adam_config;
  adam_config.learning_rate = config.learning_rate;
  AdamState adam(adam_config, model.params().shapes());
  std::optional<ThetaTrainer> trainer;
  if (config.explainer != ExplainerMode::kOff) trainer.emplace(make_theta_trainer(model, config));

  const bool has_val = !data.split.validation.empty();
  for (int64_t epoch = 1; epoch <= config.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    const auto start = std::chrono::steady_clock::now();
    rec.train_loss = train_epoch(model, adam, data.train_x, data.train.labels, config, mix_seed(config.seed, epoch),
                                 config.explainer == ExplainerMode::kJoint ? &*trainer : nullptr,
                                 &rec.explanation_objective);
    rec.milliseconds = seconds_to_ms(std::chrono::steady_clock::now() - start);
    if (has_val) {
      const Tensor p = predict_batched(model, data.validation_x);
      double loss = 0.0;
      for (size_t i = 0; i < p.size(); ++i) loss += bce_loss(p[i], data.validation.labels[i]);
      rec.validation_loss = loss / static_cast<double>(p.size());
      rec.validation_auroc = auroc(p.data(), data.validation.labels.data());
      rec.validation_auprc = auprc(p.data(), data.validation.labels.data());
    }
    result.history.push_back(rec);
  }
  if (config.explainer == ExplainerMode::kPosthoc) {
    for (int64_t epoch = 1; epoch <= config.posthoc_epochs; ++epoch) {
      EpochRecord rec;
      rec.epoch = config.epochs + epoch;
      const auto start = std::chrono::steady_clock::now();
      rec.explanation_objective =
          train_theta_epoch(model, *trainer, data.train_x, config, mix_seed(config.seed ^ 0x90c, epoch));
      rec.milliseconds = seconds_to_ms(std::chrono::steady_clock::now() - start);
      result.history.push_back(rec);
    }
  }
  if (trainer) result.theta = trainer->network();
  return result;
}

}  // namespace sehm
