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

#include "sehm/optim.h"

#include <algorithm>
#include <cmath>

namespace sehm {

size_t ParameterSet::add(std::string name, Tensor init) {
  if (contains(name)) throw SehmError("duplicate parameter name: " + name);
  if (!init.all_finite()) throw SehmError("parameter " + name + " is not finite");
  names_.push_back(std::move(name));
  tensors_.push_back(std::move(init));
  return tensors_.size() - 1;
}

size_t ParameterSet::index(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw SehmError("unknown parameter: " + name);
  return static_cast<size_t>(it - names_.begin());
}

bool ParameterSet::contains(const std::string& name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::vector<Shape> ParameterSet::shapes() const {
  std::vector<Shape> out;
  for (const Tensor& t : tensors_) out.push_back(t.shape());
  return out;
}

size_t ParameterSet::scalar_count() const {
  size_t n = 0;
  for (const Tensor& t : tensors_) n += t.size();
  return n;
}

std::vector<ad::Var> ParameterSet::bind(ad::Tape& tape, bool trainable) const {
  std::vector<ad::Var> out;
  out.reserve(tensors_.size());
  for (const Tensor& t : tensors_) out.push_back(trainable ? tape.leaf(t) : tape.constant(t));
  return out;
}

Tensor uniform_tensor(Shape shape, double bound, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : t.mutable_data()) v = dist(rng);
  return t;
}

AdamState::AdamState(AdamConfig config, const std::vector<Shape>& shapes) : config_(config) {
  set_learning_rate(config.learning_rate);
  for (const Shape& s : shapes) {
    first_moment_.emplace_back(s);
    second_moment_.emplace_back(s);
  }
}

void AdamState::set_learning_rate(double lr) {
  if (!(lr > 0.0 && lr < 1.0)) {
    throw SehmError("Adam learning rate must lie in (0, 1), got " + std::to_string(lr));
  }
  config_.learning_rate = lr;
}

void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.first_moment_.size()) {
    throw SehmError("adam_step: parameter, gradient and state counts differ");
  }
  for (size_t k = 0; k < params.size(); ++k) {
    if (params[k].shape() != grads[k].shape() || params[k].shape() != state.first_moment_[k].shape()) {
      throw SehmError("adam_step: shape mismatch at parameter " + std::to_string(k) + ": " +
                      shape_string(params[k].shape()) + " vs gradient " + shape_string(grads[k].shape()));
    }
  }
  ++state.step_;
  const AdamConfig& c = state.config_;
  const double t = static_cast<double>(state.step_);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (size_t k = 0; k < params.size(); ++k) {
    auto p = params[k].mutable_data();
    const auto g = grads[k].data();
    auto m = state.first_moment_[k].mutable_data();
    auto v = state.second_moment_[k].mutable_data();
    for (size_t i = 0; i < p.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

}  // namespace sehm
