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

#ifndef SEHM_OPTIM_H_
#define SEHM_OPTIM_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "sehm/autodiff.h"

namespace sehm {

// Ordered, named collection of trainable tensors.
class ParameterSet {
 public:
  size_t add(std::string name, Tensor init);

  size_t size() const { return tensors_.size(); }
  Tensor& operator[](size_t i) { return tensors_[i]; }
  const Tensor& operator[](size_t i) const { return tensors_[i]; }
  // Throws when the name is unknown.
  size_t index(const std::string& name) const;
  bool contains(const std::string& name) const;
  const std::string& name(size_t i) const { return names_[i]; }

  std::vector<Tensor>& tensors() { return tensors_; }
  const std::vector<Tensor>& tensors() const { return tensors_; }
  std::vector<Shape> shapes() const;
  size_t scalar_count() const;

  // Records every tensor on the tape, as leaves or as constants.
  std::vector<ad::Var> bind(ad::Tape& tape, bool trainable = true) const;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
};

// Uniform initialization in [-bound, bound].
Tensor uniform_tensor(Shape shape, double bound, std::mt19937_64& rng);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class AdamState {
 public:
  AdamState(AdamConfig config, const std::vector<Shape>& shapes);

  const AdamConfig& config() const { return config_; }
  void set_learning_rate(double lr);
  int64_t step() const { return step_; }

 private:
  friend void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads,
                        AdamState& state);

  AdamConfig config_;
  std::vector<Tensor> first_moment_;
  std::vector<Tensor> second_moment_;
  int64_t step_ = 0;
};

// Bias-corrected Adam update applied in place. The learning rate must lie
// in (0, 1).
void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, AdamState& state);

}  // namespace sehm

#endif  // SEHM_OPTIM_H_
