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

#ifndef SEHM_GRADCHECK_H_
#define SEHM_GRADCHECK_H_

#include <functional>
#include <vector>

#include "sehm/autodiff.h"

namespace sehm {

// Builds a scalar on a fresh tape from the given input leaves.
using ScalarGraph = std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>;

struct GradCheckReport {
  double max_relative_error = 0.0;
  size_t worst_input = 0;
  size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  size_t coordinates = 0;
};

// Compares reverse-mode gradients against central differences, coordinate
// by coordinate, over every input tensor. Relative error per coordinate is
// |analytic - numeric| / (|analytic| + |numeric| + 1e-12).
GradCheckReport check_gradients(const ScalarGraph& f, const std::vector<Tensor>& points, double eps);

// Single-input convenience form; returns the max relative error.
double finite_difference_check(const std::function<ad::Var(ad::Tape&, const ad::Var&)>& f,
                               const Tensor& point, double eps);

}  // namespace sehm

#endif  // SEHM_GRADCHECK_H_
