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

#include "sehm/gradcheck.h"

#include <cmath>

namespace sehm {
namespace {

double evaluate(const ScalarGraph& f, const std::vector<Tensor>& points) {
  ad::Tape tape;
  std::vector<ad::Var> inputs;
  inputs.reserve(points.size());
  for (const Tensor& p : points) inputs.push_back(tape.constant(p));
  const ad::Var out = f(tape, inputs);
  if (out.value().size() != 1) throw SehmError("gradient check: function is not scalar");
  const double v = out.value().item();
  if (!std::isfinite(v)) throw SehmError("gradient check: non-finite evaluation");
  return v;
}

}  // namespace

GradCheckReport check_gradients(const ScalarGraph& f, const std::vector<Tensor>& points, double eps) {
  if (!(eps > 0.0 && eps <= 1e-2)) throw SehmError("gradient check: eps must lie in (0, 1e-2]");

  std::vector<Tensor> analytic;
  {
    ad::Tape tape;
    std::vector<ad::Var> inputs;
    for (const Tensor& p : points) inputs.push_back(tape.leaf(p));
    const ad::Var out = f(tape, inputs);
    const ad::Gradients grads = tape.backward(out);
    for (const ad::Var& v : inputs) analytic.push_back(grads[v]);
  }

  GradCheckReport report;
  std::vector<Tensor> probe = points;
  for (size_t k = 0; k < points.size(); ++k) {
    for (size_t i = 0; i < points[k].size(); ++i) {
      const double x0 = points[k][i];
      probe[k][i] = x0 + eps;
      const double up = evaluate(f, probe);
      probe[k][i] = x0 - eps;
      const double down = evaluate(f, probe);
      probe[k][i] = x0;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[k][i];
      const double err = std::abs(a - numeric) / (std::abs(a) + std::abs(numeric) + 1e-12);
      ++report.coordinates;
      if (err > report.max_relative_error || report.coordinates == 1) {
        report.max_relative_error = err;
        report.worst_input = k;
        report.worst_index = i;
        report.analytic = a;
        report.numeric = numeric;
      }
    }
  }
  return report;
}

double finite_difference_check(const std::function<ad::Var(ad::Tape&, const ad::Var&)>& f,
                               const Tensor& point, double eps) {
  const ScalarGraph wrapped = [&f](ad::Tape& tape, const std::vector<ad::Var>& in) {
    return f(tape, in.front());
  };
  return check_gradients(wrapped, {point}, eps).max_relative_error;
}

}  // namespace sehm
