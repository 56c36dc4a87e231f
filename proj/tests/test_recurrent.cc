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


#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "sehm/gradcheck.h"
#include "sehm/recurrent.h"
#include "test_util.h"

using namespace sehm;
using sehm::testing::normal;

namespace {

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Step-by-step recurrence with scalar loops; gate blocks in the stored order.
std::vector<double> reference(const Tensor& seq, const RecurrentParams& p) {
  const int64_t n = p.hidden_size, in = p.input_size, g = RecurrentParams::gate_count(p.kind) * n;
  std::vector<double> h(static_cast<size_t>(n), 0.0), c(static_cast<size_t>(n), 0.0);
  for (int64_t t = 0; t < seq.dim(0); ++t) {
    std::vector<double> xw(static_cast<size_t>(g)), hw(static_cast<size_t>(g));
    for (int64_t j = 0; j < g; ++j) {
      double a = p.b_input[static_cast<size_t>(j)], b = p.b_hidden[static_cast<size_t>(j)];
      for (int64_t i = 0; i < in; ++i) a += seq.at({t, i}) * p.w_input.at({i, j});
      for (int64_t i = 0; i < n; ++i) b += h[static_cast<size_t>(i)] * p.w_hidden.at({i, j});
      xw[static_cast<size_t>(j)] = a;
      hw[static_cast<size_t>(j)] = b;
    }
    std::vector<double> next(static_cast<size_t>(n));
    for (int64_t k = 0; k < n; ++k) {
      const auto at = [&](const std::vector<double>& v, int64_t block) { return v[static_cast<size_t>(block * n + k)]; };
      if (p.kind == CellKind::kGru) {
        const double r = sig(at(xw, 0) + at(hw, 0));
        const double u = sig(at(xw, 1) + at(hw, 1));
        const double cand = std::tanh(at(xw, 2) + r * at(hw, 2));
        next[static_cast<size_t>(k)] = (1.0 - u) * cand + u * h[static_cast<size_t>(k)];
      } else {
        const double i = sig(at(xw, 0) + at(hw, 0));
        const double f = sig(at(xw, 1) + at(hw, 1));
        const double gg = std::tanh(at(xw, 2) + at(hw, 2));
        const double o = sig(at(xw, 3) + at(hw, 3));
        c[static_cast<size_t>(k)] = f * c[static_cast<size_t>(k)] + i * gg;
        next[static_cast<size_t>(k)] = o * std::tanh(c[static_cast<size_t>(k)]);
      }
    }
    h = next;
  }
  return h;
}

}  // namespace

TEST_CASE("recurrences match the scalar reference") {
  for (CellKind kind : {CellKind::kGru, CellKind::kLstm}) {
    std::mt19937_64 rng(1);
    const RecurrentParams p = RecurrentParams::init(kind, 3, 4, rng);
    const Tensor seq = normal({5, 3}, rng);
    const Tensor h = recurrent_forward(seq, p);
    const std::vector<double> ref = reference(seq, p);
    for (size_t k = 0; k < ref.size(); ++k) CHECK(std::abs(h[k] - ref[k]) < 1e-12);
  }
}

TEST_CASE("zero GRU stays at zero") {
  const RecurrentParams p = RecurrentParams::zeros(CellKind::kGru, 2, 3);
  const Tensor h = recurrent_forward(Tensor({6, 2}), p);
  for (double v : h.data()) CHECK(v == 0.0);
}

TEST_CASE("one step equals one cell application") {
  std::mt19937_64 rng(2);
  const RecurrentParams p = RecurrentParams::init(CellKind::kLstm, 2, 3, rng);
  const Tensor x = normal({1, 2}, rng);
  ad::Tape tape;
  const RecurrentVars cell = bind_recurrent(p, tape, false);
  const CellState zero{tape.constant(Tensor({1, 3})), tape.constant(Tensor({1, 3}))};
  const CellState s = cell_step(cell, tape.constant(x), zero);
  CHECK(sehm::testing::max_abs_diff(s.h.value().reshaped({3}), recurrent_forward(x, p)) == 0.0);
}

TEST_CASE("GRU state stays inside the open unit interval") {
  // Inputs stay moderate: tanh rounds to exactly 1 in double beyond about 19.
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const RecurrentParams p = RecurrentParams::init(CellKind::kGru, 2, 5, rng);
    const Tensor h = recurrent_forward(normal({1 + trial % 7, 2}, rng, 3.0), p);
    for (double v : h.data()) CHECK(std::abs(v) < 1.0);
  }
}

TEST_CASE("update and forget gates start biased toward carrying state") {
  std::mt19937_64 rng(4);
  for (CellKind kind : {CellKind::kGru, CellKind::kLstm}) {
    const RecurrentParams p = RecurrentParams::init(kind, 2, 6, rng);
    const double bound = 1.0 / std::sqrt(6.0);
    for (int64_t j = 0; j < p.b_input.dim(0); ++j) {
      const double v = p.b_input[static_cast<size_t>(j)];
      if (j >= 6 && j < 12) {
        CHECK(v >= 1.0 - bound);
      } else {
        CHECK(std::abs(v) <= bound);
      }
    }
  }
}

TEST_CASE("classifier and loss closed forms") {
  CHECK(classify(Tensor::vector({1.0, 2.0}), {Tensor::vector({0.0, 0.0}), Tensor::vector({0.0})}) == 0.5);
  CHECK(classify(Tensor::vector({1.0}), {Tensor::vector({30.0}), Tensor::vector({0.0})}) >= 1.0 - 1e-12);
  CHECK(classify(Tensor::vector({0.5, -1.0}), {Tensor::vector({2.0, 0.3}), Tensor::vector({-0.2})}) ==
        doctest::Approx(sig(1.0 - 0.3 - 0.2)).epsilon(1e-15));
  CHECK(bce_loss(0.5, 1.0) == doctest::Approx(std::log(2.0)));
  CHECK(bce_loss(1.0 - 1e-12, 1.0) < 1e-11);
  CHECK(std::isfinite(bce_loss(0.0, 1.0)));

  ad::Tape tape;
  const Tensor p = Tensor::vector({0.2, 0.7, 0.9}), y = Tensor::vector({0.0, 1.0, 0.0});
  const double batch = bce_loss(tape.constant(p), tape.constant(y)).value().item();
  CHECK(batch == doctest::Approx((bce_loss(0.2, 0.0) + bce_loss(0.7, 1.0) + bce_loss(0.9, 0.0)) / 3.0));
}

TEST_CASE("end-to-end loss gradients pass finite differences") {
  for (CellKind kind : {CellKind::kGru, CellKind::kLstm}) {
    std::mt19937_64 rng(5);
    const RecurrentParams p = RecurrentParams::init(kind, 3, 4, rng);
    const std::vector<Tensor> points = {normal({2, 5, 3}, rng), p.w_input, p.w_hidden, p.b_input, p.b_hidden,
                                        normal({4, 1}, rng), normal({1}, rng)};
    const GradCheckReport r = check_gradients(
        [kind](ad::Tape& t, const std::vector<ad::Var>& in) {
          const RecurrentVars cell{kind, 4, in[1], in[2], in[3], in[4]};
          const ad::Var prob = classify(run_recurrent(cell, in[0]), in[5], in[6]);
          return bce_loss(prob, t.constant(Tensor::vector({1.0, 0.0})));
        },
        points, 1e-5);
    CHECK(r.max_relative_error < 1e-4);
  }
}
