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

#include "sehm/recurrent.h"

#include <algorithm>
#include <cmath>

namespace sehm {
namespace {

constexpr double kProbFloor = 1e-12;

// Advances the cell given the precomputed input projection xw (B x G*H).
CellState step_projected(const RecurrentVars& cell, const ad::Var& xw, const CellState& state) {
  const int64_t h = cell.hidden_size;
  const ad::Var hw = ad::matmul(state.h, cell.w_hidden) + cell.b_hidden;
  if (cell.kind == CellKind::kGru) {
    const ad::Var gates =
        ad::sigmoid(ad::slice(xw, 1, 0, 2 * h) + ad::slice(hw, 1, 0, 2 * h));
    const ad::Var reset = ad::slice(gates, 1, 0, h);
    const ad::Var update = ad::slice(gates, 1, h, 2 * h);
    const ad::Var candidate =
        ad::tanh(ad::slice(xw, 1, 2 * h, 3 * h) + reset * ad::slice(hw, 1, 2 * h, 3 * h));
    // (1 - u) n + u h
    return {candidate + update * (state.h - candidate), {}};
  }
  const ad::Var gates = xw + hw;
  const ad::Var in_gate = ad::sigmoid(ad::slice(gates, 1, 0, h));
  const ad::Var forget_gate = ad::sigmoid(ad::slice(gates, 1, h, 2 * h));
  const ad::Var cell_input = ad::tanh(ad::slice(gates, 1, 2 * h, 3 * h));
  const ad::Var out_gate = ad::sigmoid(ad::slice(gates, 1, 3 * h, 4 * h));
  const ad::Var c = forget_gate * state.c + in_gate * cell_input;
  return {out_gate * ad::tanh(c), c};
}

CellState zero_state(const RecurrentVars& cell, ad::Tape& tape, int64_t batch) {
  CellState s;
  s.h = tape.constant(Tensor({batch, cell.hidden_size}));
  if (cell.kind == CellKind::kLstm) s.c = tape.constant(Tensor({batch, cell.hidden_size}));
  return s;
}

}  // namespace

const char* cell_name(CellKind kind) { return kind == CellKind::kGru ? "gru" : "lstm"; }

CellKind parse_cell(const std::string& name) {
  if (name == "gru" || name == "GRU") return CellKind::kGru;
  if (name == "lstm" || name == "LSTM") return CellKind::kLstm;
  throw SehmError("unknown recurrent cell kind: " + name);
}

RecurrentParams RecurrentParams::init(CellKind kind, int64_t input_size, int64_t hidden_size,
                                      std::mt19937_64& rng) {
  if (input_size < 1 || hidden_size < 1) throw SehmError("recurrent layer sizes must be positive");
  const int64_t g = gate_count(kind) * hidden_size;
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_size));
  RecurrentParams p;
  p.kind = kind;
  p.input_size = input_size;
  p.hidden_size = hidden_size;
  p.w_input = uniform_tensor({input_size, g}, bound, rng);
  p.w_hidden = uniform_tensor({hidden_size, g}, bound, rng);
  p.b_input = uniform_tensor({g}, bound, rng);
  p.b_hidden = uniform_tensor({g}, bound, rng);
  // Gate block 1 is the GRU update gate and the LSTM forget gate; a +1 bias
  // starts both cells close to carrying their state forward.
  for (int64_t j = hidden_size; j < 2 * hidden_size; ++j) p.b_input[static_cast<size_t>(j)] += 1.0;
  return p;
}

RecurrentParams RecurrentParams::zeros(CellKind kind, int64_t input_size, int64_t hidden_size) {
  const int64_t g = gate_count(kind) * hidden_size;
  RecurrentParams p;
  p.kind = kind;
  p.input_size = input_size;
  p.hidden_size = hidden_size;
  p.w_input = Tensor({input_size, g});
  p.w_hidden = Tensor({hidden_size, g});
  p.b_input = Tensor({g});
  p.b_hidden = Tensor({g});
  return p;
}

void RecurrentParams::add_to(ParameterSet& set, const std::string& prefix) const {
  set.add(prefix + ".w_input", w_input);
  set.add(prefix + ".w_hidden", w_hidden);
  set.add(prefix + ".b_input", b_input);
  set.add(prefix + ".b_hidden", b_hidden);
}

RecurrentParams RecurrentParams::from(const ParameterSet& set, const std::string& prefix, CellKind kind) {
  RecurrentParams p;
  p.kind = kind;
  p.w_input = set[set.index(prefix + ".w_input")];
  p.w_hidden = set[set.index(prefix + ".w_hidden")];
  p.b_input = set[set.index(prefix + ".b_input")];
  p.b_hidden = set[set.index(prefix + ".b_hidden")];
  p.input_size = p.w_input.dim(0);
  p.hidden_size = p.w_hidden.dim(0);
  return p;
}

RecurrentVars bind_recurrent(const RecurrentParams& params, ad::Tape& tape, bool trainable) {
  const auto bind = [&](const Tensor& t) { return trainable ? tape.leaf(t) : tape.constant(t); };
  return {params.kind, params.hidden_size, bind(params.w_input), bind(params.w_hidden),
          bind(params.b_input), bind(params.b_hidden)};
}

CellState cell_step(const RecurrentVars& cell, const ad::Var& x, const CellState& state) {
  return step_projected(cell, ad::matmul(x, cell.w_input) + cell.b_input, state);
}

ad::Var run_recurrent(const RecurrentVars& cell, const ad::Var& sequence) {
  const Shape& s = sequence.shape();
  if (s.size() != 3) throw SehmError("run_recurrent: expected B x L x In, got " + shape_string(s));
  const int64_t batch = s[0], steps = s[1];
  const int64_t g = cell.w_input.shape()[1];
  // Input projections for every step in one product.
  const ad::Var projected = ad::matmul(sequence, cell.w_input) + cell.b_input;  // B x L x G*H
  CellState state = zero_state(cell, *sequence.tape(), batch);
  for (int64_t t = 0; t < steps; ++t) {
    const ad::Var xw = ad::reshape(ad::slice(projected, 1, t, t + 1), {batch, g});
    state = step_projected(cell, xw, state);
  }
  return state.h;
}

Tensor recurrent_forward(const Tensor& sequence, const RecurrentParams& params) {
  if (sequence.rank() != 2 || sequence.dim(0) < 1) {
    throw SehmError("recurrent_forward: expected a non-empty L x In sequence, got " + shape_string(sequence.shape()));
  }
  if (sequence.dim(1) != params.input_size) {
    throw SehmError("recurrent_forward: input width " + std::to_string(sequence.dim(1)) + " differs from " +
                    std::to_string(params.input_size));
  }
  ad::Tape tape;
  const RecurrentVars cell = bind_recurrent(params, tape, false);
  const ad::Var seq = tape.constant(sequence.reshaped({1, sequence.dim(0), sequence.dim(1)}));
  return run_recurrent(cell, seq).value().reshaped({params.hidden_size});
}

ad::Var classify(const ad::Var& hidden, const ad::Var& weight, const ad::Var& bias) {
  const int64_t batch = hidden.shape()[0];
  const ad::Var logits = ad::matmul(hidden, weight) + bias;  // B x 1
  return ad::sigmoid(ad::reshape(logits, {batch}));
}

double classify(const Tensor& hidden, const ClassifierHead& head) {
  if (hidden.size() != head.weight.size()) throw SehmError("classify: hidden size differs from head weight");
  double logit = head.bias.item();
  for (size_t i = 0; i < hidden.size(); ++i) {
    if (!std::isfinite(hidden[i])) throw SehmError("classify: non-finite hidden state");
    logit += hidden[i] * head.weight[i];
  }
  return logit >= 0.0 ? 1.0 / (1.0 + std::exp(-logit)) : std::exp(logit) / (1.0 + std::exp(logit));
}

ad::Var bce_loss(const ad::Var& prob, const ad::Var& labels) {
  if (prob.shape() != labels.shape()) {
    throw SehmError("bce_loss: probability shape " + shape_string(prob.shape()) + " vs labels " +
                    shape_string(labels.shape()));
  }
  ad::Tape& tape = *prob.tape();
  const ad::Var p = ad::clamp(prob, kProbFloor, 1.0 - kProbFloor);
  const ad::Var one = tape.constant(Tensor::scalar(1.0));
  const ad::Var per_sample = labels * ad::log(p) + (one - labels) * ad::log(one - p);
  return -ad::mean_all(per_sample);
}

double bce_loss(double p, double y) {
  p = std::clamp(p, kProbFloor, 1.0 - kProbFloor);
  return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

}  // namespace sehm
