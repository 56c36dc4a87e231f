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

#ifndef SEHM_RECURRENT_H_
#define SEHM_RECURRENT_H_

#include <cstdint>
#include <random>
#include <string>

#include "sehm/autodiff.h"
#include "sehm/optim.h"

namespace sehm {

enum class CellKind { kGru, kLstm };

const char* cell_name(CellKind kind);
CellKind parse_cell(const std::string& name);

// Gate blocks are stacked along the output axis:
//   GRU  [reset | update | candidate]
//   LSTM [input | forget | cell | output]
// Row-vector convention: gates = x W_input + b_input + h W_hidden + b_hidden.
struct RecurrentParams {
  CellKind kind = CellKind::kGru;
  int64_t input_size = 0;
  int64_t hidden_size = 0;
  Tensor w_input;   // input_size x (G * hidden)
  Tensor w_hidden;  // hidden x (G * hidden)
  Tensor b_input;   // G * hidden
  Tensor b_hidden;  // G * hidden

  static int64_t gate_count(CellKind kind) { return kind == CellKind::kGru ? 3 : 4; }

  // Uniform in +-1/sqrt(hidden), plus 1 on the update (GRU) or forget (LSTM)
  // gate input bias.
  static RecurrentParams init(CellKind kind, int64_t input_size, int64_t hidden_size, std::mt19937_64& rng);
  static RecurrentParams zeros(CellKind kind, int64_t input_size, int64_t hidden_size);

  void add_to(ParameterSet& set, const std::string& prefix) const;
  static RecurrentParams from(const ParameterSet& set, const std::string& prefix, CellKind kind);
};

struct ClassifierHead {
  Tensor weight;  // hidden
  Tensor bias;    // scalar (shape [1])
};

struct RecurrentVars {
  CellKind kind = CellKind::kGru;
  int64_t hidden_size = 0;
  ad::Var w_input;
  ad::Var w_hidden;
  ad::Var b_input;
  ad::Var b_hidden;
};

RecurrentVars bind_recurrent(const RecurrentParams& params, ad::Tape& tape, bool trainable);

// One cell application for a batch: x is B x In, h (and c for LSTM) B x H.
struct CellState {
  ad::Var h;
  ad::Var c;  // LSTM only
};
CellState cell_step(const RecurrentVars& cell, const ad::Var& x, const CellState& state);

// Runs the cell left to right over B x L x In from a zero state and returns
// the final hidden state, B x H.
ad::Var run_recurrent(const RecurrentVars& cell, const ad::Var& sequence);

// Single-sequence form: L x In to the final hidden vector.
Tensor recurrent_forward(const Tensor& sequence, const RecurrentParams& params);

// Probability of the positive class for a batch of hidden states (B x H),
// returned as length-B. weight is H x 1, bias has one element.
ad::Var classify(const ad::Var& hidden, const ad::Var& weight, const ad::Var& bias);
double classify(const Tensor& hidden, const ClassifierHead& head);

// Mean binary cross-entropy over the batch with p clamped to
// [1e-12, 1 - 1e-12].
ad::Var bce_loss(const ad::Var& prob, const ad::Var& labels);
double bce_loss(double p, double y);

}  // namespace sehm

#endif  // SEHM_RECURRENT_H_
