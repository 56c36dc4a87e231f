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

// Tape-based reverse-mode differentiation.
//
// A Tape records every primitive application in creation order, so node ids
// are a topological order by construction. Values are immutable once
// recorded. backward() walks the tape in reverse id order and never mutates
// it, which makes a second backward pass from another scalar node valid.
// References returned by value() and shape() stay valid for the tape's
// lifetime.
//
// Elementwise binary primitives broadcast numpy-style. Matrix multiply takes
// rank-2 or rank-3 operands; a rank-2 operand is broadcast over the batch
// axis of a rank-3 one.

#ifndef SEHM_AUTODIFF_H_
#define SEHM_AUTODIFF_H_

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sehm/tensor.h"

namespace sehm::ad {

using NodeId = int32_t;

enum class PrimitiveKind {
  kLeaf,
  kConstant,
  kMatMul,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kExp,
  kLog,
  kSigmoid,
  kTanh,
  kRelu,
  kSoftplus,
  kAbs,
  kSqrt,
  kSquare,
  kScale,
  kClamp,
  kSoftmax,
  kSum,
  kMean,
  kNorm,
  kConcat,
  kReshape,
  kTranspose,
  kSlice,
  kSpectralNorm,
  kFeatureMap,
};

const char* kind_name(PrimitiveKind kind);

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  NodeId id() const { return id_; }
  Tape* tape() const { return tape_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, NodeId id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  NodeId id_ = -1;
};

// Handed to a backward rule; routes the rule's vector-Jacobian products into
// the gradient buffers of the node's inputs.
class GradSink {
 public:
  // Whether input `k` lies on a path to a differentiable leaf.
  bool wants(size_t k) const;
  void accumulate(size_t k, Tensor grad);
  // Buffer for input `k` shaped `shape`, zero-filled on first use, for rules
  // that add into a small part of a large input in place.
  Tensor& buffer(size_t k, const Shape& shape);

 private:
  friend class Tape;
  GradSink(std::span<const NodeId> inputs, std::vector<Tensor>& grads,
           std::vector<char>& present, const std::vector<char>& requires_grad)
      : inputs_(inputs), grads_(grads), present_(present), requires_grad_(requires_grad) {}

  std::span<const NodeId> inputs_;
  std::vector<Tensor>& grads_;
  std::vector<char>& present_;
  const std::vector<char>& requires_grad_;
};

using BackwardFn = std::function<void(const Tensor& grad_out, GradSink& sink)>;

// Gradient of one scalar node with respect to every node of the tape.
class Gradients {
 public:
  // Zeros shaped like `v` when `v` does not influence the loss.
  Tensor operator[](const Var& v) const;
  bool reached(const Var& v) const;

 private:
  friend class Tape;
  const Tape* tape_ = nullptr;
  std::vector<Tensor> grads_;
  std::vector<char> present_;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Differentiable input.
  Var leaf(Tensor value);
  // Input that is never differentiated.
  Var constant(Tensor value);

  // Appends a primitive application. Rejects non-finite outputs with a
  // diagnostic naming the primitive. Custom primitives (spectral norm) enter
  // through this entry point.
  Var record(PrimitiveKind kind, std::vector<NodeId> inputs, Tensor value, BackwardFn backward);

  Gradients backward(const Var& loss) const;

  size_t size() const { return nodes_.size(); }
  const Tensor& value(NodeId id) const { return nodes_[static_cast<size_t>(id)].value; }
  PrimitiveKind kind(NodeId id) const { return nodes_[static_cast<size_t>(id)].kind; }
  std::span<const NodeId> inputs(NodeId id) const { return nodes_[static_cast<size_t>(id)].inputs; }
  bool requires_grad(NodeId id) const { return requires_grad_[static_cast<size_t>(id)] != 0; }

  // Inputs of the exponential are clamped to [-limit, limit].
  double exp_clamp() const { return exp_clamp_; }
  void set_exp_clamp(double limit);

 private:
  struct Node {
    PrimitiveKind kind;
    std::vector<NodeId> inputs;
    Tensor value;
    BackwardFn backward;
  };

  // A deque keeps value() references valid while later nodes are appended.
  std::deque<Node> nodes_;
  std::vector<char> requires_grad_;
  double exp_clamp_ = 30.0;
};

// ---- primitives -----------------------------------------------------------

Var matmul(const Var& a, const Var& b);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);

Var exp(const Var& a);
Var log(const Var& a);
Var sigmoid(const Var& a);
Var tanh(const Var& a);
Var relu(const Var& a);
Var softplus(const Var& a);
Var abs(const Var& a);
Var sqrt(const Var& a);
Var square(const Var& a);
Var scale(const Var& a, double factor);
Var clamp(const Var& a, double lo, double hi);

Var softmax(const Var& a, int axis);
Var sum(const Var& a, int axis, bool keepdim = false);
Var sum_all(const Var& a);
Var mean(const Var& a, int axis, bool keepdim = false);
Var mean_all(const Var& a);
// Euclidean norm along `axis`; the subgradient at the origin is zero.
Var norm(const Var& a, int axis, bool keepdim = false);

Var concat(const std::vector<Var>& parts, int axis);
Var reshape(const Var& a, Shape shape);
Var transpose(const Var& a, int axis0, int axis1);
Var slice(const Var& a, int axis, int64_t begin, int64_t end);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator/(const Var& a, const Var& b) { return div(a, b); }
inline Var operator*(const Var& a, double c) { return scale(a, c); }
inline Var operator*(double c, const Var& a) { return scale(a, c); }
inline Var operator-(const Var& a) { return scale(a, -1.0); }

// ---- tensor kernels shared with non-differentiated code paths -------------

// C = op(A) * op(B) (+ C when accumulate) for row-major buffers.
void gemm(std::span<const double> a, std::span<const double> b, std::span<double> c,
          int64_t m, int64_t k, int64_t n, bool transpose_a, bool transpose_b,
          bool accumulate);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose2d(const Tensor& a);

}  // namespace sehm::ad

#endif  // SEHM_AUTODIFF_H_
