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

#include "sehm/autodiff.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include <Eigen/Core>

namespace sehm::ad {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

[[noreturn]] void fail(PrimitiveKind kind, const std::string& msg) {
  throw SehmError(std::string(kind_name(kind)) + ": " + msg);
}

[[noreturn]] void shape_mismatch(PrimitiveKind kind, const Shape& a, const Shape& b) {
  fail(kind, "incompatible shapes " + shape_string(a) + " and " + shape_string(b));
}

Tape& tape_of(const Var& a) {
  if (!a.valid()) throw SehmError("operation on an unbound Var");
  return *a.tape();
}

Tape& tape_of(const Var& a, const Var& b) {
  Tape& t = tape_of(a);
  if (b.tape() != &t) throw SehmError("operands recorded on different tapes");
  return t;
}

int normalize_axis(PrimitiveKind kind, int axis, int rank) {
  if (axis < 0) axis += rank;
  if (axis < 0 || axis >= rank) fail(kind, "axis out of range for rank " + std::to_string(rank));
  return axis;
}

// outer x n x inner decomposition around `axis`.
struct AxisSplit {
  int64_t outer = 1;
  int64_t n = 1;
  int64_t inner = 1;
};

AxisSplit split_at(const Shape& shape, int axis) {
  AxisSplit s;
  for (int i = 0; i < axis; ++i) s.outer *= shape[static_cast<size_t>(i)];
  s.n = shape[static_cast<size_t>(axis)];
  for (size_t i = static_cast<size_t>(axis) + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

// ---- broadcasting ---------------------------------------------------------

Shape broadcast_shape(PrimitiveKind kind, const Shape& a, const Shape& b) {
  const size_t rank = std::max(a.size(), b.size());
  Shape out(rank, 1);
  for (size_t i = 0; i < rank; ++i) {
    const int64_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
    const int64_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
    if (da != db && da != 1 && db != 1) shape_mismatch(kind, a, b);
    out[i] = std::max(da, db);
  }
  return out;
}

enum class BroadcastMode { kSame, kScalar, kSuffix, kPrefix, kGeneral };

// How an operand of shape `in` is laid out inside a broadcast result `out`.
struct Broadcast {
  BroadcastMode mode = BroadcastMode::kSame;
  int64_t period = 1;  // suffix: input size; prefix: inner block length
  std::vector<int64_t> map;  // general: input index per output index

  int64_t index(int64_t i) const {
    switch (mode) {
      case BroadcastMode::kSame: return i;
      case BroadcastMode::kScalar: return 0;
      case BroadcastMode::kSuffix: return i % period;
      case BroadcastMode::kPrefix: return i / period;
      case BroadcastMode::kGeneral: return map[static_cast<size_t>(i)];
    }
    return i;
  }
};

Broadcast plan_broadcast(const Shape& out, const Shape& in) {
  Broadcast plan;
  const int64_t n_in = shape_numel(in);
  if (in == out) return plan;
  if (n_in == 1) {
    plan.mode = BroadcastMode::kScalar;
    return plan;
  }
  const size_t rank = out.size();
  Shape padded(rank, 1);
  for (size_t i = 0; i < in.size(); ++i) padded[rank - in.size() + i] = in[i];
  if (padded == out) {
    plan.mode = BroadcastMode::kSame;
    return plan;
  }
  // Suffix: leading ones then the trailing extents of `out`.
  {
    size_t first = 0;
    while (first < rank && padded[first] == 1) ++first;
    bool ok = true;
    for (size_t i = first; i < rank; ++i) ok = ok && padded[i] == out[i];
    if (ok) {
      plan.mode = BroadcastMode::kSuffix;
      plan.period = n_in;
      return plan;
    }
  }
  // Prefix: the leading extents of `out` then trailing ones.
  {
    size_t last = rank;
    while (last > 0 && padded[last - 1] == 1) --last;
    bool ok = true;
    for (size_t i = 0; i < last; ++i) ok = ok && padded[i] == out[i];
    if (ok) {
      int64_t inner = 1;
      for (size_t i = last; i < rank; ++i) inner *= out[i];
      plan.mode = BroadcastMode::kPrefix;
      plan.period = inner;
      return plan;
    }
  }
  plan.mode = BroadcastMode::kGeneral;
  std::vector<int64_t> stride(rank, 0);
  int64_t s = 1;
  for (size_t i = rank; i-- > 0;) {
    stride[i] = padded[i] == 1 ? 0 : s;
    s *= padded[i];
  }
  const int64_t n_out = shape_numel(out);
  plan.map.resize(static_cast<size_t>(n_out));
  std::vector<int64_t> counter(rank, 0);
  int64_t idx = 0;
  for (int64_t i = 0; i < n_out; ++i) {
    plan.map[static_cast<size_t>(i)] = idx;
    for (size_t d = rank; d-- > 0;) {
      ++counter[d];
      idx += stride[d];
      if (counter[d] < out[d]) break;
      idx -= stride[d] * counter[d];
      counter[d] = 0;
    }
  }
  return plan;
}

template <class F>
Tensor broadcast_apply(const Tensor& a, const Tensor& b, const Shape& out_shape, F f) {
  Tensor out(out_shape);
  auto o = out.mutable_data();
  const auto av = a.data();
  const auto bv = b.data();
  const auto n = static_cast<int64_t>(o.size());
  const Broadcast pa = plan_broadcast(out_shape, a.shape());
  const Broadcast pb = plan_broadcast(out_shape, b.shape());
  if (pa.mode == BroadcastMode::kSame && pb.mode == BroadcastMode::kSame) {
    for (int64_t i = 0; i < n; ++i) o[i] = f(av[i], bv[i]);
  } else if (pa.mode == BroadcastMode::kSame && pb.mode == BroadcastMode::kScalar) {
    const double s = bv[0];
    for (int64_t i = 0; i < n; ++i) o[i] = f(av[i], s);
  } else if (pa.mode == BroadcastMode::kSame && pb.mode == BroadcastMode::kSuffix) {
    const int64_t p = pb.period;
    for (int64_t i = 0; i < n; i += p) {
      for (int64_t j = 0; j < p; ++j) o[i + j] = f(av[i + j], bv[j]);
    }
  } else if (pa.mode == BroadcastMode::kSame && pb.mode == BroadcastMode::kPrefix) {
    const int64_t p = pb.period;
    for (int64_t i = 0, r = 0; i < n; i += p, ++r) {
      const double s = bv[r];
      for (int64_t j = 0; j < p; ++j) o[i + j] = f(av[i + j], s);
    }
  } else {
    for (int64_t i = 0; i < n; ++i) o[i] = f(av[pa.index(i)], bv[pb.index(i)]);
  }
  return out;
}

// Sums a broadcast-shaped gradient back down to `target`.
Tensor reduce_to(const Tensor& g, const Shape& target) {
  if (g.shape() == target) return g;
  Tensor out(target);
  auto o = out.mutable_data();
  const auto gv = g.data();
  const Broadcast plan = plan_broadcast(g.shape(), target);
  const auto n = static_cast<int64_t>(gv.size());
  if (plan.mode == BroadcastMode::kSame) {
    for (int64_t i = 0; i < n; ++i) o[i] = gv[i];
    return out;
  }
  for (int64_t i = 0; i < n; ++i) o[plan.index(i)] += gv[i];
  return out;
}

template <class F>
Tensor map_unary(const Tensor& a, F f) {
  Tensor out(a.shape());
  auto o = out.mutable_data();
  const auto av = a.data();
  for (size_t i = 0; i < o.size(); ++i) o[i] = f(av[i]);
  return out;
}

// out[i] = g[i] * f(x[i], y[i])
template <class F>
Tensor chain_unary(const Tensor& g, const Tensor& x, const Tensor& y, F f) {
  Tensor out(g.shape());
  auto o = out.mutable_data();
  const auto gv = g.data();
  const auto xv = x.data();
  const auto yv = y.data();
  for (size_t i = 0; i < o.size(); ++i) o[i] = gv[i] * f(xv[i], yv[i]);
  return out;
}

// Records a pointwise primitive whose derivative is expressible from the
// input and output values.
template <class Fwd, class Deriv>
Var unary(PrimitiveKind kind, const Var& a, Fwd fwd, Deriv deriv) {
  Tape& t = tape_of(a);
  const NodeId ia = a.id();
  Tensor value = map_unary(a.value(), fwd);
  const NodeId out_id = static_cast<NodeId>(t.size());
  return t.record(kind, {ia}, std::move(value),
                  [&t, ia, out_id, deriv](const Tensor& g, GradSink& sink) {
                    if (!sink.wants(0)) return;
                    sink.accumulate(0, chain_unary(g, t.value(ia), t.value(out_id), deriv));
                  });
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor permute_swap(const Tensor& a, int axis0, int axis1) {
  const Shape& in = a.shape();
  Shape out_shape = in;
  std::swap(out_shape[static_cast<size_t>(axis0)], out_shape[static_cast<size_t>(axis1)]);
  const size_t rank = in.size();
  std::vector<int64_t> in_stride(rank, 1);
  for (size_t i = rank - 1; i-- > 0;) in_stride[i] = in_stride[i + 1] * in[i + 1];
  std::vector<int64_t> stride = in_stride;
  std::swap(stride[static_cast<size_t>(axis0)], stride[static_cast<size_t>(axis1)]);
  Tensor out(out_shape);
  auto o = out.mutable_data();
  const auto av = a.data();
  std::vector<int64_t> counter(rank, 0);
  int64_t idx = 0;
  for (size_t i = 0; i < o.size(); ++i) {
    o[i] = av[static_cast<size_t>(idx)];
    for (size_t d = rank; d-- > 0;) {
      ++counter[d];
      idx += stride[d];
      if (counter[d] < out_shape[d]) break;
      idx -= stride[d] * counter[d];
      counter[d] = 0;
    }
  }
  return out;
}

Tensor sum_along(const Tensor& a, int axis, bool keepdim) {
  const AxisSplit s = split_at(a.shape(), axis);
  Shape out_shape = a.shape();
  if (keepdim) {
    out_shape[static_cast<size_t>(axis)] = 1;
  } else {
    out_shape.erase(out_shape.begin() + axis);
  }
  Tensor out(out_shape);
  auto o = out.mutable_data();
  const auto av = a.data();
  for (int64_t p = 0; p < s.outer; ++p) {
    for (int64_t j = 0; j < s.n; ++j) {
      const double* src = av.data() + (p * s.n + j) * s.inner;
      double* dst = o.data() + p * s.inner;
      for (int64_t q = 0; q < s.inner; ++q) dst[q] += src[q];
    }
  }
  return out;
}

// Expands a reduced tensor (outer x inner) back along `axis` of `shape`.
Tensor expand_along(const Tensor& reduced, const Shape& shape, int axis, double factor) {
  const AxisSplit s = split_at(shape, axis);
  Tensor out(shape);
  auto o = out.mutable_data();
  const auto rv = reduced.data();
  for (int64_t p = 0; p < s.outer; ++p) {
    for (int64_t j = 0; j < s.n; ++j) {
      double* dst = o.data() + (p * s.n + j) * s.inner;
      const double* src = rv.data() + p * s.inner;
      for (int64_t q = 0; q < s.inner; ++q) dst[q] = src[q] * factor;
    }
  }
  return out;
}

}  // namespace

const char* kind_name(PrimitiveKind kind) {
  switch (kind) {
    case PrimitiveKind::kLeaf: return "leaf";
    case PrimitiveKind::kConstant: return "constant";
    case PrimitiveKind::kMatMul: return "matmul";
    case PrimitiveKind::kAdd: return "add";
    case PrimitiveKind::kSub: return "sub";
    case PrimitiveKind::kMul: return "mul";
    case PrimitiveKind::kDiv: return "div";
    case PrimitiveKind::kExp: return "exp";
    case PrimitiveKind::kLog: return "log";
    case PrimitiveKind::kSigmoid: return "sigmoid";
    case PrimitiveKind::kTanh: return "tanh";
    case PrimitiveKind::kRelu: return "relu";
    case PrimitiveKind::kSoftplus: return "softplus";
    case PrimitiveKind::kAbs: return "abs";
    case PrimitiveKind::kSqrt: return "sqrt";
    case PrimitiveKind::kSquare: return "square";
    case PrimitiveKind::kScale: return "scale";
    case PrimitiveKind::kClamp: return "clamp";
    case PrimitiveKind::kSoftmax: return "softmax";
    case PrimitiveKind::kSum: return "sum";
    case PrimitiveKind::kMean: return "mean";
    case PrimitiveKind::kNorm: return "norm";
    case PrimitiveKind::kConcat: return "concat";
    case PrimitiveKind::kReshape: return "reshape";
    case PrimitiveKind::kTranspose: return "transpose";
    case PrimitiveKind::kSlice: return "slice";
    case PrimitiveKind::kSpectralNorm: return "spectral_norm";
    case PrimitiveKind::kFeatureMap: return "feature_map";
  }
  return "unknown";
}

// ---- Var / GradSink / Gradients ------------------------------------------

const Tensor& Var::value() const {
  if (!valid()) throw SehmError("value() on an unbound Var");
  return tape_->value(id_);
}

bool GradSink::wants(size_t k) const {
  return requires_grad_[static_cast<size_t>(inputs_[k])] != 0;
}

void GradSink::accumulate(size_t k, Tensor grad) {
  const auto id = static_cast<size_t>(inputs_[k]);
  if (!requires_grad_[id]) return;
  if (!present_[id]) {
    grads_[id] = std::move(grad);
    present_[id] = 1;
  } else {
    grads_[id].add_(grad);
  }
}

Tensor& GradSink::buffer(size_t k, const Shape& shape) {
  const auto id = static_cast<size_t>(inputs_[k]);
  if (!present_[id]) {
    grads_[id] = Tensor(shape);
    present_[id] = 1;
  }
  return grads_[id];
}

Tensor Gradients::operator[](const Var& v) const {
  if (v.tape() != tape_) throw SehmError("gradient requested for a Var from another tape");
  const auto id = static_cast<size_t>(v.id());
  if (id < present_.size() && present_[id]) return grads_[id];
  return Tensor(v.shape());
}

bool Gradients::reached(const Var& v) const {
  const auto id = static_cast<size_t>(v.id());
  return v.tape() == tape_ && id < present_.size() && present_[id];
}

// ---- Tape -----------------------------------------------------------------

Var Tape::leaf(Tensor value) {
  if (!value.all_finite()) throw SehmError("leaf: non-finite input");
  const auto id = static_cast<NodeId>(nodes_.size());
  nodes_.push_back({PrimitiveKind::kLeaf, {}, std::move(value), nullptr});
  requires_grad_.push_back(1);
  return Var(this, id);
}

Var Tape::constant(Tensor value) {
  if (!value.all_finite()) throw SehmError("constant: non-finite input");
  const auto id = static_cast<NodeId>(nodes_.size());
  nodes_.push_back({PrimitiveKind::kConstant, {}, std::move(value), nullptr});
  requires_grad_.push_back(0);
  return Var(this, id);
}

Var Tape::record(PrimitiveKind kind, std::vector<NodeId> inputs, Tensor value, BackwardFn backward) {
  if (!value.all_finite()) fail(kind, "non-finite output");
  const auto id = static_cast<NodeId>(nodes_.size());
  char needs = 0;
  for (NodeId in : inputs) {
    if (in < 0 || in >= id) fail(kind, "input refers to a node that is not yet recorded");
    needs = static_cast<char>(needs | requires_grad_[static_cast<size_t>(in)]);
  }
  nodes_.push_back({kind, std::move(inputs), std::move(value), needs ? std::move(backward) : nullptr});
  requires_grad_.push_back(needs);
  return Var(this, id);
}

void Tape::set_exp_clamp(double limit) {
  if (!(limit > 0.0)) throw SehmError("exp clamp must be positive");
  exp_clamp_ = limit;
}

Gradients Tape::backward(const Var& loss) const {
  if (loss.tape() != this) throw SehmError("backward: loss node belongs to another tape");
  const Tensor& lv = value(loss.id());
  if (lv.size() != 1) {
    throw SehmError("backward: loss node must be scalar, got shape " + shape_string(lv.shape()));
  }
  Gradients out;
  out.tape_ = this;
  const auto n = static_cast<size_t>(loss.id()) + 1;
  out.grads_.resize(n);
  out.present_.assign(n, 0);
  out.grads_[n - 1] = Tensor::full(lv.shape(), 1.0);
  out.present_[n - 1] = 1;
  for (size_t id = n; id-- > 0;) {
    if (!out.present_[id]) continue;
    const Node& node = nodes_[id];
    if (!node.backward) continue;
    GradSink sink(node.inputs, out.grads_, out.present_, requires_grad_);
    node.backward(out.grads_[id], sink);
  }
  return out;
}

// ---- gemm -----------------------------------------------------------------

constexpr int64_t kSmallGemm = 8192;

void gemm(std::span<const double> a, std::span<const double> b, std::span<double> c,
          int64_t m, int64_t k, int64_t n, bool transpose_a, bool transpose_b, bool accumulate) {
  if (m * k * n <= kSmallGemm) {
    // Direct loops; Eigen's blocking overhead dominates at these sizes.
    double* cp = c.data();
    if (!accumulate) std::fill_n(cp, m * n, 0.0);
    const double* ap = a.data();
    const double* bp = b.data();
    if (transpose_b && !transpose_a) {
      for (int64_t i = 0; i < m; ++i) {
        const double* arow = ap + i * k;
        for (int64_t j = 0; j < n; ++j) {
          const double* brow = bp + j * k;
          double sum = 0.0;
          for (int64_t p = 0; p < k; ++p) sum += arow[p] * brow[p];
          cp[i * n + j] += sum;
        }
      }
      return;
    }
    for (int64_t i = 0; i < m; ++i) {
      double* crow = cp + i * n;
      for (int64_t p = 0; p < k; ++p) {
        const double av = transpose_a ? ap[p * m + i] : ap[i * k + p];
        if (transpose_b) {
          for (int64_t j = 0; j < n; ++j) crow[j] += av * bp[j * k + p];
        } else {
          const double* brow = bp + p * n;
          for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
      }
    }
    return;
  }
  const ConstMap am(a.data(), transpose_a ? k : m, transpose_a ? m : k);
  const ConstMap bm(b.data(), transpose_b ? n : k, transpose_b ? k : n);
  MutMap cm(c.data(), m, n);
  if (!accumulate) cm.setZero();
  if (!transpose_a && !transpose_b) {
    cm.noalias() += am * bm;
  } else if (transpose_a && !transpose_b) {
    cm.noalias() += am.transpose() * bm;
  } else if (!transpose_a && transpose_b) {
    cm.noalias() += am * bm.transpose();
  } else {
    cm.noalias() += am.transpose() * bm.transpose();
  }
}

namespace {

struct MatMulDims {
  int64_t batch = 1;
  int64_t m = 0;
  int64_t k = 0;
  int64_t n = 0;
  int rank_a = 2;
  int rank_b = 2;
};

MatMulDims matmul_dims(const Shape& a, const Shape& b) {
  const auto bad = [&] { shape_mismatch(PrimitiveKind::kMatMul, a, b); };
  if ((a.size() != 2 && a.size() != 3) || (b.size() != 2 && b.size() != 3)) bad();
  MatMulDims d;
  d.rank_a = static_cast<int>(a.size());
  d.rank_b = static_cast<int>(b.size());
  d.m = a[a.size() - 2];
  d.k = a[a.size() - 1];
  d.n = b[b.size() - 1];
  if (b[b.size() - 2] != d.k) bad();
  if (d.rank_a == 3 && d.rank_b == 3 && a[0] != b[0]) bad();
  d.batch = d.rank_a == 3 ? a[0] : (d.rank_b == 3 ? b[0] : 1);
  return d;
}

Shape matmul_shape(const MatMulDims& d) {
  if (d.rank_a == 2 && d.rank_b == 2) return {d.m, d.n};
  return {d.batch, d.m, d.n};
}

void matmul_into(const Tensor& a, const Tensor& b, const MatMulDims& d, Tensor& out) {
  const auto av = a.data();
  const auto bv = b.data();
  auto ov = out.mutable_data();
  if (d.rank_b == 2) {
    // Rank-3 @ rank-2 flattens into one product.
    gemm(av, bv, ov, d.batch * d.m, d.k, d.n, false, false, false);
    return;
  }
  for (int64_t p = 0; p < d.batch; ++p) {
    const auto a_p = d.rank_a == 3 ? av.subspan(static_cast<size_t>(p * d.m * d.k),
                                                static_cast<size_t>(d.m * d.k))
                                   : av;
    gemm(a_p, bv.subspan(static_cast<size_t>(p * d.k * d.n), static_cast<size_t>(d.k * d.n)),
         ov.subspan(static_cast<size_t>(p * d.m * d.n), static_cast<size_t>(d.m * d.n)), d.m, d.k,
         d.n, false, false, false);
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  const MatMulDims d = matmul_dims(a.shape(), b.shape());
  Tensor out(matmul_shape(d));
  matmul_into(a, b, d, out);
  return out;
}

Tensor transpose2d(const Tensor& a) {
  if (a.rank() != 2) throw SehmError("transpose2d expects a matrix, got " + shape_string(a.shape()));
  return permute_swap(a, 0, 1);
}

// ---- primitives -----------------------------------------------------------

Var matmul(const Var& a, const Var& b) {
  Tape& t = tape_of(a, b);
  const MatMulDims d = matmul_dims(a.shape(), b.shape());
  Tensor value(matmul_shape(d));
  matmul_into(a.value(), b.value(), d, value);
  const NodeId ia = a.id();
  const NodeId ib = b.id();
  return t.record(PrimitiveKind::kMatMul, {ia, ib}, std::move(value),
                  [&t, ia, ib, d](const Tensor& g, GradSink& sink) {
    const Tensor& av = t.value(ia);
    const Tensor& bv = t.value(ib);
    const auto gs = g.data();
    if (sink.wants(0)) {
      Tensor ga(av.shape());
      auto gav = ga.mutable_data();
      if (d.rank_b == 2) {
        gemm(gs, bv.data(), gav, d.batch * d.m, d.n, d.k, false, true, false);
      } else {
        for (int64_t p = 0; p < d.batch; ++p) {
          const auto gp = gs.subspan(static_cast<size_t>(p * d.m * d.n), static_cast<size_t>(d.m * d.n));
          const auto bp = bv.data().subspan(static_cast<size_t>(p * d.k * d.n), static_cast<size_t>(d.k * d.n));
          if (d.rank_a == 3) {
            gemm(gp, bp, gav.subspan(static_cast<size_t>(p * d.m * d.k), static_cast<size_t>(d.m * d.k)),
                 d.m, d.n, d.k, false, true, false);
          } else {
            gemm(gp, bp, gav, d.m, d.n, d.k, false, true, true);
          }
        }
      }
      sink.accumulate(0, std::move(ga));
    }
    if (sink.wants(1)) {
      Tensor gb(bv.shape());
      auto gbv = gb.mutable_data();
      if (d.rank_b == 2) {
        gemm(av.data(), gs, gbv, d.k, d.batch * d.m, d.n, true, false, false);
      } else {
        for (int64_t p = 0; p < d.batch; ++p) {
          const auto gp = gs.subspan(static_cast<size_t>(p * d.m * d.n), static_cast<size_t>(d.m * d.n));
          const auto ap = d.rank_a == 3 ? av.data().subspan(static_cast<size_t>(p * d.m * d.k),
                                                            static_cast<size_t>(d.m * d.k))
                                        : av.data();
          gemm(ap, gp, gbv.subspan(static_cast<size_t>(p * d.k * d.n), static_cast<size_t>(d.k * d.n)),
               d.k, d.m, d.n, true, false, false);
        }
      }
      sink.accumulate(1, std::move(gb));
    }
  });
}

Var add(const Var& a, const Var& b) {
  Tape& t = tape_of(a, b);
  const Shape out = broadcast_shape(PrimitiveKind::kAdd, a.shape(), b.shape());
  Tensor value = broadcast_apply(a.value(), b.value(), out, [](double x, double y) { return x + y; });
  Shape sa = a.shape(), sb = b.shape();
  return t.record(PrimitiveKind::kAdd, {a.id(), b.id()}, std::move(value),
                  [sa, sb](const Tensor& g, GradSink& sink) {
                    if (sink.wants(0)) sink.accumulate(0, reduce_to(g, sa));
                    if (sink.wants(1)) sink.accumulate(1, reduce_to(g, sb));
                  });
}

Var sub(const Var& a, const Var& b) {
  Tape& t = tape_of(a, b);
  const Shape out = broadcast_shape(PrimitiveKind::kSub, a.shape(), b.shape());
  Tensor value = broadcast_apply(a.value(), b.value(), out, [](double x, double y) { return x - y; });
  Shape sa = a.shape(), sb = b.shape();
  return t.record(PrimitiveKind::kSub, {a.id(), b.id()}, std::move(value),
                  [sa, sb](const Tensor& g, GradSink& sink) {
                    if (sink.wants(0)) sink.accumulate(0, reduce_to(g, sa));
                    if (sink.wants(1)) sink.accumulate(1, reduce_to(map_unary(g, [](double x) { return -x; }), sb));
                  });
}

Var mul(const Var& a, const Var& b) {
  Tape& t = tape_of(a, b);
  const Shape out = broadcast_shape(PrimitiveKind::kMul, a.shape(), b.shape());
  Tensor value = broadcast_apply(a.value(), b.value(), out, [](double x, double y) { return x * y; });
  const NodeId ia = a.id(), ib = b.id();
  return t.record(PrimitiveKind::kMul, {ia, ib}, std::move(value),
                  [&t, ia, ib, out](const Tensor& g, GradSink& sink) {
    const auto times = [](double x, double y) { return x * y; };
    if (sink.wants(0)) {
      sink.accumulate(0, reduce_to(broadcast_apply(g, t.value(ib), out, times), t.value(ia).shape()));
    }
    if (sink.wants(1)) {
      sink.accumulate(1, reduce_to(broadcast_apply(g, t.value(ia), out, times), t.value(ib).shape()));
    }
  });
}

Var div(const Var& a, const Var& b) {
  Tape& t = tape_of(a, b);
  const Shape out = broadcast_shape(PrimitiveKind::kDiv, a.shape(), b.shape());
  Tensor value = broadcast_apply(a.value(), b.value(), out, [](double x, double y) { return x / y; });
  const NodeId ia = a.id(), ib = b.id();
  const auto out_id = static_cast<NodeId>(t.size());
  return t.record(PrimitiveKind::kDiv, {ia, ib}, std::move(value),
                  [&t, ia, ib, out_id, out](const Tensor& g, GradSink& sink) {
    const Tensor g_over_b = broadcast_apply(g, t.value(ib), out, [](double x, double y) { return x / y; });
    if (sink.wants(1)) {
      Tensor gb(out);
      auto gbv = gb.mutable_data();
      const auto q = g_over_b.data();
      const auto y = t.value(out_id).data();
      for (size_t i = 0; i < gbv.size(); ++i) gbv[i] = -q[i] * y[i];
      sink.accumulate(1, reduce_to(gb, t.value(ib).shape()));
    }
    if (sink.wants(0)) sink.accumulate(0, reduce_to(g_over_b, t.value(ia).shape()));
  });
}

Var exp(const Var& a) {
  const double limit = tape_of(a).exp_clamp();
  return unary(
      PrimitiveKind::kExp, a, [limit](double x) { return std::exp(std::clamp(x, -limit, limit)); },
      [limit](double x, double y) { return (x >= -limit && x <= limit) ? y : 0.0; });
}

Var log(const Var& a) {
  return unary(
      PrimitiveKind::kLog, a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Var sigmoid(const Var& a) {
  return unary(PrimitiveKind::kSigmoid, a, stable_sigmoid,
               [](double, double y) { return y * (1.0 - y); });
}

Var tanh(const Var& a) {
  return unary(
      PrimitiveKind::kTanh, a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var relu(const Var& a) {
  return unary(
      PrimitiveKind::kRelu, a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var softplus(const Var& a) {
  return unary(
      PrimitiveKind::kSoftplus, a,
      [](double x) { return std::log1p(std::exp(-std::abs(x))) + std::max(x, 0.0); },
      [](double x, double) { return stable_sigmoid(x); });
}

Var abs(const Var& a) {
  return unary(
      PrimitiveKind::kAbs, a, [](double x) { return std::abs(x); },
      [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Var sqrt(const Var& a) {
  return unary(
      PrimitiveKind::kSqrt, a, [](double x) { return std::sqrt(x); },
      [](double, double y) { return y > 0.0 ? 0.5 / y : 0.0; });
}

Var square(const Var& a) {
  return unary(
      PrimitiveKind::kSquare, a, [](double x) { return x * x; },
      [](double x, double) { return 2.0 * x; });
}

Var scale(const Var& a, double factor) {
  return unary(
      PrimitiveKind::kScale, a, [factor](double x) { return x * factor; },
      [factor](double, double) { return factor; });
}

Var clamp(const Var& a, double lo, double hi) {
  if (!(lo <= hi)) fail(PrimitiveKind::kClamp, "lower bound exceeds upper bound");
  return unary(
      PrimitiveKind::kClamp, a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Var softmax(const Var& a, int axis) {
  Tape& t = tape_of(a);
  axis = normalize_axis(PrimitiveKind::kSoftmax, axis, static_cast<int>(a.shape().size()));
  const AxisSplit s = split_at(a.shape(), axis);
  Tensor value(a.shape());
  auto o = value.mutable_data();
  const auto x = a.value().data();
  for (int64_t p = 0; p < s.outer; ++p) {
    for (int64_t q = 0; q < s.inner; ++q) {
      const int64_t base = p * s.n * s.inner + q;
      double mx = x[base];
      for (int64_t j = 1; j < s.n; ++j) mx = std::max(mx, x[base + j * s.inner]);
      double total = 0.0;
      for (int64_t j = 0; j < s.n; ++j) {
        const double e = std::exp(x[base + j * s.inner] - mx);
        o[base + j * s.inner] = e;
        total += e;
      }
      for (int64_t j = 0; j < s.n; ++j) o[base + j * s.inner] /= total;
    }
  }
  const auto out_id = static_cast<NodeId>(t.size());
  return t.record(PrimitiveKind::kSoftmax, {a.id()}, std::move(value),
                  [&t, out_id, s](const Tensor& g, GradSink& sink) {
    if (!sink.wants(0)) return;
    const auto y = t.value(out_id).data();
    const auto gv = g.data();
    Tensor gx(g.shape());
    auto gxv = gx.mutable_data();
    for (int64_t p = 0; p < s.outer; ++p) {
      for (int64_t q = 0; q < s.inner; ++q) {
        const int64_t base = p * s.n * s.inner + q;
        double dot = 0.0;
        for (int64_t j = 0; j < s.n; ++j) dot += gv[base + j * s.inner] * y[base + j * s.inner];
        for (int64_t j = 0; j < s.n; ++j) {
          const int64_t i = base + j * s.inner;
          gxv[i] = y[i] * (gv[i] - dot);
        }
      }
    }
    sink.accumulate(0, std::move(gx));
  });
}

Var sum(const Var& a, int axis, bool keepdim) {
  Tape& t = tape_of(a);
  axis = normalize_axis(PrimitiveKind::kSum, axis, static_cast<int>(a.shape().size()));
  Tensor value = sum_along(a.value(), axis, keepdim);
  Shape in_shape = a.shape();
  return t.record(PrimitiveKind::kSum, {a.id()}, std::move(value),
                  [in_shape, axis](const Tensor& g, GradSink& sink) {
                    if (sink.wants(0)) sink.accumulate(0, expand_along(g, in_shape, axis, 1.0));
                  });
}

Var sum_all(const Var& a) {
  Tape& t = tape_of(a);
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  Shape in_shape = a.shape();
  return t.record(PrimitiveKind::kSum, {a.id()}, Tensor::scalar(total),
                  [in_shape](const Tensor& g, GradSink& sink) {
                    if (sink.wants(0)) sink.accumulate(0, Tensor::full(in_shape, g.item()));
                  });
}

Var mean(const Var& a, int axis, bool keepdim) {
  Tape& t = tape_of(a);
  axis = normalize_axis(PrimitiveKind::kMean, axis, static_cast<int>(a.shape().size()));
  const double n = static_cast<double>(a.shape()[static_cast<size_t>(axis)]);
  Tensor value = map_unary(sum_along(a.value(), axis, keepdim), [n](double v) { return v / n; });
  Shape in_shape = a.shape();
  return t.record(PrimitiveKind::kMean, {a.id()}, std::move(value),
                  [in_shape, axis, n](const Tensor& g, GradSink& sink) {
                    if (sink.wants(0)) sink.accumulate(0, expand_along(g, in_shape, axis, 1.0 / n));
                  });
}

Var mean_all(const Var& a) {
  Tape& t = tape_of(a);
  const double n = static_cast<double>(a.value().size());
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  Shape in_shape = a.shape();
  return t.record(PrimitiveKind::kMean, {a.id()}, Tensor::scalar(total / n),
                  [in_shape, n](const Tensor& g, GradSink& sink) {
                    if (sink.wants(0)) sink.accumulate(0, Tensor::full(in_shape, g.item() / n));
                  });
}

Var norm(const Var& a, int axis, bool keepdim) {
  Tape& t = tape_of(a);
  axis = normalize_axis(PrimitiveKind::kNorm, axis, static_cast<int>(a.shape().size()));
  Tensor squares = map_unary(a.value(), [](double x) { return x * x; });
  Tensor value = map_unary(sum_along(squares, axis, keepdim), [](double v) { return std::sqrt(v); });
  const NodeId ia = a.id();
  const auto out_id = static_cast<NodeId>(t.size());
  return t.record(PrimitiveKind::kNorm, {ia}, std::move(value),
                  [&t, ia, out_id, axis](const Tensor& g, GradSink& sink) {
    if (!sink.wants(0)) return;
    const Tensor& x = t.value(ia);
    const Tensor& y = t.value(out_id);
    Tensor ratio = y;  // g / y per reduced slot
    auto rv = ratio.mutable_data();
    const auto gv = g.data();
    for (size_t i = 0; i < rv.size(); ++i) rv[i] = y[i] > 0.0 ? gv[i] / y[i] : 0.0;
    Tensor gx = expand_along(ratio, x.shape(), axis, 1.0);
    auto gxv = gx.mutable_data();
    const auto xv = x.data();
    for (size_t i = 0; i < gxv.size(); ++i) gxv[i] *= xv[i];
    sink.accumulate(0, std::move(gx));
  });
}

Var concat(const std::vector<Var>& parts, int axis) {
  if (parts.empty()) fail(PrimitiveKind::kConcat, "no inputs");
  Tape& t = tape_of(parts.front());
  const Shape& first = parts.front().shape();
  axis = normalize_axis(PrimitiveKind::kConcat, axis, static_cast<int>(first.size()));
  Shape out_shape = first;
  out_shape[static_cast<size_t>(axis)] = 0;
  std::vector<int64_t> extents;
  std::vector<NodeId> ids;
  for (const Var& p : parts) {
    if (p.tape() != &t) throw SehmError("concat operands recorded on different tapes");
    Shape s = p.shape();
    if (s.size() != first.size()) shape_mismatch(PrimitiveKind::kConcat, first, s);
    for (size_t i = 0; i < s.size(); ++i) {
      if (static_cast<int>(i) != axis && s[i] != first[i]) shape_mismatch(PrimitiveKind::kConcat, first, s);
    }
    extents.push_back(s[static_cast<size_t>(axis)]);
    out_shape[static_cast<size_t>(axis)] += s[static_cast<size_t>(axis)];
    ids.push_back(p.id());
  }
  const AxisSplit so = split_at(out_shape, axis);
  Tensor value(out_shape);
  auto o = value.mutable_data();
  int64_t offset = 0;
  for (size_t k = 0; k < parts.size(); ++k) {
    const auto src = parts[k].value().data();
    const int64_t block = extents[k] * so.inner;
    for (int64_t p = 0; p < so.outer; ++p) {
      std::copy_n(src.data() + p * block, block, o.data() + p * so.n * so.inner + offset * so.inner);
    }
    offset += extents[k];
  }
  return t.record(PrimitiveKind::kConcat, std::move(ids), std::move(value),
                  [&t, extents, so, axis, out_shape](const Tensor& g, GradSink& sink) {
    int64_t off = 0;
    const auto gv = g.data();
    for (size_t k = 0; k < extents.size(); ++k) {
      if (sink.wants(k)) {
        Shape s = out_shape;
        s[static_cast<size_t>(axis)] = extents[k];
        Tensor gk(s);
        auto gkv = gk.mutable_data();
        const int64_t block = extents[k] * so.inner;
        for (int64_t p = 0; p < so.outer; ++p) {
          std::copy_n(gv.data() + p * so.n * so.inner + off * so.inner, block, gkv.data() + p * block);
        }
        sink.accumulate(k, std::move(gk));
      }
      off += extents[k];
    }
  });
}

Var reshape(const Var& a, Shape shape) {
  Tape& t = tape_of(a);
  if (shape_numel(shape) != static_cast<int64_t>(a.value().size())) {
    shape_mismatch(PrimitiveKind::kReshape, a.shape(), shape);
  }
  Tensor value(shape, a.value().values());
  Shape in_shape = a.shape();
  return t.record(PrimitiveKind::kReshape, {a.id()}, std::move(value),
                  [in_shape](const Tensor& g, GradSink& sink) {
                    if (sink.wants(0)) sink.accumulate(0, g.reshaped(in_shape));
                  });
}

Var transpose(const Var& a, int axis0, int axis1) {
  Tape& t = tape_of(a);
  const int rank = static_cast<int>(a.shape().size());
  axis0 = normalize_axis(PrimitiveKind::kTranspose, axis0, rank);
  axis1 = normalize_axis(PrimitiveKind::kTranspose, axis1, rank);
  Tensor value = permute_swap(a.value(), axis0, axis1);
  return t.record(PrimitiveKind::kTranspose, {a.id()}, std::move(value),
                  [axis0, axis1](const Tensor& g, GradSink& sink) {
                    if (sink.wants(0)) sink.accumulate(0, permute_swap(g, axis0, axis1));
                  });
}

Var slice(const Var& a, int axis, int64_t begin, int64_t end) {
  Tape& t = tape_of(a);
  axis = normalize_axis(PrimitiveKind::kSlice, axis, static_cast<int>(a.shape().size()));
  const AxisSplit s = split_at(a.shape(), axis);
  if (begin < 0 || end > s.n || begin >= end) {
    fail(PrimitiveKind::kSlice, "range [" + std::to_string(begin) + ", " + std::to_string(end) +
                                    ") invalid for shape " + shape_string(a.shape()));
  }
  Shape out_shape = a.shape();
  out_shape[static_cast<size_t>(axis)] = end - begin;
  Tensor value(out_shape);
  auto o = value.mutable_data();
  const auto x = a.value().data();
  const int64_t block = (end - begin) * s.inner;
  for (int64_t p = 0; p < s.outer; ++p) {
    std::copy_n(x.data() + (p * s.n + begin) * s.inner, block, o.data() + p * block);
  }
  Shape in_shape = a.shape();
  return t.record(PrimitiveKind::kSlice, {a.id()}, std::move(value),
                  [in_shape, s, begin, block](const Tensor& g, GradSink& sink) {
    if (!sink.wants(0)) return;
    double* gx = sink.buffer(0, in_shape).mutable_data().data();
    const double* gv = g.data().data();
    for (int64_t p = 0; p < s.outer; ++p) {
      double* dst = gx + (p * s.n + begin) * s.inner;
      for (int64_t i = 0; i < block; ++i) dst[i] += gv[p * block + i];
    }
  });
}

}  // namespace sehm::ad
