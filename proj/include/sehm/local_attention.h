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

// Kernelized local attention over neighborhoods of a long series.
//
// A T x D series is cut into L = ceil(T / C) non-overlapping windows of C
// steps. Inside each window every step attends to every other step; the raw
// (zero-encoded) inputs act as values, so a window whose values are all zero
// yields an exactly zero output. The softmax kernel exp(q.k) is replaced by
// an inner product of positive random features, which lets the key/value
// summaries be computed once per window and keeps the cost linear in C.
//
// Row-vector convention throughout: q = x W_Q, k = x W_K.

#ifndef SEHM_LOCAL_ATTENTION_H_
#define SEHM_LOCAL_ATTENTION_H_

#include <cstdint>
#include <span>
#include <vector>

#include "sehm/autodiff.h"

namespace sehm {

struct LocalizedSeries {
  int64_t length = 0;     // T, before padding
  int64_t windows = 0;    // L
  int64_t neighbor = 0;   // C
  int64_t variables = 0;  // D
  Tensor values;          // L x C x D, exactly 0 wherever mask is 0
  Tensor mask;            // L x C x D, 1 = observed

  // Value at original time index t (t < L * C).
  double value(int64_t t, int64_t d) const { return values[static_cast<size_t>(t * variables + d)]; }
  double observed(int64_t t, int64_t d) const { return mask[static_cast<size_t>(t * variables + d)]; }
};

// Reshapes a T x D series with its T x D mask into windows of `neighbor`
// steps. Missing entries and the padded tail are zero-encoded.
LocalizedSeries localize(const Tensor& series, const Tensor& mask, int64_t neighbor);

// Batched form for the model: B x T x D (already zero-encoded) to
// B x L x C x D with a zero-padded tail.
Tensor localize_batch(const Tensor& batch, int64_t neighbor);

struct RandomFeatureMatrix {
  Tensor omega;  // R x D
  uint64_t seed = 0;

  int64_t features() const { return omega.dim(0); }
  int64_t dim() const { return omega.dim(1); }
};

// Blocks of up to D mutually orthogonal Gaussian directions whose row norms
// are redrawn from the chi distribution with D degrees of freedom, so each
// row is marginally N(0, I_D).
RandomFeatureMatrix draw_orthogonal_features(int64_t dim, int64_t features, uint64_t seed);

// phi(z)_r = exp(omega_r . z - |z|^2 / 2) / sqrt(R). The exponent is clamped
// to [-exp_clamp, exp_clamp].
Tensor feature_map(std::span<const double> z, const RandomFeatureMatrix& features,
                   double exp_clamp = 30.0);

// Differentiable feature map applied to every row of an N x D matrix.
// `omega_t` is the D x R transpose of the feature matrix.
ad::Var feature_map_rows(const ad::Var& rows, const ad::Var& omega_t);

struct AttentionHead {
  Tensor query;        // D x D
  Tensor key;          // D x D
  Tensor aggregation;  // C
};

struct MultiHeadConfig {
  int64_t heads = 1;
  Tensor output_projection;  // (H * D) x D_o
};

// Head parameters recorded on a tape.
struct HeadVars {
  ad::Var query;
  ad::Var key;
  ad::Var aggregation;  // C
};

// Attention over a batch of windows (N x C x D). With `aggregate` the C
// per-query outputs are contracted with the aggregation vector, giving
// N x D; without it the N x C x D per-query outputs are returned.
ad::Var kernel_attention(const ad::Var& windows, const HeadVars& head, const ad::Var& omega_t,
                         bool aggregate = true);
ad::Var exact_attention(const ad::Var& windows, const HeadVars& head, bool aggregate = true);

// Concatenates H head outputs (each B x L x D) along the variable axis and
// projects with W^O, giving B x L x D_o.
ad::Var aggregate_heads(const std::vector<ad::Var>& head_outputs, const ad::Var& output_projection);

// Single-series forms, L x D outputs.
Tensor kernel_local_attention(const LocalizedSeries& series, const AttentionHead& head,
                              const RandomFeatureMatrix& features);
Tensor exact_local_attention(const LocalizedSeries& series, const AttentionHead& head);
Tensor aggregate_multi_head(const std::vector<Tensor>& head_outputs, const MultiHeadConfig& config);

// Entry (l, j) = sum_i w_i kappa(q_li, k_lj) / sum_j' kappa(q_li, k_lj').
// Contracting with the window values reproduces the head output. The
// kernelized form uses kappa = phi(q).phi(k); the exact form exp(q.k).
Tensor attention_contribution_weights(const LocalizedSeries& series, const AttentionHead& head,
                                      const RandomFeatureMatrix& features);
Tensor exact_contribution_weights(const LocalizedSeries& series, const AttentionHead& head);

}  // namespace sehm

#endif  // SEHM_LOCAL_ATTENTION_H_
