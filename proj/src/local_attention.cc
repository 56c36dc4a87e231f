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

#include "sehm/local_attention.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>

namespace sehm {
namespace {

void check_head(const AttentionHead& head, int64_t neighbor, int64_t dim) {
  const auto bad = [&](const char* what, const Tensor& t) {
    throw SehmError(std::string("attention head ") + what + " has shape " + shape_string(t.shape()) +
                    ", expected window C=" + std::to_string(neighbor) + ", D=" + std::to_string(dim));
  };
  if (head.query.shape() != Shape{dim, dim}) bad("query projection", head.query);
  if (head.key.shape() != Shape{dim, dim}) bad("key projection", head.key);
  if (head.aggregation.shape() != Shape{neighbor}) bad("aggregation vector", head.aggregation);
}

HeadVars bind_head(ad::Tape& tape, const AttentionHead& head) {
  return {tape.constant(head.query), tape.constant(head.key), tape.constant(head.aggregation)};
}

// Per-window normalized kernel rows aggregated by w; kernel(i, j) supplies
// the unnormalized weight between query i and key j of one window.
template <class Kernel>
void contract_weights(const Tensor& w, int64_t neighbor, Kernel kernel, double* out) {
  std::vector<double> row(static_cast<size_t>(neighbor));
  std::fill(out, out + neighbor, 0.0);
  for (int64_t i = 0; i < neighbor; ++i) {
    double total = 0.0;
    for (int64_t j = 0; j < neighbor; ++j) {
      row[static_cast<size_t>(j)] = kernel(i, j);
      total += row[static_cast<size_t>(j)];
    }
    for (int64_t j = 0; j < neighbor; ++j) out[j] += w[static_cast<size_t>(i)] * row[static_cast<size_t>(j)] / total;
  }
}

// q and k rows for every step of every window: (L*C) x D each.
std::pair<Tensor, Tensor> project(const LocalizedSeries& series, const AttentionHead& head) {
  const Tensor rows = series.values.reshaped({series.windows * series.neighbor, series.variables});
  return {ad::matmul(rows, head.query), ad::matmul(rows, head.key)};
}

}  // namespace

LocalizedSeries localize(const Tensor& series, const Tensor& mask, int64_t neighbor) {
  if (neighbor <= 0) throw SehmError("localize: neighbor size must be positive, got " + std::to_string(neighbor));
  if (series.rank() != 2) throw SehmError("localize: expected a T x D series, got " + shape_string(series.shape()));
  if (mask.shape() != series.shape()) {
    throw SehmError("localize: mask shape " + shape_string(mask.shape()) + " differs from series " +
                    shape_string(series.shape()));
  }
  LocalizedSeries out;
  out.length = series.dim(0);
  out.variables = series.dim(1);
  out.neighbor = neighbor;
  out.windows = (out.length + neighbor - 1) / neighbor;
  const Shape shape{out.windows, neighbor, out.variables};
  out.values = Tensor(shape);
  out.mask = Tensor(shape);
  for (size_t i = 0; i < series.size(); ++i) {
    const bool observed = mask[i] != 0.0;
    out.mask[i] = observed ? 1.0 : 0.0;
    out.values[i] = observed ? series[i] : 0.0;
  }
  return out;
}

Tensor localize_batch(const Tensor& batch, int64_t neighbor) {
  if (neighbor <= 0) throw SehmError("localize: neighbor size must be positive");
  if (batch.rank() != 3) throw SehmError("localize_batch: expected B x T x D, got " + shape_string(batch.shape()));
  const int64_t b = batch.dim(0), t = batch.dim(1), d = batch.dim(2);
  const int64_t windows = (t + neighbor - 1) / neighbor;
  if (windows * neighbor == t) return batch.reshaped({b, windows, neighbor, d});
  Tensor out({b, windows, neighbor, d});
  auto o = out.mutable_data();
  const auto in = batch.data();
  for (int64_t s = 0; s < b; ++s) {
    std::copy_n(in.data() + s * t * d, t * d, o.data() + s * windows * neighbor * d);
  }
  return out;
}

RandomFeatureMatrix draw_orthogonal_features(int64_t dim, int64_t features, uint64_t seed) {
  if (dim < 1 || features < 1) {
    throw SehmError("draw_orthogonal_features: need D >= 1 and R >= 1, got D=" + std::to_string(dim) +
                    ", R=" + std::to_string(features));
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::chi_squared_distribution<double> chi2(static_cast<double>(dim));
  RandomFeatureMatrix out;
  out.seed = seed;
  out.omega = Tensor({features, dim});
  int64_t row = 0;
  while (row < features) {
    Eigen::MatrixXd g(dim, dim);
    for (int64_t i = 0; i < dim; ++i) {
      for (int64_t j = 0; j < dim; ++j) g(i, j) = normal(rng);
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    // Sign fix makes Q Haar-distributed.
    for (int64_t j = 0; j < dim; ++j) {
      if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    }
    const int64_t take = std::min(dim, features - row);
    for (int64_t k = 0; k < take; ++k, ++row) {
      const double norm = std::sqrt(chi2(rng));
      for (int64_t j = 0; j < dim; ++j) out.omega.at({row, j}) = norm * q(j, k);
    }
  }
  return out;
}

Tensor feature_map(std::span<const double> z, const RandomFeatureMatrix& features, double exp_clamp) {
  const int64_t dim = features.dim();
  if (static_cast<int64_t>(z.size()) != dim) {
    throw SehmError("feature_map: input length " + std::to_string(z.size()) + " differs from D=" +
                    std::to_string(dim));
  }
  double half_sq = 0.0;
  for (double v : z) {
    if (!std::isfinite(v)) throw SehmError("feature_map: non-finite input");
    half_sq += v * v;
  }
  half_sq *= 0.5;
  const int64_t r = features.features();
  const double scale = 1.0 / std::sqrt(static_cast<double>(r));
  Tensor out({r});
  for (int64_t k = 0; k < r; ++k) {
    double dot = 0.0;
    for (int64_t j = 0; j < dim; ++j) dot += features.omega.at({k, j}) * z[static_cast<size_t>(j)];
    out[static_cast<size_t>(k)] = std::exp(std::clamp(dot - half_sq, -exp_clamp, exp_clamp)) * scale;
  }
  return out;
}

ad::Var feature_map_rows(const ad::Var& rows, const ad::Var& omega_t) {
  const Shape& rs = rows.shape();
  const Shape& os = omega_t.shape();
  if (rs.size() != 2 || os.size() != 2 || rs[1] != os[0]) {
    throw SehmError("feature_map_rows: rows " + shape_string(rs) + " do not match features " + shape_string(os));
  }
  ad::Tape& tape = *rows.tape();
  const int64_t m = rs[0], d = rs[1], r = os[1];
  const double limit = tape.exp_clamp();
  const double scale = 1.0 / std::sqrt(static_cast<double>(r));
  const Tensor& x = rows.value();
  const Tensor& om = omega_t.value();
  Tensor phi({m, r});
  ad::gemm(x.data(), om.data(), phi.mutable_data(), m, d, r, false, false, false);
  // Exponents outside the clamp get zero gradient, as in ad::exp.
  std::vector<char> inside(static_cast<size_t>(m * r));
  for (int64_t i = 0; i < m; ++i) {
    double half_sq = 0.0;
    for (int64_t j = 0; j < d; ++j) half_sq += x[static_cast<size_t>(i * d + j)] * x[static_cast<size_t>(i * d + j)];
    half_sq *= 0.5;
    for (int64_t k = 0; k < r; ++k) {
      const size_t at = static_cast<size_t>(i * r + k);
      const double e = phi[at] - half_sq;
      inside[at] = e >= -limit && e <= limit;
      phi[at] = std::exp(std::clamp(e, -limit, limit)) * scale;
    }
  }
  const ad::NodeId out_id = static_cast<ad::NodeId>(tape.size());
  const ad::NodeId xi = rows.id(), oi = omega_t.id();
  return tape.record(
      ad::PrimitiveKind::kFeatureMap, {xi, oi}, std::move(phi),
      [&tape, xi, oi, out_id, inside = std::move(inside), m, d, r](const Tensor& g, ad::GradSink& sink) {
        const Tensor& x = tape.value(xi);
        const Tensor& om = tape.value(oi);
        const Tensor& phi = tape.value(out_id);
        // d phi_k / d x = phi_k (omega_k - x), d phi_k / d omega_k = phi_k x
        Tensor gp({m, r});
        for (size_t i = 0; i < gp.size(); ++i) gp[i] = inside[i] ? g[i] * phi[i] : 0.0;
        if (sink.wants(0)) {
          Tensor gx({m, d});
          ad::gemm(gp.data(), om.data(), gx.mutable_data(), m, r, d, false, true, false);
          for (int64_t i = 0; i < m; ++i) {
            double total = 0.0;
            for (int64_t k = 0; k < r; ++k) total += gp[static_cast<size_t>(i * r + k)];
            for (int64_t j = 0; j < d; ++j) gx[static_cast<size_t>(i * d + j)] -= total * x[static_cast<size_t>(i * d + j)];
          }
          sink.accumulate(0, std::move(gx));
        }
        if (sink.wants(1)) {
          Tensor go({d, r});
          ad::gemm(x.data(), gp.data(), go.mutable_data(), d, m, r, true, false, false);
          sink.accumulate(1, std::move(go));
        }
      });
}

ad::Var kernel_attention(const ad::Var& windows, const HeadVars& head, const ad::Var& omega_t,
                         bool aggregate) {
  const Shape& s = windows.shape();
  if (s.size() != 3) throw SehmError("kernel_attention: windows must be N x C x D, got " + shape_string(s));
  const int64_t n = s[0], c = s[1], d = s[2];
  const int64_t r = omega_t.shape().back();
  const ad::Var rows = ad::reshape(windows, {n * c, d});
  const ad::Var phi_q = ad::reshape(feature_map_rows(ad::matmul(rows, head.query), omega_t), {n, c, r});
  const ad::Var phi_k = ad::reshape(feature_map_rows(ad::matmul(rows, head.key), omega_t), {n, c, r});
  // Key/value summaries shared by every query of the window.
  const ad::Var kv = ad::matmul(ad::transpose(phi_k, 1, 2), windows);         // N x R x D
  const ad::Var k_total = ad::transpose(ad::sum(phi_k, 1, true), 1, 2);      // N x R x 1
  const ad::Var numerator = ad::matmul(phi_q, kv);                           // N x C x D
  const ad::Var denominator = ad::matmul(phi_q, k_total);                    // N x C x 1
  const ad::Var per_query = numerator / denominator;
  if (!aggregate) return per_query;
  if (head.aggregation.shape() != Shape{c}) {
    throw SehmError("kernel_attention: aggregation vector " + shape_string(head.aggregation.shape()) +
                    " does not match window size " + std::to_string(c));
  }
  const ad::Var w = ad::reshape(head.aggregation, {1, c});
  return ad::reshape(ad::matmul(w, per_query), {n, d});
}

ad::Var exact_attention(const ad::Var& windows, const HeadVars& head, bool aggregate) {
  const Shape& s = windows.shape();
  if (s.size() != 3) throw SehmError("exact_attention: windows must be N x C x D, got " + shape_string(s));
  const int64_t n = s[0], c = s[1], d = s[2];
  const ad::Var rows = ad::reshape(windows, {n * c, d});
  const ad::Var q = ad::reshape(ad::matmul(rows, head.query), {n, c, d});
  const ad::Var k = ad::reshape(ad::matmul(rows, head.key), {n, c, d});
  const ad::Var weights = ad::softmax(ad::matmul(q, ad::transpose(k, 1, 2)), 2);  // N x C x C
  if (!aggregate) return ad::matmul(weights, windows);
  if (head.aggregation.shape() != Shape{c}) {
    throw SehmError("exact_attention: aggregation vector " + shape_string(head.aggregation.shape()) +
                    " does not match window size " + std::to_string(c));
  }
  const ad::Var w = ad::reshape(head.aggregation, {1, c});
  const ad::Var contribution = ad::matmul(w, weights);  // N x 1 x C
  return ad::reshape(ad::matmul(contribution, windows), {n, d});
}

ad::Var aggregate_heads(const std::vector<ad::Var>& head_outputs, const ad::Var& output_projection) {
  if (head_outputs.empty()) throw SehmError("aggregate_heads: no head outputs");
  const Shape& first = head_outputs.front().shape();
  for (const ad::Var& h : head_outputs) {
    if (h.shape() != first) {
      throw SehmError("aggregate_heads: head output shapes differ: " + shape_string(first) + " vs " +
                      shape_string(h.shape()));
    }
  }
  const int64_t total = first.back() * static_cast<int64_t>(head_outputs.size());
  if (output_projection.shape().size() != 2 || output_projection.shape()[0] != total) {
    throw SehmError("aggregate_heads: output projection " + shape_string(output_projection.shape()) +
                    " needs " + std::to_string(total) + " rows");
  }
  const ad::Var joined = head_outputs.size() == 1 ? head_outputs.front() : ad::concat(head_outputs, -1);
  return ad::matmul(joined, output_projection);
}

Tensor kernel_local_attention(const LocalizedSeries& series, const AttentionHead& head,
                              const RandomFeatureMatrix& features) {
  check_head(head, series.neighbor, series.variables);
  if (features.dim() != series.variables) throw SehmError("kernel_local_attention: feature dimension mismatch");
  ad::Tape tape;
  const ad::Var windows = tape.constant(series.values);
  const ad::Var omega_t = tape.constant(ad::transpose2d(features.omega));
  return kernel_attention(windows, bind_head(tape, head), omega_t).value();
}

Tensor exact_local_attention(const LocalizedSeries& series, const AttentionHead& head) {
  check_head(head, series.neighbor, series.variables);
  ad::Tape tape;
  return exact_attention(tape.constant(series.values), bind_head(tape, head)).value();
}

Tensor aggregate_multi_head(const std::vector<Tensor>& head_outputs, const MultiHeadConfig& config) {
  if (config.heads < 1) throw SehmError("aggregate_multi_head: need at least one head");
  if (static_cast<int64_t>(head_outputs.size()) != config.heads) {
    throw SehmError("aggregate_multi_head: expected " + std::to_string(config.heads) + " head outputs, got " +
                    std::to_string(head_outputs.size()));
  }
  ad::Tape tape;
  std::vector<ad::Var> outs;
  for (const Tensor& h : head_outputs) outs.push_back(tape.constant(h));
  return aggregate_heads(outs, tape.constant(config.output_projection)).value();
}

Tensor attention_contribution_weights(const LocalizedSeries& series, const AttentionHead& head,
                                      const RandomFeatureMatrix& features) {
  check_head(head, series.neighbor, series.variables);
  const int64_t c = series.neighbor;
  const auto [q, k] = project(series, head);
  const int64_t r = features.features();
  // Feature maps for every step, (L*C) x R.
  Tensor phi_q({series.windows * c, r});
  Tensor phi_k({series.windows * c, r});
  for (int64_t i = 0; i < series.windows * c; ++i) {
    const auto qi = q.data().subspan(static_cast<size_t>(i * series.variables), static_cast<size_t>(series.variables));
    const auto ki = k.data().subspan(static_cast<size_t>(i * series.variables), static_cast<size_t>(series.variables));
    const Tensor fq = feature_map(qi, features);
    const Tensor fk = feature_map(ki, features);
    std::copy(fq.data().begin(), fq.data().end(), phi_q.mutable_data().begin() + i * r);
    std::copy(fk.data().begin(), fk.data().end(), phi_k.mutable_data().begin() + i * r);
  }
  Tensor out({series.windows, c});
  for (int64_t l = 0; l < series.windows; ++l) {
    const auto kernel = [&](int64_t i, int64_t j) {
      double dot = 0.0;
      const double* a = phi_q.data().data() + (l * c + i) * r;
      const double* b = phi_k.data().data() + (l * c + j) * r;
      for (int64_t m = 0; m < r; ++m) dot += a[m] * b[m];
      return dot;
    };
    contract_weights(head.aggregation, c, kernel, out.mutable_data().data() + l * c);
  }
  return out;
}

Tensor exact_contribution_weights(const LocalizedSeries& series, const AttentionHead& head) {
  check_head(head, series.neighbor, series.variables);
  const int64_t c = series.neighbor;
  const int64_t d = series.variables;
  const auto [q, k] = project(series, head);
  Tensor out({series.windows, c});
  std::vector<double> logits(static_cast<size_t>(c * c));
  for (int64_t l = 0; l < series.windows; ++l) {
    for (int64_t i = 0; i < c; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int64_t j = 0; j < c; ++j) {
        double dot = 0.0;
        for (int64_t m = 0; m < d; ++m) dot += q[static_cast<size_t>((l * c + i) * d + m)] * k[static_cast<size_t>((l * c + j) * d + m)];
        logits[static_cast<size_t>(i * c + j)] = dot;
        mx = std::max(mx, dot);
      }
      for (int64_t j = 0; j < c; ++j) logits[static_cast<size_t>(i * c + j)] -= mx;
    }
    const auto kernel = [&](int64_t i, int64_t j) { return std::exp(logits[static_cast<size_t>(i * c + j)]); };
    contract_weights(head.aggregation, c, kernel, out.mutable_data().data() + l * c);
  }
  return out;
}

}  // namespace sehm
