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

#include "sehm/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace sehm {
namespace {

void check_binary(std::span<const double> scores, std::span<const double> labels, const char* who) {
  if (scores.size() != labels.size()) throw SehmError(std::string(who) + ": scores and labels differ in length");
  size_t pos = 0, neg = 0;
  for (double y : labels) {
    if (y == 1.0) {
      ++pos;
    } else if (y == 0.0) {
      ++neg;
    } else {
      throw SehmError(std::string(who) + ": labels must be 0 or 1");
    }
  }
  if (pos == 0 || neg == 0) throw SehmError(std::string(who) + ": needs at least one positive and one negative");
}

// Indices sorted by descending score.
std::vector<size_t> by_score_desc(std::span<const double> scores) {
  std::vector<size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return scores[a] > scores[b]; });
  return idx;
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const double> labels) {
  check_binary(scores, labels, "auroc");
  std::vector<size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), size_t{0});
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return scores[a] < scores[b]; });
  // Average ranks over tie groups.
  double rank_sum = 0.0;
  double pos = 0.0;
  for (size_t i = 0; i < idx.size();) {
    size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (size_t k = i; k < j; ++k) {
      if (labels[idx[k]] == 1.0) {
        rank_sum += avg_rank;
        pos += 1.0;
      }
    }
    i = j;
  }
  const double neg = static_cast<double>(scores.size()) - pos;
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

double auprc(std::span<const double> scores, std::span<const double> labels) {
  check_binary(scores, labels, "auprc");
  const std::vector<size_t> idx = by_score_desc(scores);
  double total_pos = 0.0;
  for (double y : labels) total_pos += y;
  double tp = 0.0, seen = 0.0, prev_recall = 0.0, area = 0.0;
  for (size_t i = 0; i < idx.size();) {
    size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      tp += labels[idx[j]];
      seen += 1.0;
      ++j;
    }
    const double recall = tp / total_pos;
    area += (recall - prev_recall) * (tp / seen);
    prev_recall = recall;
    i = j;
  }
  return area;
}

double local_accuracy(std::span<const double> g, std::span<const double> f) {
  if (g.size() != f.size() || g.empty()) throw SehmError("local_accuracy: g and f must be non-empty and equal length");
  double s = 0.0;
  for (size_t i = 0; i < g.size(); ++i) s += (g[i] - f[i]) * (g[i] - f[i]);
  return s / static_cast<double>(g.size());
}

double local_accuracy(const SehmModel& model, const ThetaNetwork& net, const Tensor& z) {
  const Tensor theta = theta_forward(z, net);
  const Tensor f = model.predict_from_z(z);
  const int64_t n = z.dim(0), d = z.dim(1);
  std::vector<double> g(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    g[static_cast<size_t>(i)] = g_approx(z.data().subspan(static_cast<size_t>(i * d), static_cast<size_t>(d)),
                                         theta.data().subspan(static_cast<size_t>(i * d), static_cast<size_t>(d)));
  }
  return local_accuracy(g, f.data());
}

std::vector<int64_t> rank_by_magnitude(const Tensor& beta) {
  std::vector<int64_t> idx(beta.size());
  std::iota(idx.begin(), idx.end(), int64_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](int64_t a, int64_t b) {
    return std::abs(beta[static_cast<size_t>(a)]) > std::abs(beta[static_cast<size_t>(b)]);
  });
  return idx;
}

std::vector<int64_t> random_ranking(int64_t positions, uint64_t seed) {
  std::vector<int64_t> idx(static_cast<size_t>(positions));
  std::iota(idx.begin(), idx.end(), int64_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

std::vector<double> aopc(const BatchScore& f, const Tensor& samples, const std::vector<std::vector<int64_t>>& rankings,
                         const std::vector<int64_t>& cutoffs, int64_t batch_size) {
  if (samples.rank() != 3) throw SehmError("aopc: samples must be N x T x D");
  const int64_t n = samples.dim(0), t_len = samples.dim(1), d = samples.dim(2);
  const int64_t positions = t_len * d;
  if (static_cast<int64_t>(rankings.size()) != n) throw SehmError("aopc: one ranking per sample is required");
  if (cutoffs.empty()) throw SehmError("aopc: no cutoffs");
  int64_t k_max = 0;
  for (int64_t k : cutoffs) {
    if (k < 0 || k > positions) {
      throw SehmError("aopc: cutoff " + std::to_string(k) + " exceeds the " + std::to_string(positions) +
                      " positions of a sample");
    }
    k_max = std::max(k_max, k);
  }
  std::vector<double> out(cutoffs.size(), 0.0);
  for (int64_t i = 0; i < n; ++i) {
    const std::vector<int64_t>& rank = rankings[static_cast<size_t>(i)];
    if (static_cast<int64_t>(rank.size()) < k_max) throw SehmError("aopc: ranking shorter than the largest cutoff");
    const auto first = samples.data().begin() + i * positions;
    std::vector<double> current(first, first + positions);
    // drop[m] = f(x) - f(x with the top-m positions zeroed), m = 0..k_max
    std::vector<double> prob;
    prob.reserve(static_cast<size_t>(k_max + 1));
    for (int64_t m0 = 0; m0 <= k_max; m0 += batch_size) {
      const int64_t count = std::min(batch_size, k_max + 1 - m0);
      Tensor batch({count, t_len, d});
      for (int64_t b = 0; b < count; ++b) {
        const int64_t m = m0 + b;
        if (m > 0) current[static_cast<size_t>(rank[static_cast<size_t>(m - 1)])] = 0.0;
        std::copy(current.begin(), current.end(), batch.mutable_data().begin() + b * positions);
      }
      const Tensor p = f(batch);
      prob.insert(prob.end(), p.data().begin(), p.data().end());
    }
    for (size_t c = 0; c < cutoffs.size(); ++c) {
      double s = 0.0;
      for (int64_t m = 0; m <= cutoffs[c]; ++m) s += prob[0] - prob[static_cast<size_t>(m)];
      out[c] += s / static_cast<double>(cutoffs[c] + 1);
    }
  }
  for (double& v : out) v /= static_cast<double>(n);
  return out;
}

double estimated_lipschitz(const ThetaNetwork& net, const Tensor& centers, double radius, int64_t n, uint64_t seed,
                           const BatchScore& predict) {
  if (!(radius > 0.0)) throw SehmError("estimated_lipschitz: radius must be positive");
  if (centers.rank() != 2 || centers.dim(1) != net.input_dim()) {
    throw SehmError("estimated_lipschitz: centers must be N x D_r");
  }
  const int64_t count = centers.dim(0), d = centers.dim(1);
  const Tensor theta_c = theta_forward(centers, net);
  Tensor label_c;
  if (predict) label_c = predict(centers);
  double best = 0.0;
  for (int64_t i = 0; i < count; ++i) {
    const Tensor center({d}, std::vector<double>(centers.data().begin() + i * d, centers.data().begin() + (i + 1) * d));
    const PerturbationSet set = sample_perturbations(center, radius, n, seed + static_cast<uint64_t>(i));
    const Tensor theta_p = theta_forward(set.points, net);
    Tensor label_p;
    if (predict) label_p = predict(set.points);
    for (int64_t k = 0; k < n; ++k) {
      if (predict && ((label_p[static_cast<size_t>(k)] >= 0.5) != (label_c[static_cast<size_t>(i)] >= 0.5))) continue;
      double dz = 0.0, dt = 0.0;
      for (int64_t j = 0; j < d; ++j) {
        const double a = set.points[static_cast<size_t>(k * d + j)] - center[static_cast<size_t>(j)];
        const double b = theta_p[static_cast<size_t>(k * d + j)] - theta_c[static_cast<size_t>(i * d + j)];
        dz += a * a;
        dt += b * b;
      }
      if (dz == 0.0) continue;
      best = std::max(best, std::sqrt(dt / dz));
    }
  }
  return best;
}

}  // namespace sehm
