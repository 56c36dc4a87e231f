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

#ifndef SEHM_METRICS_H_
#define SEHM_METRICS_H_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "sehm/explainer.h"
#include "sehm/tensor.h"

namespace sehm {

// Rank statistic; tied scores count one half. Needs both classes.
double auroc(std::span<const double> scores, std::span<const double> labels);
// Average precision: sum over distinct thresholds of recall gain times
// precision. Needs both classes.
double auprc(std::span<const double> scores, std::span<const double> labels);

// mean (g - f)^2
double local_accuracy(std::span<const double> g, std::span<const double> f);
// The same for a model and theta network over rows of Z (N x D_r).
double local_accuracy(const SehmModel& model, const ThetaNetwork& net, const Tensor& z);

// Probabilities for a batch N x T x D.
using BatchScore = std::function<Tensor(const Tensor&)>;

// Flat (t * D + d) positions ordered by |beta| descending; ties keep the
// earlier position first.
std::vector<int64_t> rank_by_magnitude(const Tensor& beta);
std::vector<int64_t> random_ranking(int64_t positions, uint64_t seed);

// AOPC at each cutoff k: mean over samples of
// 1/(k+1) sum_{m=0..k} [f(x) - f(x with the top-m positions set to 0)].
// `samples` is N x T x D, `rankings` holds one ranking per sample.
std::vector<double> aopc(const BatchScore& f, const Tensor& samples, const std::vector<std::vector<int64_t>>& rankings,
                         const std::vector<int64_t>& cutoffs, int64_t batch_size = 64);

// max |theta(z') - theta(z)| / |z' - z| over n points drawn uniformly in the
// radius ball of each center (rows of N x D_r). When `predict` is given,
// pairs whose predicted label (f >= 0.5) differs from the center's are
// skipped. Zero-distance pairs are skipped.
double estimated_lipschitz(const ThetaNetwork& net, const Tensor& centers, double radius, int64_t n, uint64_t seed,
                           const BatchScore& predict = nullptr);

}  // namespace sehm

#endif  // SEHM_METRICS_H_
