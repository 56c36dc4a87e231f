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

// Experiments built on the training loop: evaluation reports, the
// neighbor-size timing study and the locality/zero-encoding/kernelization
// ablation grid.

#ifndef SEHM_HARNESS_H_
#define SEHM_HARNESS_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "sehm/training.h"

namespace sehm {

// Runs task(0..count-1) on up to `workers` threads. The first exception
// thrown by any task is rethrown after every thread has joined.
void parallel_for(int64_t count, int64_t workers, const std::function<void(int64_t)>& task);

// Wall-clock milliseconds of fn().
double time_ms(const std::function<void()>& fn);

double median(std::vector<double> values);
double mean(const std::vector<double>& values);
// Sample standard deviation; 0 for fewer than two values.
double stddev(const std::vector<double>& values);

struct EvaluateConfig {
  std::vector<int64_t> aopc_cutoffs = {10, 50, 100, 500, 2000};
  int64_t aopc_samples = 50;       // leading test samples perturbed
  int64_t random_rankings = 20;    // seeds for the random-ranking baseline
  uint64_t seed = 1;
  double lipschitz_radius = 0.1;   // fraction of |z| at each center
  int64_t lipschitz_centers = 50;
  int64_t lipschitz_points = 100;
  int64_t batch_size = 64;

  void validate() const;
};

struct AopcCurve {
  std::vector<int64_t> cutoffs;
  std::vector<double> beta;                 // |beta| ranking
  std::vector<std::vector<double>> random;  // one curve per random seed
};

struct MetricsReport {
  double auroc = 0.0;
  double auprc = 0.0;
  std::optional<double> local_accuracy;
  std::optional<AopcCurve> aopc;
  std::optional<double> estimated_lipschitz;
  std::optional<double> lipschitz_certificate;
  std::vector<double> epoch_milliseconds;
};

// Test-split metrics. The interpretability entries are filled when `theta`
// is given.
MetricsReport evaluate(const SehmModel& model, const ThetaNetwork* theta, const PreparedData& data,
                       const EvaluateConfig& config);

// Explanation of every sample in `x` (zero-encoded N x T x D with its raw
// dataset for masks); returns beta rankings, one per sample.
std::vector<std::vector<int64_t>> beta_rankings(const SehmModel& model, const ThetaNetwork& net, const Tensor& x,
                                                const Dataset& raw);

struct BenchmarkConfig {
  std::vector<int64_t> neighbors = {10, 20, 30, 40, 50, 60};
  int64_t repetitions = 5;

  void validate() const;
};

struct TimingRow {
  int64_t neighbor = 0;
  std::vector<double> milliseconds;  // one training epoch per repetition
  double median_ms = 0.0;
  double mean_ms = 0.0;
  double stddev_ms = 0.0;
};

// One-epoch training wall-clock per neighbor size on the prepared training
// split, a fresh model per repetition.
std::vector<TimingRow> benchmark_neighbor_size(const ModelConfig& base, const PreparedData& data,
                                               const TrainConfig& train_config, const BenchmarkConfig& config);

struct AblationConfig {
  int64_t seeds = 10;
  int64_t inference_runs = 20;
  int64_t inference_batch = 64;
  int64_t workers = 1;

  void validate() const;
};

struct AblationRow {
  bool locality = false;
  bool zero_encoding = false;
  bool kernelization = false;
  std::vector<double> auroc;  // one per seed
  std::vector<double> auprc;
  double inference_ms = 0.0;  // median warm forward pass
  double mean_auroc() const { return mean(auroc); }
  double mean_auprc() const { return mean(auprc); }
};

// The eight flag combinations in table order: locality, then zero encoding,
// then kernelization, each off before on.
std::vector<AblationRow> ablation_grid();

// Trains every row for every seed with the LSTM cell. Seed k uses the same
// split, shuffling and initialization in every row, so rows are paired.
std::vector<AblationRow> ablation_run(const ModelConfig& base, const Dataset& data, const TrainConfig& train_config,
                                      const AblationConfig& config);

// Median of `runs` warm forward passes over the leading `batch` rows of x.
double inference_ms(const SehmModel& model, const Tensor& x, int64_t batch, int64_t runs);

}  // namespace sehm

#endif  // SEHM_HARNESS_H_
