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

#include "sehm/harness.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "sehm/metrics.h"

namespace sehm {

void parallel_for(int64_t count, int64_t workers, const std::function<void(int64_t)>& task) {
  if (count <= 0) return;
  workers = std::clamp<int64_t>(workers, 1, count);
  if (workers == 1) {
    for (int64_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<int64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  for (int64_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (int64_t i = next++; i < count; i = next++) {
        try {
          task(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

double time_ms(const std::function<void()>& fn) {
  const auto start = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

double median(std::vector<double> values) {
  if (values.empty()) throw SehmError("median of no values");
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double mean(const std::vector<double>& values) {
  if (values.empty()) throw SehmError("mean of no values");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double stddev(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  const double m = mean(values);
  double s = 0.0;
  for (double v : values) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(values.size() - 1));
}

void EvaluateConfig::validate() const {
  if (aopc_cutoffs.empty()) throw SehmError("evaluate: no AOPC cutoffs");
  if (!std::is_sorted(aopc_cutoffs.begin(), aopc_cutoffs.end())) throw SehmError("evaluate: AOPC cutoffs must ascend");
  if (aopc_samples < 1 || random_rankings < 0) throw SehmError("evaluate: AOPC sample counts must be positive");
  if (!(lipschitz_radius > 0.0) || lipschitz_centers < 1 || lipschitz_points < 1) {
    throw SehmError("evaluate: Lipschitz radius and counts must be positive");
  }
  if (batch_size < 1) throw SehmError("evaluate: batch size must be positive");
}

std::vector<std::vector<int64_t>> beta_rankings(const SehmModel& model, const ThetaNetwork& net, const Tensor& x,
                                                const Dataset& raw) {
  std::vector<std::vector<int64_t>> out;
  const int64_t t_len = x.dim(1), d = x.dim(2);
  for (int64_t i = 0; i < x.dim(0); ++i) {
    const Tensor series({t_len, d}, std::vector<double>(x.data().begin() + i * t_len * d,
                                                        x.data().begin() + (i + 1) * t_len * d));
    out.push_back(rank_by_magnitude(explain(model, net, series, raw.sample_mask(i)).beta));
  }
  return out;
}

MetricsReport evaluate(const SehmModel& model, const ThetaNetwork* theta, const PreparedData& data,
                       const EvaluateConfig& config) {
  config.validate();
  MetricsReport report;
  const Tensor p = predict_batched(model, data.test_x, config.batch_size);
  report.auroc = auroc(p.data(), data.test.labels.data());
  report.auprc = auprc(p.data(), data.test.labels.data());
  if (theta == nullptr) return report;

  const Tensor z = embed_batched(model, data.test_x, config.batch_size);
  report.local_accuracy = local_accuracy(model, *theta, z);

  const int64_t n = std::min(config.aopc_samples, data.test_x.dim(0));
  std::vector<int64_t> head(static_cast<size_t>(n));
  std::iota(head.begin(), head.end(), int64_t{0});
  const Tensor samples = gather_rows(data.test_x, head);
  const BatchScore f = [&](const Tensor& batch) { return model.predict(batch); };
  AopcCurve curve;
  curve.cutoffs = config.aopc_cutoffs;
  curve.beta = aopc(f, samples, beta_rankings(model, *theta, samples, data.test.subset(head)), curve.cutoffs,
                    config.batch_size);
  const int64_t positions = samples.dim(1) * samples.dim(2);
  for (int64_t r = 0; r < config.random_rankings; ++r) {
    std::vector<std::vector<int64_t>> rankings;
    for (int64_t i = 0; i < n; ++i) {
      rankings.push_back(random_ranking(positions, config.seed + static_cast<uint64_t>(r * n + i)));
    }
    curve.random.push_back(aopc(f, samples, rankings, curve.cutoffs, config.batch_size));
  }
  report.aopc = std::move(curve);

  const int64_t centers = std::min(config.lipschitz_centers, z.dim(0));
  const BatchScore predict_z = [&](const Tensor& rows) { return model.predict_from_z(rows); };
  double best = 0.0;
  for (int64_t c = 0; c < centers; ++c) {
    const Tensor center = gather_rows(z, {c});
    double norm = 0.0;
    for (double v : center.data()) norm += v * v;
    if (norm == 0.0) continue;
    best = std::max(best, estimated_lipschitz(*theta, center, config.lipschitz_radius * std::sqrt(norm),
                                              config.lipschitz_points, config.seed + static_cast<uint64_t>(c),
                                              predict_z));
  }
  report.estimated_lipschitz = best;
  report.lipschitz_certificate = lipschitz_certificate(*theta);
  return report;
}

void BenchmarkConfig::validate() const {
  if (neighbors.empty()) throw SehmError("benchmark: no neighbor sizes");
  if (!std::is_sorted(neighbors.begin(), neighbors.end())) throw SehmError("benchmark: neighbor sizes must ascend");
  if (repetitions < 1) throw SehmError("benchmark: repetitions must be positive");
}

std::vector<TimingRow> benchmark_neighbor_size(const ModelConfig& base, const PreparedData& data,
                                               const TrainConfig& train_config, const BenchmarkConfig& config) {
  config.validate();
  train_config.validate();
  std::vector<TimingRow> rows;
  for (int64_t c : config.neighbors) {
    TimingRow row;
    row.neighbor = c;
    ModelConfig mc = base;
    mc.neighbor = c;
    mc.locality = true;
    for (int64_t r = 0; r < config.repetitions; ++r) {
      mc.seed = base.seed + static_cast<uint64_t>(r);
      SehmModel model(mc);
      AdamConfig adam_config;
      adam_config.learning_rate = train_config.learning_rate;
      AdamState adam(adam_config, model.params().shapes());
      std::optional<ThetaTrainer> trainer;
      if (train_config.explainer == ExplainerMode::kJoint) trainer.emplace(make_theta_trainer(model, train_config));
      double objective = 0.0;
      row.milliseconds.push_back(time_ms([&] {
        train_epoch(model, adam, data.train_x, data.train.labels, train_config, train_config.seed + 1,
                    trainer ? &*trainer : nullptr, &objective);
      }));
    }
    row.median_ms = median(row.milliseconds);
    row.mean_ms = mean(row.milliseconds);
    row.stddev_ms = stddev(row.milliseconds);
    rows.push_back(std::move(row));
  }
  return rows;
}

void AblationConfig::validate() const {
  if (seeds < 1 || inference_runs < 1 || inference_batch < 1 || workers < 1) {
    throw SehmError("ablate: seeds, inference runs, batch and workers must be positive");
  }
}

std::vector<AblationRow> ablation_grid() {
  std::vector<AblationRow> rows;
  for (int l = 0; l < 2; ++l) {
    for (int z = 0; z < 2; ++z) {
      for (int k = 0; k < 2; ++k) {
        AblationRow row;
        row.locality = l == 1;
        row.zero_encoding = z == 1;
        row.kernelization = k == 1;
        rows.push_back(row);
      }
    }
  }
  return rows;
}

double inference_ms(const SehmModel& model, const Tensor& x, int64_t batch, int64_t runs) {
  std::vector<int64_t> idx(static_cast<size_t>(std::min(batch, x.dim(0))));
  std::iota(idx.begin(), idx.end(), int64_t{0});
  const Tensor b = gather_rows(x, idx);
  model.predict(b);  // warm-up
  std::vector<double> times;
  for (int64_t r = 0; r < runs; ++r) times.push_back(time_ms([&] { model.predict(b); }));
  return median(times);
}

std::vector<AblationRow> ablation_run(const ModelConfig& base, const Dataset& data, const TrainConfig& train_config,
                                      const AblationConfig& config) {
  config.validate();
  std::vector<AblationRow> rows = ablation_grid();
  const int64_t seeds = config.seeds;
  const int64_t jobs = static_cast<int64_t>(rows.size()) * seeds;
  std::vector<double> auroc_v(static_cast<size_t>(jobs)), auprc_v(static_cast<size_t>(jobs));
  std::vector<std::optional<SehmModel>> models(static_cast<size_t>(jobs));
  std::vector<Tensor> inputs(static_cast<size_t>(jobs));
  parallel_for(jobs, config.workers, [&](int64_t job) {
    const AblationRow& row = rows[static_cast<size_t>(job / seeds)];
    const auto k = static_cast<uint64_t>(job % seeds);
    ModelConfig mc = base;
    mc.cell = CellKind::kLstm;
    mc.locality = row.locality;
    mc.kernelized = row.kernelization;
    mc.attention = true;
    mc.seed = base.seed + k;
    TrainConfig tc = train_config;
    tc.zero_encoding = row.zero_encoding;
    tc.explainer = ExplainerMode::kOff;
    tc.seed = train_config.seed + k;
    tc.split_seed = train_config.split_seed + k;
    const PreparedData prepared = prepare(data, tc);
    const TrainResult result = train(mc, prepared, tc);
    const Tensor p = predict_batched(result.model, prepared.test_x);
    auroc_v[static_cast<size_t>(job)] = auroc(p.data(), prepared.test.labels.data());
    auprc_v[static_cast<size_t>(job)] = auprc(p.data(), prepared.test.labels.data());
    models[static_cast<size_t>(job)] = result.model;
    inputs[static_cast<size_t>(job)] = prepared.test_x;
  });
  // Timed one model at a time so concurrent training never skews a run.
  std::vector<double> infer_v(static_cast<size_t>(jobs));
  for (size_t job = 0; job < static_cast<size_t>(jobs); ++job) {
    infer_v[job] = inference_ms(*models[job], inputs[job], config.inference_batch, config.inference_runs);
  }
  for (size_t r = 0; r < rows.size(); ++r) {
    std::vector<double> times;
    for (int64_t k = 0; k < seeds; ++k) {
      const size_t job = r * static_cast<size_t>(seeds) + static_cast<size_t>(k);
      rows[r].auroc.push_back(auroc_v[job]);
      rows[r].auprc.push_back(auprc_v[job]);
      times.push_back(infer_v[job]);
    }
    rows[r].inference_ms = median(times);
  }
  return rows;
}

}  // namespace sehm
