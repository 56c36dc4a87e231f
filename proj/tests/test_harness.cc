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


#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "doctest.h"
#include "sehm/harness.h"
#include "sehm/metrics.h"
#include "sehm/synthetic.h"
#include "sehm/training.h"
#include "test_util.h"

using namespace sehm;
using sehm::testing::normal;

namespace {

double pair_count_auroc(const std::vector<double>& s, const std::vector<double>& y) {
  double wins = 0.0, pairs = 0.0;
  for (size_t i = 0; i < s.size(); ++i) {
    for (size_t j = 0; j < s.size(); ++j) {
      if (y[i] != 1.0 || y[j] != 0.0) continue;
      pairs += 1.0;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

SyntheticSpec small_spec() {
  SyntheticSpec s;
  s.samples = 40;
  s.length = 120;
  s.variables = 5;
  s.region_begin = 20;
  s.region_end = 80;
  s.gap_max = 30;
  s.joint_gap_min = 19;
  s.joint_gap_max = 25;
  return s;
}

}  // namespace

TEST_CASE("auroc matches exhaustive pair counting") {
  const std::vector<double> s = {0.1, 0.4, 0.35, 0.8, 0.4, 0.7}, y = {0, 0, 1, 1, 1, 0};
  CHECK(auroc(s, y) == doctest::Approx(pair_count_auroc(s, y)).epsilon(1e-15));
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> coarse(0, 5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> sc(30), lab(30);
    for (size_t i = 0; i < 30; ++i) {
      sc[i] = coarse(rng);
      lab[i] = i < 10 ? 1.0 : static_cast<double>(coarse(rng) % 2);
    }
    lab[29] = 0.0;
    CHECK(auroc(sc, lab) == doctest::Approx(pair_count_auroc(sc, lab)).epsilon(1e-14));
  }
}

TEST_CASE("auroc edge cases") {
  CHECK(auroc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, std::vector<double>{0, 0, 1, 1}) == 1.0);
  CHECK_THROWS_AS(auroc(std::vector<double>{0.1, 0.2}, std::vector<double>{1, 1}), SehmError);
  std::mt19937_64 rng(2);
  std::vector<double> s(20000), y(20000);
  std::uniform_real_distribution<double> u;
  for (size_t i = 0; i < s.size(); ++i) {
    s[i] = u(rng);
    y[i] = u(rng) < 0.5 ? 1.0 : 0.0;
  }
  CHECK(std::abs(auroc(s, y) - 0.5) < 0.05);
}

TEST_CASE("auprc by hand") {
  // Descending: 0.9(1) 0.8(0) 0.7(1) 0.1(0): precision 1 at recall 0.5, 2/3 at recall 1.
  CHECK(auprc(std::vector<double>{0.9, 0.8, 0.7, 0.1}, std::vector<double>{1, 0, 1, 0}) ==
        doctest::Approx(0.5 + 0.5 * 2.0 / 3.0));
  // A tie group counts once at its pooled precision.
  CHECK(auprc(std::vector<double>{0.5, 0.5, 0.2}, std::vector<double>{1, 0, 1}) == doctest::Approx(0.5 * 0.5 + 0.5 * 2.0 / 3.0));
  CHECK(auprc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, std::vector<double>{0, 0, 1, 1}) == 1.0);
}

TEST_CASE("local accuracy closed forms") {
  const std::vector<double> f = {0.2, 0.7, 0.9};
  CHECK(local_accuracy(f, f) == 0.0);
  std::vector<double> g = f;
  for (double& v : g) v += 0.1;
  CHECK(local_accuracy(g, f) == doctest::Approx(0.01));
}

TEST_CASE("aopc of an input-blind model is zero") {
  std::mt19937_64 rng(3);
  const Tensor x = normal({3, 4, 2}, rng);
  const BatchScore blind = [](const Tensor& b) { return Tensor::full({b.dim(0)}, 0.3); };
  std::vector<std::vector<int64_t>> ranks(3, random_ranking(8, 1));
  for (double v : aopc(blind, x, ranks, {1, 4, 8})) CHECK(v == 0.0);
  CHECK_THROWS_AS(aopc(blind, x, ranks, {9}), SehmError);
}

TEST_CASE("aopc follows its definition and favors the true position") {
  // Four positions, f depends on position 2 only.
  const Tensor x({1, 4, 1}, {1.0, 2.0, 3.0, 4.0});
  const BatchScore f = [](const Tensor& b) {
    Tensor out({b.dim(0)});
    for (int64_t i = 0; i < b.dim(0); ++i) out[static_cast<size_t>(i)] = b[static_cast<size_t>(i * 4 + 2)] * 0.25;
    return out;
  };
  std::vector<int64_t> perm = {0, 1, 2, 3};
  double best = -1.0;
  std::vector<int64_t> best_perm;
  do {
    const double a = aopc(f, x, {perm}, {1})[0];
    // Definition at k=1: (1/2) [0 + (f(x) - f(x without top-1))].
    const double expected = perm[0] == 2 ? 0.5 * 0.75 : 0.0;
    CHECK(a == doctest::Approx(expected));
    if (a > best) {
      best = a;
      best_perm = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  CHECK(best_perm[0] == 2);
}

TEST_CASE("magnitude ranking orders by |beta| with stable ties") {
  const Tensor beta = Tensor::vector({0.1, -0.5, 0.5, 0.0, -0.2});
  CHECK(rank_by_magnitude(beta) == std::vector<int64_t>{1, 2, 4, 0, 3});
  std::vector<int64_t> r = random_ranking(50, 4);
  std::sort(r.begin(), r.end());
  std::vector<int64_t> all(50);
  std::iota(all.begin(), all.end(), int64_t{0});
  CHECK(r == all);
}

TEST_CASE("estimated lipschitz of constant and linear theta") {
  std::mt19937_64 rng(5);
  const Tensor centers = normal({10, 4}, rng);
  ThetaNetwork constant({{Tensor({4, 4}), Tensor::vector({1.0, 2.0, 3.0, 4.0})}}, Activation::kRelu);
  CHECK(estimated_lipschitz(constant, centers, 0.5, 50, 1) == 0.0);

  const Tensor w = normal({4, 4}, rng);
  const ThetaNetwork linear({{w, Tensor({4})}}, Activation::kRelu);
  const double norm = spectral_norm(w, 5000, 1e-15).value;
  const double few = estimated_lipschitz(linear, centers, 0.5, 5, 1);
  const double many = estimated_lipschitz(linear, centers, 0.5, 5000, 1);
  CHECK(few <= norm * (1.0 + 1e-12));
  CHECK(many <= norm * (1.0 + 1e-12));
  CHECK(many >= few);
  CHECK(many > 0.9 * norm);
}

TEST_CASE("synthetic data is deterministic and follows the label rule") {
  const SyntheticSpec spec = small_spec();
  const Dataset a = generate_synthetic(spec), b = generate_synthetic(spec);
  CHECK(a.values == b.values);
  CHECK(a.mask == b.mask);
  CHECK(a.labels == b.labels);
  SyntheticSpec other = spec;
  other.seed = 2;
  CHECK_FALSE(generate_synthetic(other).values == a.values);

  const std::vector<int64_t> pos = planted_positions(spec);
  double positives = 0.0;
  for (int64_t i = 0; i < a.size(); ++i) {
    const bool planted = pos[static_cast<size_t>(i)] >= 0;
    CHECK(planted == (a.labels[static_cast<size_t>(i)] == 1.0));
    if (planted) {
      CHECK(pos[static_cast<size_t>(i)] >= spec.region_begin);
      CHECK(pos[static_cast<size_t>(i)] + 12 <= spec.region_end);
      // Gaps never cover the motif.
      for (int64_t t = pos[static_cast<size_t>(i)]; t < pos[static_cast<size_t>(i)] + 12; ++t) {
        for (int64_t v = 0; v < 3; ++v) CHECK(a.mask.at({i, t, v}) == 1.0);
      }
    }
    positives += a.labels[static_cast<size_t>(i)];
  }
  CHECK(std::abs(positives / 40.0 - 0.5) <= 0.02);
  for (size_t k = 0; k < a.values.size(); ++k) {
    if (a.mask[k] == 0.0) CHECK(a.values[k] == 0.0);
  }
}

TEST_CASE("a direct matched filter separates the noiseless task") {
  SyntheticSpec spec;
  spec.samples = 300;
  const Dataset ds = generate_synthetic(spec);
  const Motif& m = spec.motifs.front();
  std::vector<double> score(static_cast<size_t>(ds.size()));
  for (int64_t i = 0; i < ds.size(); ++i) {
    double best = -1e300;
    for (int64_t s = spec.region_begin; s + m.length() <= spec.region_end; ++s) {
      double c = 0.0;
      for (int64_t k = 0; k < m.length(); ++k) {
        for (size_t j = 0; j < 3; ++j) c += m.pattern[static_cast<size_t>(k) * 3 + j] * ds.values.at({i, s + k, m.variables[j]});
      }
      best = std::max(best, c);
    }
    score[static_cast<size_t>(i)] = best;
  }
  CHECK(auroc(score, ds.labels.data()) == 1.0);
}

TEST_CASE("gaps of 2C-1 steps leave an all-missing window") {
  SyntheticSpec spec;
  spec.samples = 50;
  spec.joint_gap_min = spec.joint_gap_max = 59;
  const Dataset ds = generate_synthetic(spec);
  for (int64_t i = 0; i < ds.size(); ++i) {
    const LocalizedSeries s = localize(ds.sample_values(i), ds.sample_mask(i), 30);
    bool found = false;
    for (int64_t l = 0; l < s.windows && !found; ++l) {
      double seen = 0.0;
      for (int64_t k = 0; k < 30 * 8; ++k) seen += s.mask[static_cast<size_t>(l * 240 + k)];
      found = seen == 0.0;
    }
    CHECK(found);
  }
}

TEST_CASE("infeasible specs are rejected") {
  SyntheticSpec s = small_spec();
  s.samples = 3;
  s.positive_fraction = 0.5;
  CHECK_THROWS_AS(generate_synthetic(s), SehmError);
  s = small_spec();
  s.region_end = s.region_begin + 5;
  CHECK_THROWS_AS(generate_synthetic(s), SehmError);
  s = small_spec();
  s.gap_max = 1000;
  CHECK_THROWS_AS(generate_synthetic(s), SehmError);
}

TEST_CASE("splits are stratified, disjoint, complete and reproducible") {
  Tensor labels({200});
  for (int64_t i = 0; i < 100; ++i) labels[static_cast<size_t>(i)] = 1.0;
  const Split a = split_dataset(labels, 0.25, 0.1, 3), b = split_dataset(labels, 0.25, 0.1, 3);
  CHECK(a.train == b.train);
  CHECK(a.test == b.test);
  // Per class: 25 test, round(7.5) = 8 validation, 67 train.
  CHECK(a.test.size() == 50);
  CHECK(a.validation.size() == 16);
  CHECK(a.train.size() == 134);
  double test_pos = 0.0;
  for (int64_t i : a.test) test_pos += labels[static_cast<size_t>(i)];
  CHECK(test_pos == 25.0);
  std::set<int64_t> all(a.train.begin(), a.train.end());
  all.insert(a.validation.begin(), a.validation.end());
  all.insert(a.test.begin(), a.test.end());
  CHECK(all.size() == 200);
}

TEST_CASE("standardizer encodings") {
  Dataset ds;
  ds.values = Tensor({1, 4, 1}, {0.0, 2.0, 0.0, 4.0});
  ds.mask = Tensor({1, 4, 1}, {0.0, 1.0, 0.0, 1.0});
  ds.labels = Tensor({1});
  ds.ids = {"a"};
  ds.variable_names = {"v"};
  const Standardizer st = Standardizer::fit(ds);
  CHECK(st.mean[0] == doctest::Approx(3.0));
  const Tensor zero = st.apply(ds, true), fill = st.apply(ds, false);
  CHECK(zero[0] == 0.0);
  CHECK(zero[2] == 0.0);
  // Forward fill carries the previous observation, backfilling the start.
  CHECK(fill[0] == fill[1]);
  CHECK(fill[2] == fill[1]);
  CHECK(fill[3] == zero[3]);
}

TEST_CASE("training overfits a tiny set and is deterministic") {
  SyntheticSpec spec = small_spec();
  spec.samples = 48;
  const Dataset ds = generate_synthetic(spec);
  ModelConfig mc;
  mc.length = spec.length;
  mc.variables = spec.variables;
  mc.neighbor = 10;
  TrainConfig tc;
  tc.batch_size = 16;
  tc.epochs = 150;
  tc.learning_rate = 1e-2;
  tc.explainer = ExplainerMode::kOff;
  const PreparedData pd = prepare(ds, tc);
  CHECK(pd.train.size() == 32);
  const TrainResult a = train(mc, pd, tc);
  CHECK(a.history.back().train_loss < 0.05);
  tc.epochs = 3;
  const TrainResult b = train(mc, pd, tc), c = train(mc, pd, tc);
  for (size_t k = 0; k < b.model.params().size(); ++k) CHECK(b.model.params()[k] == c.model.params()[k]);
}

TEST_CASE("explainer modes need local attention") {
  ModelConfig mc;
  mc.locality = false;
  SyntheticSpec spec = small_spec();
  mc.length = spec.length;
  mc.variables = spec.variables;
  TrainConfig tc;
  tc.epochs = 1;
  const PreparedData pd = prepare(generate_synthetic(spec), tc);
  CHECK_THROWS_AS(train(mc, pd, tc), SehmError);
}

TEST_CASE("summary statistics") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK(mean({1.0, 2.0, 6.0}) == 3.0);
  CHECK(stddev({2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0}) == doctest::Approx(std::sqrt(32.0 / 7.0)));
}

TEST_CASE("parallel_for covers every index and rethrows") {
  std::vector<std::atomic<int>> hits(37);
  parallel_for(37, 4, [&](int64_t i) { hits[static_cast<size_t>(i)]++; });
  for (auto& h : hits) CHECK(h.load() == 1);
  CHECK_THROWS_AS(parallel_for(10, 3,
                               [](int64_t i) {
                                 if (i == 7) throw SehmError("boom");
                               }),
                  SehmError);
}

TEST_CASE("ablation grid has the eight flag rows") {
  const std::vector<AblationRow> rows = ablation_grid();
  REQUIRE(rows.size() == 8);
  std::set<int> seen;
  for (const AblationRow& r : rows) seen.insert(r.locality * 4 + r.zero_encoding * 2 + r.kernelization);
  CHECK(seen.size() == 8);
}

TEST_CASE("evaluation reports are deterministic") {
  SyntheticSpec spec = small_spec();
  spec.samples = 60;
  const Dataset ds = generate_synthetic(spec);
  ModelConfig mc;
  mc.length = spec.length;
  mc.variables = spec.variables;
  mc.neighbor = 10;
  TrainConfig tc;
  tc.epochs = 2;
  const PreparedData pd = prepare(ds, tc);
  const TrainResult r = train(mc, pd, tc);
  EvaluateConfig ec;
  ec.aopc_cutoffs = {5, 50, 600};
  ec.aopc_samples = 4;
  ec.random_rankings = 3;
  ec.lipschitz_centers = 4;
  ec.lipschitz_points = 20;
  const MetricsReport a = evaluate(r.model, &*r.theta, pd, ec), b = evaluate(r.model, &*r.theta, pd, ec);
  CHECK(a.auroc == b.auroc);
  CHECK(a.auroc >= 0.0);
  CHECK(a.auroc <= 1.0);
  CHECK(*a.local_accuracy == *b.local_accuracy);
  CHECK(a.aopc->beta == b.aopc->beta);
  CHECK(a.aopc->random.size() == 3);
  CHECK(*a.estimated_lipschitz <= *a.lipschitz_certificate);
  ec.aopc_cutoffs = {601};
  CHECK_THROWS_AS(evaluate(r.model, &*r.theta, pd, ec), SehmError);
}
