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


#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "sehm/local_attention.h"
#include "test_util.h"

using namespace sehm;
using sehm::testing::max_abs_diff;
using sehm::testing::normal;
using sehm::testing::uniform;

namespace {

LocalizedSeries random_series(std::mt19937_64& rng, int64_t t_len, int64_t d, int64_t c, double missing = 0.2) {
  Tensor x = normal({t_len, d}, rng);
  Tensor m = Tensor::full({t_len, d}, 1.0);
  std::bernoulli_distribution drop(missing);
  for (double& v : m.mutable_data()) v = drop(rng) ? 0.0 : 1.0;
  return localize(x, m, c);
}

AttentionHead random_head(std::mt19937_64& rng, int64_t d, int64_t c) {
  return {normal({d, d}, rng, 0.5), normal({d, d}, rng, 0.5), uniform({c}, rng, 0.1, 1.0)};
}

// Softmax attention written as plain loops over one window at a time.
Tensor naive_exact(const LocalizedSeries& s, const AttentionHead& h) {
  const int64_t c = s.neighbor, d = s.variables;
  Tensor out({s.windows, d});
  for (int64_t l = 0; l < s.windows; ++l) {
    std::vector<double> q(static_cast<size_t>(c * d), 0.0), k(static_cast<size_t>(c * d), 0.0);
    for (int64_t i = 0; i < c; ++i) {
      for (int64_t a = 0; a < d; ++a) {
        for (int64_t b = 0; b < d; ++b) {
          const double x = s.values.at({l, i, b});
          q[static_cast<size_t>(i * d + a)] += x * h.query.at({b, a});
          k[static_cast<size_t>(i * d + a)] += x * h.key.at({b, a});
        }
      }
    }
    for (int64_t i = 0; i < c; ++i) {
      std::vector<double> w(static_cast<size_t>(c));
      double total = 0.0;
      for (int64_t j = 0; j < c; ++j) {
        double dot = 0.0;
        for (int64_t a = 0; a < d; ++a) dot += q[static_cast<size_t>(i * d + a)] * k[static_cast<size_t>(j * d + a)];
        w[static_cast<size_t>(j)] = std::exp(dot);
        total += w[static_cast<size_t>(j)];
      }
      for (int64_t j = 0; j < c; ++j) {
        for (int64_t a = 0; a < d; ++a) {
          out.at({l, a}) += h.aggregation[static_cast<size_t>(i)] * w[static_cast<size_t>(j)] / total *
                            s.values.at({l, j, a});
        }
      }
    }
  }
  return out;
}

// Kernelized attention through explicit feature vectors, quadratic form.
Tensor naive_kernel(const LocalizedSeries& s, const AttentionHead& h, const RandomFeatureMatrix& f) {
  const int64_t c = s.neighbor, d = s.variables;
  Tensor out({s.windows, d});
  for (int64_t l = 0; l < s.windows; ++l) {
    std::vector<Tensor> pq, pk;
    for (int64_t i = 0; i < c; ++i) {
      std::vector<double> q(static_cast<size_t>(d), 0.0), k(static_cast<size_t>(d), 0.0);
      for (int64_t a = 0; a < d; ++a) {
        for (int64_t b = 0; b < d; ++b) {
          q[static_cast<size_t>(a)] += s.values.at({l, i, b}) * h.query.at({b, a});
          k[static_cast<size_t>(a)] += s.values.at({l, i, b}) * h.key.at({b, a});
        }
      }
      pq.push_back(feature_map(q, f));
      pk.push_back(feature_map(k, f));
    }
    for (int64_t i = 0; i < c; ++i) {
      std::vector<double> w(static_cast<size_t>(c));
      double total = 0.0;
      for (int64_t j = 0; j < c; ++j) {
        double dot = 0.0;
        for (size_t r = 0; r < pq[0].size(); ++r) dot += pq[static_cast<size_t>(i)][r] * pk[static_cast<size_t>(j)][r];
        w[static_cast<size_t>(j)] = dot;
        total += dot;
      }
      for (int64_t j = 0; j < c; ++j) {
        for (int64_t a = 0; a < d; ++a) {
          out.at({l, a}) += h.aggregation[static_cast<size_t>(i)] * w[static_cast<size_t>(j)] / total *
                            s.values.at({l, j, a});
        }
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("localize zero-encodes missing entries and pads the tail") {
  std::mt19937_64 rng(1);
  const Tensor x = normal({7, 2}, rng);
  Tensor m = Tensor::full({7, 2}, 1.0);
  m.at({3, 1}) = 0.0;
  const LocalizedSeries s = localize(x, m, 3);
  CHECK(s.windows == 3);
  CHECK(s.values.shape() == Shape{3, 3, 2});
  CHECK(s.value(3, 1) == 0.0);
  CHECK(s.value(3, 0) == x.at({3, 0}));
  CHECK(s.value(6, 1) == x.at({6, 1}));
  CHECK(s.value(7, 0) == 0.0);
  CHECK(s.observed(8, 1) == 0.0);
  CHECK_THROWS_AS(localize(x, m, 0), SehmError);
}

TEST_CASE("orthogonal features are orthogonal within blocks and deterministic") {
  const RandomFeatureMatrix f = draw_orthogonal_features(4, 10, 9);
  CHECK(f.omega.shape() == Shape{10, 4});
  for (int64_t block = 0; block < 2; ++block) {
    for (int64_t i = block * 4; i < block * 4 + 4; ++i) {
      for (int64_t j = i + 1; j < block * 4 + 4; ++j) {
        double dot = 0.0;
        for (int64_t a = 0; a < 4; ++a) dot += f.omega.at({i, a}) * f.omega.at({j, a});
        CHECK(std::abs(dot) < 1e-12);
      }
    }
  }
  CHECK(draw_orthogonal_features(4, 10, 9).omega == f.omega);
  CHECK_FALSE(draw_orthogonal_features(4, 10, 10).omega == f.omega);
}

TEST_CASE("feature rows have the unit Gaussian second moment") {
  // E |omega|^2 = D for omega ~ N(0, I_D).
  const RandomFeatureMatrix f = draw_orthogonal_features(5, 20000, 3);
  double total = 0.0;
  for (double v : f.omega.data()) total += v * v;
  CHECK(total / 20000.0 == doctest::Approx(5.0).epsilon(0.03));
}

TEST_CASE("feature map follows its closed form") {
  const RandomFeatureMatrix f = draw_orthogonal_features(3, 4, 2);
  const std::vector<double> z = {0.3, -0.2, 0.5};
  const Tensor phi = feature_map(z, f);
  for (int64_t r = 0; r < 4; ++r) {
    double dot = 0.0;
    for (int64_t a = 0; a < 3; ++a) dot += f.omega.at({r, a}) * z[static_cast<size_t>(a)];
    CHECK(phi[static_cast<size_t>(r)] == doctest::Approx(std::exp(dot - 0.19) / 2.0).epsilon(1e-14));
  }
  CHECK_THROWS_AS(feature_map(std::vector<double>{1.0}, f), SehmError);
}

TEST_CASE("exact local attention matches the loop reference") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const LocalizedSeries s = random_series(rng, 23, 3, 5);
    const AttentionHead h = random_head(rng, 3, 5);
    CHECK(max_abs_diff(exact_local_attention(s, h), naive_exact(s, h)) < 1e-12);
  }
}

TEST_CASE("kernel local attention matches the quadratic feature form") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const LocalizedSeries s = random_series(rng, 20, 3, 4);
    const AttentionHead h = random_head(rng, 3, 4);
    const RandomFeatureMatrix f = draw_orthogonal_features(3, 8, static_cast<uint64_t>(trial));
    CHECK(max_abs_diff(kernel_local_attention(s, h, f), naive_kernel(s, h, f)) < 1e-12);
  }
}

TEST_CASE("all-missing windows give exactly zero output") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const int64_t c = 2 + trial % 5, d = 1 + trial % 4;
    Tensor x = normal({4 * c, d}, rng, 3.0);
    Tensor m = Tensor::full({4 * c, d}, 1.0);
    const int64_t blank = trial % 4;
    for (int64_t t = blank * c; t < (blank + 1) * c; ++t) {
      for (int64_t v = 0; v < d; ++v) m.at({t, v}) = 0.0;
    }
    const LocalizedSeries s = localize(x, m, c);
    const AttentionHead h = random_head(rng, d, c);
    const Tensor k = kernel_local_attention(s, h, draw_orthogonal_features(d, 6, static_cast<uint64_t>(trial)));
    const Tensor e = exact_local_attention(s, h);
    for (int64_t v = 0; v < d; ++v) {
      CHECK(k.at({blank, v}) == 0.0);
      CHECK(e.at({blank, v}) == 0.0);
    }
  }
}

TEST_CASE("contribution weights reproduce the head output") {
  std::mt19937_64 rng(14);
  const LocalizedSeries s = random_series(rng, 18, 3, 6);
  const AttentionHead h = random_head(rng, 3, 6);
  const RandomFeatureMatrix f = draw_orthogonal_features(3, 8, 4);
  const auto contract = [&](const Tensor& w) {
    Tensor out({s.windows, 3});
    for (int64_t l = 0; l < s.windows; ++l) {
      for (int64_t j = 0; j < 6; ++j) {
        for (int64_t a = 0; a < 3; ++a) out.at({l, a}) += w.at({l, j}) * s.values.at({l, j, a});
      }
    }
    return out;
  };
  CHECK(max_abs_diff(contract(attention_contribution_weights(s, h, f)), kernel_local_attention(s, h, f)) < 1e-12);
  CHECK(max_abs_diff(contract(exact_contribution_weights(s, h)), exact_local_attention(s, h)) < 1e-12);
}

TEST_CASE("multi-head aggregation is concat then projection") {
  std::mt19937_64 rng(15);
  const Tensor a = normal({4, 3}, rng), b = normal({4, 3}, rng);
  const MultiHeadConfig cfg{2, normal({6, 2}, rng)};
  const Tensor out = aggregate_multi_head({a, b}, cfg);
  for (int64_t l = 0; l < 4; ++l) {
    for (int64_t o = 0; o < 2; ++o) {
      double ref = 0.0;
      for (int64_t v = 0; v < 3; ++v) ref += a.at({l, v}) * cfg.output_projection.at({v, o});
      for (int64_t v = 0; v < 3; ++v) ref += b.at({l, v}) * cfg.output_projection.at({3 + v, o});
      CHECK(out.at({l, o}) == doctest::Approx(ref).epsilon(1e-13));
    }
  }
  CHECK_THROWS_AS(aggregate_multi_head({a}, cfg), SehmError);
}

TEST_CASE("kernel attention approaches softmax attention as features grow") {
  std::mt19937_64 rng(16);
  const LocalizedSeries s = random_series(rng, 12, 2, 3, 0.0);
  AttentionHead h = random_head(rng, 2, 3);
  const Tensor exact = exact_local_attention(s, h);
  double err_small = 0.0, err_large = 0.0;
  for (uint64_t seed = 0; seed < 5; ++seed) {
    err_small += max_abs_diff(kernel_local_attention(s, h, draw_orthogonal_features(2, 8, seed)), exact);
    err_large += max_abs_diff(kernel_local_attention(s, h, draw_orthogonal_features(2, 8000, seed)), exact);
  }
  CHECK(err_large < err_small);
  CHECK(err_large / 5.0 < 0.05);
}
