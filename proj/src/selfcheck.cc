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

#include "sehm/selfcheck.h"

#include <cmath>
#include <cstdio>
#include <random>

#include "sehm/explainer.h"
#include "sehm/gradcheck.h"
#include "sehm/local_attention.h"
#include "sehm/recurrent.h"

namespace sehm {
namespace {

constexpr double kEps = 1e-5;
constexpr double kTolerance = 1e-4;

std::string format(const char* f, double a, double b = 0.0) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), f, a, b);
  return buf;
}

// Normal entries pushed at least `gap` away from zero, so kinks at the
// origin (abs, relu) stay outside the difference stencil.
Tensor away_from_zero(Shape shape, std::mt19937_64& rng, double gap = 0.2) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> nd;
  for (double& v : t.mutable_data()) {
    const double x = nd(rng);
    v = x >= 0 ? gap + x : x - gap;
  }
  return t;
}

Tensor positive(Shape shape, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> u(0.5, 2.0);
  for (double& v : t.mutable_data()) v = u(rng);
  return t;
}

Tensor normal(Shape shape, std::mt19937_64& rng, double sd = 1.0) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> nd(0.0, sd);
  for (double& v : t.mutable_data()) v = nd(rng);
  return t;
}

// Scalar from any output: a fixed random projection.
ad::Var project(ad::Tape& tape, const ad::Var& out, uint64_t seed) {
  std::mt19937_64 rng(seed);
  return ad::sum_all(out * tape.constant(normal(out.shape(), rng)));
}

CheckResult grad_case(const std::string& name, const ScalarGraph& f, const std::vector<Tensor>& points) {
  const GradCheckReport r = check_gradients(f, points, kEps);
  CheckResult c{"gradient " + name, r.max_relative_error < kTolerance,
                format("max relative error %.3g over %.0f coordinates", r.max_relative_error,
                       static_cast<double>(r.coordinates))};
  return c;
}

}  // namespace

std::vector<CheckResult> gradient_checks(uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<CheckResult> out;
  using V = std::vector<ad::Var>;
  const auto unary = [&](const std::string& name, ad::Var (*op)(const ad::Var&), Tensor x) {
    out.push_back(grad_case(name, [op](ad::Tape& t, const V& in) { return project(t, op(in[0]), 11); }, {x}));
  };
  unary("exp", ad::exp, normal({3, 4}, rng, 0.5));
  unary("log", ad::log, positive({3, 4}, rng));
  unary("sigmoid", ad::sigmoid, normal({3, 4}, rng));
  unary("tanh", ad::tanh, normal({3, 4}, rng));
  unary("relu", ad::relu, away_from_zero({3, 4}, rng));
  unary("softplus", ad::softplus, normal({3, 4}, rng));
  unary("abs", ad::abs, away_from_zero({3, 4}, rng));
  unary("sqrt", ad::sqrt, positive({3, 4}, rng));
  unary("square", ad::square, normal({3, 4}, rng));

  const auto binary = [&](const std::string& name, ad::Var (*op)(const ad::Var&, const ad::Var&), Tensor a,
                          Tensor b) {
    out.push_back(grad_case(
        name, [op](ad::Tape& t, const V& in) { return project(t, op(in[0], in[1]), 12); }, {a, b}));
  };
  binary("add broadcast", ad::add, normal({2, 3, 4}, rng), normal({3, 1}, rng));
  binary("sub broadcast", ad::sub, normal({2, 1, 4}, rng), normal({3, 4}, rng));
  binary("mul broadcast", ad::mul, normal({2, 3, 4}, rng), normal({4}, rng));
  binary("div broadcast", ad::div, normal({2, 3, 4}, rng), positive({2, 1, 1}, rng));
  binary("matmul 2x2", ad::matmul, normal({3, 4}, rng), normal({4, 5}, rng));
  binary("matmul 3x3", ad::matmul, normal({2, 3, 4}, rng), normal({2, 4, 5}, rng));
  binary("matmul 3x2", ad::matmul, normal({2, 3, 4}, rng), normal({4, 5}, rng));
  binary("matmul 2x3", ad::matmul, normal({3, 4}, rng), normal({2, 4, 5}, rng));

  out.push_back(grad_case("scale", [](ad::Tape& t, const V& in) { return project(t, ad::scale(in[0], -1.7), 13); },
                          {normal({3, 4}, rng)}));
  out.push_back(grad_case(
      "clamp", [](ad::Tape& t, const V& in) { return project(t, ad::clamp(in[0], -0.1, 0.1), 13); },
      {away_from_zero({3, 4}, rng, 0.15)}));
  for (int axis = 0; axis < 3; ++axis) {
    const std::string a = std::to_string(axis);
    out.push_back(grad_case("softmax axis " + a,
                            [axis](ad::Tape& t, const V& in) { return project(t, ad::softmax(in[0], axis), 14); },
                            {normal({2, 3, 4}, rng)}));
    out.push_back(grad_case("sum axis " + a,
                            [axis](ad::Tape& t, const V& in) { return project(t, ad::sum(in[0], axis, true), 15); },
                            {normal({2, 3, 4}, rng)}));
    out.push_back(grad_case("mean axis " + a,
                            [axis](ad::Tape& t, const V& in) { return project(t, ad::mean(in[0], axis), 16); },
                            {normal({2, 3, 4}, rng)}));
    out.push_back(grad_case("norm axis " + a,
                            [axis](ad::Tape& t, const V& in) { return project(t, ad::norm(in[0], axis), 17); },
                            {away_from_zero({2, 3, 4}, rng)}));
  }
  out.push_back(grad_case("sum_all and mean_all",
                          [](ad::Tape&, const V& in) { return ad::sum_all(in[0]) * ad::mean_all(ad::square(in[0])); },
                          {normal({3, 4}, rng)}));
  out.push_back(grad_case(
      "concat", [](ad::Tape& t, const V& in) { return project(t, ad::concat({in[0], in[1]}, 1), 18); },
      {normal({2, 3, 4}, rng), normal({2, 2, 4}, rng)}));
  out.push_back(grad_case(
      "reshape", [](ad::Tape& t, const V& in) { return project(t, ad::reshape(in[0], {4, 6}), 19); },
      {normal({2, 3, 4}, rng)}));
  out.push_back(grad_case(
      "transpose", [](ad::Tape& t, const V& in) { return project(t, ad::transpose(in[0], 0, 2), 20); },
      {normal({2, 3, 4}, rng)}));
  out.push_back(grad_case(
      "slice", [](ad::Tape& t, const V& in) { return project(t, ad::slice(in[0], 1, 1, 3), 21); },
      {normal({2, 4, 3}, rng)}));

  // Attention stack.
  const int64_t c = 4, d = 3, r = 5;
  const RandomFeatureMatrix features = draw_orthogonal_features(d, r, seed + 1);
  const Tensor omega_t = ad::transpose2d(features.omega);
  out.push_back(grad_case(
      "feature map",
      [](ad::Tape& t, const V& in) { return project(t, feature_map_rows(in[0], in[1]), 22); },
      {normal({6, d}, rng, 0.5), omega_t}));
  const std::vector<Tensor> attention_points = {normal({2, c, d}, rng), normal({d, d}, rng, 0.5),
                                                normal({d, d}, rng, 0.5), positive({c}, rng)};
  out.push_back(grad_case(
      "kernel attention",
      [omega_t](ad::Tape& t, const V& in) {
        return project(t, kernel_attention(in[0], {in[1], in[2], in[3]}, t.constant(omega_t)), 23);
      },
      attention_points));
  out.push_back(grad_case(
      "exact attention",
      [](ad::Tape& t, const V& in) { return project(t, exact_attention(in[0], {in[1], in[2], in[3]}), 24); },
      attention_points));
  out.push_back(grad_case(
      "multi-head projection",
      [](ad::Tape& t, const V& in) { return project(t, aggregate_heads({in[0], in[1]}, in[2]), 25); },
      {normal({2, 3, d}, rng), normal({2, 3, d}, rng), normal({2 * d, 2}, rng)}));

  // Recurrent cells and classifier.
  for (CellKind kind : {CellKind::kGru, CellKind::kLstm}) {
    const int64_t in_size = 3, hidden = 4;
    const RecurrentParams p = RecurrentParams::init(kind, in_size, hidden, rng);
    out.push_back(grad_case(
        std::string(cell_name(kind)) + " cell",
        [kind, hidden](ad::Tape& t, const V& in) {
          const RecurrentVars cell{kind, hidden, in[1], in[2], in[3], in[4]};
          return project(t, run_recurrent(cell, in[0]), 26);
        },
        {normal({2, 5, in_size}, rng), p.w_input, p.w_hidden, p.b_input, p.b_hidden}));
  }
  out.push_back(grad_case(
      "classifier and loss",
      [](ad::Tape& t, const V& in) {
        return bce_loss(classify(in[0], in[1], in[2]), t.constant(Tensor::vector({1.0, 0.0, 1.0})));
      },
      {normal({3, 4}, rng), normal({4, 1}, rng), normal({1}, rng)}));

  // Theta network, each activation.
  for (Activation act : {Activation::kRelu, Activation::kTanh, Activation::kSigmoid, Activation::kSoftplus}) {
    ThetaNetwork net = ThetaNetwork::init(4, 2, 5, act, rng);
    std::vector<Tensor> points = {away_from_zero({3, 4}, rng)};
    for (Tensor& w : net.tensors()) points.push_back(w);
    for (size_t k = 2; k < points.size(); k += 2) points[k] = normal(points[k].shape(), rng, 0.3);
    out.push_back(grad_case(std::string("theta network ") + activation_name(act),
                            [act](ad::Tape& t, const V& in) {
                              ThetaVars vars{{in[1], in[3]}, {in[2], in[4]}, act};
                              return project(t, theta_forward(vars, in[0]), 27);
                            },
                            points));
  }

  // Spectral norm through its converged singular vectors.
  {
    const Tensor w = normal({4, 3}, rng);
    out.push_back(grad_case("spectral norm",
                            [](ad::Tape&, const V& in) {
                              return spectral_norm(in[0], spectral_norm(in[0].value(), 2000, 1e-15));
                            },
                            {w}));
  }
  return out;
}

CheckResult gap_zero_check(uint64_t seed, int64_t samples, int64_t draws) {
  const int64_t c = 30, d = 4, t_len = 300, gap = 2 * c - 1;
  std::mt19937_64 rng(seed);
  int64_t zero_rows = 0;
  double worst = 0.0;
  for (int64_t s = 0; s < samples; ++s) {
    Tensor series = normal({t_len, d}, rng);
    Tensor mask = Tensor::full({t_len, d}, 1.0);
    const int64_t start = std::uniform_int_distribution<int64_t>(0, t_len - gap)(rng);
    for (int64_t t = start; t < start + gap; ++t) {
      for (int64_t v = 0; v < d; ++v) mask.at({t, v}) = 0.0;
    }
    const LocalizedSeries loc = localize(series, mask, c);
    for (int64_t k = 0; k < draws; ++k) {
      const AttentionHead head{normal({d, d}, rng), normal({d, d}, rng), positive({c}, rng)};
      const RandomFeatureMatrix features = draw_orthogonal_features(d, 8, seed + static_cast<uint64_t>(s * draws + k));
      const Tensor kernel = kernel_local_attention(loc, head, features);
      const Tensor exact = exact_local_attention(loc, head);
      for (int64_t l = 0; l < loc.windows; ++l) {
        if (l * c < start || (l + 1) * c > start + gap) continue;
        ++zero_rows;
        for (int64_t v = 0; v < d; ++v) {
          worst = std::max({worst, std::abs(kernel.at({l, v})), std::abs(exact.at({l, v}))});
        }
      }
    }
  }
  return {"gap windows give zero attention output", zero_rows > 0 && worst == 0.0,
          format("%.0f covered rows, max |output| %.3g", static_cast<double>(zero_rows), worst)};
}

CheckResult surrogate_bound_check(uint64_t seed, int64_t instances) {
  std::mt19937_64 rng(seed);
  double worst = 1e300;
  const Activation acts[] = {Activation::kRelu, Activation::kTanh, Activation::kSigmoid, Activation::kSoftplus};
  for (int64_t i = 0; i < instances; ++i) {
    const int64_t dim = 2 + static_cast<int64_t>(i % 7);
    const ThetaNetwork net = ThetaNetwork::init(dim, 1 + static_cast<int>(i % 3), dim + 1, acts[i % 4], rng);
    const Tensor z = normal({dim}, rng);
    const Tensor grad = normal({dim}, rng);
    const double lambda = 0.05 + 0.5 * static_cast<double>(i % 5);
    worst = std::min(worst, surrogate_loss(z, net, grad, lambda) - exact_explanation_loss(z, net, grad, lambda));
  }
  return {"surrogate loss bounds exact loss", worst >= -1e-8, format("min slack %.3g", worst)};
}

CheckResult certificate_check(uint64_t seed, int64_t nets, int64_t pairs) {
  std::mt19937_64 rng(seed);
  double worst_ratio = 0.0;
  for (int64_t n = 0; n < nets; ++n) {
    const int64_t dim = 6;
    const ThetaNetwork net = ThetaNetwork::init(dim, 3, 8, n % 2 == 0 ? Activation::kRelu : Activation::kTanh, rng);
    const double cert = lipschitz_certificate(net);
    const Tensor a = normal({pairs, dim}, rng);
    Tensor b = a;
    std::normal_distribution<double> step(0.0, 0.3);
    for (double& v : b.mutable_data()) v += step(rng);
    const Tensor ta = theta_forward(a, net), tb = theta_forward(b, net);
    for (int64_t p = 0; p < pairs; ++p) {
      double dz = 0.0, dt = 0.0;
      for (int64_t j = 0; j < dim; ++j) {
        const size_t k = static_cast<size_t>(p * dim + j);
        dz += (a[k] - b[k]) * (a[k] - b[k]);
        dt += (ta[k] - tb[k]) * (ta[k] - tb[k]);
      }
      if (dz > 0.0) worst_ratio = std::max(worst_ratio, std::sqrt(dt / dz) / cert);
    }
  }
  return {"certificate bounds theta differences", worst_ratio <= 1.0 + 1e-9,
          format("max ratio to certificate %.6f", worst_ratio)};
}

std::vector<CheckResult> run_selfcheck(uint64_t seed) {
  std::vector<CheckResult> all = gradient_checks(seed);
  all.push_back(gap_zero_check(seed, 20, 3));
  all.push_back(surrogate_bound_check(seed, 100));
  all.push_back(certificate_check(seed, 10, 1000));
  return all;
}

}  // namespace sehm
