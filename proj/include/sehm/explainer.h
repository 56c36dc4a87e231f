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

// Self-explaining linear approximation of the classifier.
//
// A coefficient network theta maps the attention output z to one weight per
// coordinate, and g(z) = theta(z) . z approximates f(z). Because z is a
// linear function of the raw window values (for fixed attention weights),
// theta can be pushed back through W^O and the normalized attention weights
// to give one signed contribution per raw (t, d) entry.
//
// theta is trained to match grad f on points sampled around each center,
// with its Jacobian penalty replaced by the product of per-layer spectral
// norms, which also certifies a global Lipschitz bound on theta.

#ifndef SEHM_EXPLAINER_H_
#define SEHM_EXPLAINER_H_

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sehm/autodiff.h"
#include "sehm/local_attention.h"
#include "sehm/model.h"
#include "sehm/optim.h"

namespace sehm {

// Only 1-Lipschitz activations are offered.
enum class Activation { kRelu, kTanh, kSigmoid, kSoftplus };

const char* activation_name(Activation a);
Activation parse_activation(const std::string& name);
ad::Var activate(const ad::Var& x, Activation a);

struct ThetaLayer {
  Tensor weight;  // in x out
  Tensor bias;    // out
};

class ThetaNetwork {
 public:
  ThetaNetwork() = default;
  // The activation follows every layer but the last, which is linear.
  ThetaNetwork(std::vector<ThetaLayer> layers, Activation activation);

  // depth layers: dim -> hidden -> ... -> dim, uniform in +-1/sqrt(fan-in),
  // zero biases.
  static ThetaNetwork init(int64_t dim, int depth, int64_t hidden, Activation activation, std::mt19937_64& rng);

  int64_t input_dim() const { return layers_.front().weight.dim(0); }
  int64_t output_dim() const { return layers_.back().weight.dim(1); }
  int depth() const { return static_cast<int>(layers_.size()); }
  Activation activation() const { return activation_; }
  const std::vector<ThetaLayer>& layers() const { return layers_; }
  std::vector<ThetaLayer>& layers() { return layers_; }

  void add_to(ParameterSet& set, const std::string& prefix) const;
  static ThetaNetwork from(const ParameterSet& set, const std::string& prefix, Activation activation);

  // Parameters in layer order: w0, b0, w1, b1, ...
  std::vector<Tensor> tensors() const;
  void assign(const std::vector<Tensor>& tensors);

 private:
  std::vector<ThetaLayer> layers_;
  Activation activation_ = Activation::kRelu;
};

struct ThetaVars {
  std::vector<ad::Var> weights;
  std::vector<ad::Var> biases;
  Activation activation = Activation::kRelu;

  // w0, b0, w1, b1, ...
  std::vector<ad::Var> all() const;
};

ThetaVars bind_theta(const ThetaNetwork& net, ad::Tape& tape, bool trainable);

// theta for every row of N x D_r.
ad::Var theta_forward(const ThetaVars& net, const ad::Var& z);
Tensor theta_forward(const Tensor& z, const ThetaNetwork& net);

// theta . z
double g_approx(std::span<const double> z, std::span<const double> theta);

struct SpectralNormResult {
  double value = 0.0;
  Tensor u;  // left singular vector, rows
  Tensor v;  // right singular vector, columns
  int iterations = 0;
  bool converged = false;
};

// Power iteration on W^T W from a seeded Gaussian start (or `warm_start`,
// a length-cols vector). Stops when successive estimates differ by < tol;
// otherwise returns the last estimate with converged = false.
SpectralNormResult spectral_norm(const Tensor& w, int max_iters = 500, double tol = 1e-12, uint64_t seed = 1,
                                 const Tensor* warm_start = nullptr);

// Differentiable spectral norm: the value of `result` with gradient u v^T.
ad::Var spectral_norm(const ad::Var& w, const SpectralNormResult& result);

// Product of per-layer spectral norms.
double lipschitz_certificate(const ThetaNetwork& net);

// Jacobian d theta / d z at one point, D_r x D_r, one reverse pass per row.
Tensor theta_jacobian(const Tensor& z, const ThetaNetwork& net);

// How theta is compared with grad f. kIdentity: |theta - grad f|.
// kAllOnes: |(sum theta) 1 - grad f|.
enum class GradientMatch { kIdentity, kAllOnes };

// Scalar model score for every row of N x D_r, returned as length N.
using ScoreGraph = std::function<ad::Var(ad::Tape&, const ad::Var&)>;

ScoreGraph model_score(const SehmModel& model);

// grad f for every row of Z (N x D_r). Rows are independent, so one
// backward pass of sum f suffices.
Tensor grad_f(const ScoreGraph& f, const Tensor& z);

// Euclidean mismatch between theta(z) and grad f(z).
double gradient_mismatch(std::span<const double> theta, std::span<const double> grad, GradientMatch match);

// |theta(z) J - grad f| + lambda |d theta / d z|_1, with the induced 1-norm.
double exact_explanation_loss(const Tensor& z, const ThetaNetwork& net, const Tensor& grad, double lambda,
                              GradientMatch match = GradientMatch::kIdentity);
double exact_explanation_loss(const Tensor& z, const ThetaNetwork& net, const ScoreGraph& f, double lambda,
                              GradientMatch match = GradientMatch::kIdentity);

// |theta(z) J - grad f| + lambda sqrt(D_r) prod_k |W_k|_2.
double surrogate_loss(const Tensor& z, const ThetaNetwork& net, const Tensor& grad, double lambda,
                      GradientMatch match = GradientMatch::kIdentity);
double surrogate_loss(const Tensor& z, const ThetaNetwork& net, const ScoreGraph& f, double lambda,
                      GradientMatch match = GradientMatch::kIdentity);

struct PerturbationSet {
  Tensor center;  // D_r
  double radius = 0.0;
  int64_t count = 0;
  uint64_t seed = 0;
  Tensor points;  // count x D_r
};

// Uniform in the radius ball: Gaussian direction, radius delta U^(1/D_r).
PerturbationSet sample_perturbations(const Tensor& center, double radius, int64_t count, uint64_t seed);

struct ObjectiveConfig {
  double lambda = 0.1;
  double lambda_r = 1e-4;
  GradientMatch match = GradientMatch::kIdentity;
  int power_iters = 50;
  double power_tol = 1e-10;
};

// Differentiable objective: mean over perturbation sets of the summed
// surrogate losses plus lambda_r times the L1 norm of every theta parameter.
// `points` stacks the sets (sets x per_set rows), `grads` holds grad f at
// each point. `spectra` supplies one power-iteration result per layer.
ad::Var explanation_objective(const ThetaVars& net, const ad::Var& points, const Tensor& grads, int64_t sets,
                              const std::vector<SpectralNormResult>& spectra, const ObjectiveConfig& config);

// Same objective for given perturbation sets, without gradients.
double explanation_objective(const std::vector<PerturbationSet>& sets, const ThetaNetwork& net, const ScoreGraph& f,
                             const ObjectiveConfig& config);

// Adam on the explanation objective with warm-started power iterations.
class ThetaTrainer {
 public:
  ThetaTrainer(ThetaNetwork net, ObjectiveConfig objective, AdamConfig adam);

  // One step on the stacked points of `sets` perturbation sets; returns the
  // objective before the update.
  double step(const Tensor& points, const Tensor& grads, int64_t sets);

  const ThetaNetwork& network() const { return net_; }
  const ObjectiveConfig& objective() const { return objective_; }
  AdamState& adam() { return adam_; }

 private:
  ThetaNetwork net_;
  ObjectiveConfig objective_;
  AdamState adam_;
  std::vector<Tensor> warm_;
};

// Normalized attention weights of every head for one localized series,
// tagged with the series they came from.
struct ContributionWeights {
  std::vector<Tensor> heads;  // each L x C
  uint64_t pass = 0;
};

struct ThetaOutput {
  Tensor theta;  // D_r = L * D_o
  uint64_t pass = 0;
};

// Tag identifying one forward pass over a localized series.
uint64_t pass_tag(const LocalizedSeries& series);

ContributionWeights contribution_weights(const SehmModel& model, const LocalizedSeries& series);
ThetaOutput theta_for(const SehmModel& model, const ThetaNetwork& net, const LocalizedSeries& series);

// beta[t, d] = sum_h c_h[l, j] sum_o theta[l, o] W^O[h D + d, o] for
// t = l C + j, returned as T x D (padded steps dropped). Rejects weights and
// theta from different passes.
Tensor beta_decompose(const LocalizedSeries& series, const ContributionWeights& weights, const ThetaOutput& theta,
                      const MultiHeadConfig& config);

struct Explanation {
  Tensor theta;  // D_r
  double g = 0.0;
  double f = 0.0;
  Tensor beta;     // T x D
  Tensor values;   // T x D, zero-encoded inputs
  Tensor missing;  // T x D, 1 = missing
};

// Full explanation of one zero-encoded T x D series with its observation mask.
Explanation explain(const SehmModel& model, const ThetaNetwork& net, const Tensor& series, const Tensor& mask);

}  // namespace sehm

#endif  // SEHM_EXPLAINER_H_
