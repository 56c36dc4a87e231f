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

#include "sehm/explainer.h"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace sehm {
namespace {

double norm2(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

void normalize(std::vector<double>& x) {
  const double n = norm2(x);
  for (double& v : x) v /= n;
}

// y = W x (transpose = false) or W^T x for a rows x cols matrix.
std::vector<double> apply(const Tensor& w, const std::vector<double>& x, bool transpose) {
  const int64_t rows = w.dim(0), cols = w.dim(1);
  std::vector<double> y(static_cast<size_t>(transpose ? cols : rows), 0.0);
  const double* p = w.data().data();
  for (int64_t i = 0; i < rows; ++i) {
    for (int64_t j = 0; j < cols; ++j) {
      const double a = p[i * cols + j];
      if (transpose) {
        y[static_cast<size_t>(j)] += a * x[static_cast<size_t>(i)];
      } else {
        y[static_cast<size_t>(i)] += a * x[static_cast<size_t>(j)];
      }
    }
  }
  return y;
}

std::vector<SpectralNormResult> layer_spectra(const ThetaNetwork& net, int iters, double tol) {
  std::vector<SpectralNormResult> out;
  for (size_t k = 0; k < net.layers().size(); ++k) {
    out.push_back(spectral_norm(net.layers()[k].weight, iters, tol, k + 1));
  }
  return out;
}

void fnv_mix(uint64_t& h, const void* data, size_t bytes) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
}

Tensor series_batch(const SehmModel& model, const LocalizedSeries& series) {
  const int64_t t = series.length, d = series.variables;
  if (t != model.config().length || d != model.config().variables) {
    throw SehmError("explainer: series " + std::to_string(t) + " x " + std::to_string(d) +
                    " does not fit the model");
  }
  const auto src = series.values.data();
  return Tensor({1, t, d}, std::vector<double>(src.begin(), src.begin() + t * d));
}

void require_local_attention(const SehmModel& model) {
  if (!model.config().attention || !model.config().locality) {
    throw SehmError("explainer: contributions need local attention (attention and locality on)");
  }
}

}  // namespace

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kSoftplus: return "softplus";
  }
  return "?";
}

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "softplus") return Activation::kSoftplus;
  throw SehmError("unsupported activation '" + name + "' (use relu, tanh, sigmoid or softplus)");
}

ad::Var activate(const ad::Var& x, Activation a) {
  switch (a) {
    case Activation::kRelu: return ad::relu(x);
    case Activation::kTanh: return ad::tanh(x);
    case Activation::kSigmoid: return ad::sigmoid(x);
    case Activation::kSoftplus: return ad::softplus(x);
  }
  return x;
}

ThetaNetwork::ThetaNetwork(std::vector<ThetaLayer> layers, Activation activation)
    : layers_(std::move(layers)), activation_(activation) {
  if (layers_.empty()) throw SehmError("theta network needs at least one layer");
  for (size_t k = 0; k < layers_.size(); ++k) {
    const ThetaLayer& l = layers_[k];
    if (l.weight.rank() != 2 || l.bias.shape() != Shape{l.weight.dim(1)}) {
      throw SehmError("theta layer " + std::to_string(k) + ": weight " + shape_string(l.weight.shape()) +
                      " and bias " + shape_string(l.bias.shape()) + " disagree");
    }
    if (k > 0 && layers_[k - 1].weight.dim(1) != l.weight.dim(0)) {
      throw SehmError("theta layer " + std::to_string(k) + " input width does not match the previous layer");
    }
    if (!l.weight.all_finite() || !l.bias.all_finite()) throw SehmError("theta network parameters are not finite");
  }
  if (input_dim() != output_dim()) throw SehmError("theta network must map D_r to D_r");
}

ThetaNetwork ThetaNetwork::init(int64_t dim, int depth, int64_t hidden, Activation activation,
                                std::mt19937_64& rng) {
  if (dim < 1 || depth < 1 || hidden < 1) throw SehmError("theta network sizes must be positive");
  std::vector<ThetaLayer> layers;
  int64_t in = dim;
  for (int k = 0; k < depth; ++k) {
    const int64_t out = k + 1 == depth ? dim : hidden;
    layers.push_back({uniform_tensor({in, out}, 1.0 / std::sqrt(static_cast<double>(in)), rng), Tensor({out})});
    in = out;
  }
  return ThetaNetwork(std::move(layers), activation);
}

void ThetaNetwork::add_to(ParameterSet& set, const std::string& prefix) const {
  for (size_t k = 0; k < layers_.size(); ++k) {
    set.add(prefix + ".w" + std::to_string(k), layers_[k].weight);
    set.add(prefix + ".b" + std::to_string(k), layers_[k].bias);
  }
}

ThetaNetwork ThetaNetwork::from(const ParameterSet& set, const std::string& prefix, Activation activation) {
  std::vector<ThetaLayer> layers;
  for (size_t k = 0; set.contains(prefix + ".w" + std::to_string(k)); ++k) {
    layers.push_back({set[set.index(prefix + ".w" + std::to_string(k))],
                      set[set.index(prefix + ".b" + std::to_string(k))]});
  }
  return ThetaNetwork(std::move(layers), activation);
}

std::vector<Tensor> ThetaNetwork::tensors() const {
  std::vector<Tensor> out;
  for (const ThetaLayer& l : layers_) {
    out.push_back(l.weight);
    out.push_back(l.bias);
  }
  return out;
}

void ThetaNetwork::assign(const std::vector<Tensor>& tensors) {
  if (tensors.size() != 2 * layers_.size()) throw SehmError("theta network: wrong tensor count");
  for (size_t k = 0; k < layers_.size(); ++k) {
    if (tensors[2 * k].shape() != layers_[k].weight.shape() || tensors[2 * k + 1].shape() != layers_[k].bias.shape()) {
      throw SehmError("theta network: shape mismatch in layer " + std::to_string(k));
    }
    layers_[k].weight = tensors[2 * k];
    layers_[k].bias = tensors[2 * k + 1];
  }
}

std::vector<ad::Var> ThetaVars::all() const {
  std::vector<ad::Var> out;
  for (size_t k = 0; k < weights.size(); ++k) {
    out.push_back(weights[k]);
    out.push_back(biases[k]);
  }
  return out;
}

ThetaVars bind_theta(const ThetaNetwork& net, ad::Tape& tape, bool trainable) {
  ThetaVars v;
  v.activation = net.activation();
  for (const ThetaLayer& l : net.layers()) {
    v.weights.push_back(trainable ? tape.leaf(l.weight) : tape.constant(l.weight));
    v.biases.push_back(trainable ? tape.leaf(l.bias) : tape.constant(l.bias));
  }
  return v;
}

ad::Var theta_forward(const ThetaVars& net, const ad::Var& z) {
  ad::Var h = z;
  for (size_t k = 0; k < net.weights.size(); ++k) {
    h = ad::matmul(h, net.weights[k]) + net.biases[k];
    if (k + 1 < net.weights.size()) h = activate(h, net.activation);
  }
  return h;
}

Tensor theta_forward(const Tensor& z, const ThetaNetwork& net) {
  if (!z.all_finite()) throw SehmError("theta_forward: z is not finite");
  const bool single = z.rank() == 1;
  const Tensor rows = single ? z.reshaped({1, z.dim(0)}) : z;
  if (rows.rank() != 2 || rows.dim(1) != net.input_dim()) {
    throw SehmError("theta_forward: z of shape " + shape_string(z.shape()) + " does not match input width " +
                    std::to_string(net.input_dim()));
  }
  ad::Tape tape;
  const Tensor out = theta_forward(bind_theta(net, tape, false), tape.constant(rows)).value();
  return single ? out.reshaped({net.output_dim()}) : out;
}

double g_approx(std::span<const double> z, std::span<const double> theta) {
  if (z.size() != theta.size()) throw SehmError("g_approx: z and theta lengths differ");
  double s = 0.0;
  for (size_t i = 0; i < z.size(); ++i) s += theta[i] * z[i];
  return s;
}

SpectralNormResult spectral_norm(const Tensor& w, int max_iters, double tol, uint64_t seed, const Tensor* warm_start) {
  if (max_iters < 1) throw SehmError("spectral_norm: max_iters must be at least 1");
  if (w.rank() != 2) throw SehmError("spectral_norm: expected a matrix, got " + shape_string(w.shape()));
  const int64_t rows = w.dim(0), cols = w.dim(1);
  std::vector<double> v(static_cast<size_t>(cols));
  if (warm_start != nullptr && warm_start->size() == v.size() && norm2(warm_start->data()) > 0.0) {
    std::copy(warm_start->data().begin(), warm_start->data().end(), v.begin());
  } else {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    for (double& x : v) x = normal(rng);
  }
  normalize(v);
  SpectralNormResult r;
  std::vector<double> u(static_cast<size_t>(rows), 0.0);
  double previous = -1.0;
  for (int it = 1; it <= max_iters; ++it) {
    u = apply(w, v, false);
    const double un = norm2(u);
    r.iterations = it;
    if (un == 0.0) {
      // W v = 0: either W = 0 or v lies in its null space.
      std::fill(u.begin(), u.end(), 0.0);
      u[0] = 1.0;
      std::vector<double> back = apply(w, u, true);
      if (norm2(back) == 0.0) {
        r.value = 0.0;
        r.converged = true;
        break;
      }
      v = back;
      normalize(v);
      continue;
    }
    for (double& x : u) x /= un;
    std::vector<double> next = apply(w, u, true);
    const double sigma = norm2(next);
    for (double& x : next) x /= sigma;
    v = next;
    r.value = sigma;
    if (std::abs(sigma - previous) < tol) {
      r.converged = true;
      break;
    }
    previous = sigma;
  }
  r.u = Tensor({rows}, u);
  r.v = Tensor({cols}, v);
  return r;
}

ad::Var spectral_norm(const ad::Var& w, const SpectralNormResult& result) {
  const Shape& s = w.shape();
  if (s.size() != 2 || result.u.size() != static_cast<size_t>(s[0]) || result.v.size() != static_cast<size_t>(s[1])) {
    throw SehmError("spectral_norm: singular vectors do not match " + shape_string(s));
  }
  const Tensor u = result.u, v = result.v;
  return w.tape()->record(ad::PrimitiveKind::kSpectralNorm, {w.id()}, Tensor::scalar(result.value),
                          [u, v, s](const Tensor& g, ad::GradSink& sink) {
                            if (!sink.wants(0)) return;
                            Tensor grad(s);
                            const double go = g.item();
                            for (int64_t i = 0; i < s[0]; ++i) {
                              for (int64_t j = 0; j < s[1]; ++j) {
                                grad[static_cast<size_t>(i * s[1] + j)] =
                                    go * u[static_cast<size_t>(i)] * v[static_cast<size_t>(j)];
                              }
                            }
                            sink.accumulate(0, std::move(grad));
                          });
}

double lipschitz_certificate(const ThetaNetwork& net) {
  double prod = 1.0;
  for (const SpectralNormResult& r : layer_spectra(net, 5000, 1e-13)) prod *= r.value;
  return prod;
}

Tensor theta_jacobian(const Tensor& z, const ThetaNetwork& net) {
  const int64_t d = net.input_dim();
  if (z.size() != static_cast<size_t>(d)) throw SehmError("theta_jacobian: z length does not match the network");
  ad::Tape tape;
  const ThetaVars vars = bind_theta(net, tape, false);
  const ad::Var zv = tape.leaf(z.reshaped({1, d}));
  const ad::Var theta = theta_forward(vars, zv);
  const int64_t out = net.output_dim();
  Tensor jac({out, d});
  for (int64_t i = 0; i < out; ++i) {
    const ad::Gradients g = tape.backward(ad::sum_all(ad::slice(theta, 1, i, i + 1)));
    const Tensor row = g[zv];
    std::copy(row.data().begin(), row.data().end(), jac.mutable_data().begin() + i * d);
  }
  return jac;
}

ScoreGraph model_score(const SehmModel& model) {
  return [&model](ad::Tape& tape, const ad::Var& z) {
    return model.probability_from_z(model.bind(tape, false), z);
  };
}

Tensor grad_f(const ScoreGraph& f, const Tensor& z) {
  const bool single = z.rank() == 1;
  const Tensor rows = single ? z.reshaped({1, z.dim(0)}) : z;
  ad::Tape tape;
  const ad::Var zv = tape.leaf(rows);
  const ad::Gradients g = tape.backward(ad::sum_all(f(tape, zv)));
  const Tensor out = g[zv];
  return single ? out.reshaped(z.shape()) : out;
}

double gradient_mismatch(std::span<const double> theta, std::span<const double> grad, GradientMatch match) {
  if (theta.size() != grad.size()) throw SehmError("gradient_mismatch: theta and gradient lengths differ");
  double total = 0.0;
  if (match == GradientMatch::kAllOnes) {
    for (double t : theta) total += t;
  }
  double s = 0.0;
  for (size_t i = 0; i < theta.size(); ++i) {
    const double diff = (match == GradientMatch::kAllOnes ? total : theta[i]) - grad[i];
    s += diff * diff;
  }
  return std::sqrt(s);
}

double exact_explanation_loss(const Tensor& z, const ThetaNetwork& net, const Tensor& grad, double lambda,
                              GradientMatch match) {
  const Tensor theta = theta_forward(z.reshaped({static_cast<int64_t>(z.size())}), net);
  const double fit = gradient_mismatch(theta.data(), grad.data(), match);
  if (lambda == 0.0) return fit;
  const Tensor jac = theta_jacobian(z, net);
  const int64_t rows = jac.dim(0), cols = jac.dim(1);
  double induced = 0.0;
  for (int64_t j = 0; j < cols; ++j) {
    double col = 0.0;
    for (int64_t i = 0; i < rows; ++i) col += std::abs(jac.at({i, j}));
    induced = std::max(induced, col);
  }
  return fit + lambda * induced;
}

double exact_explanation_loss(const Tensor& z, const ThetaNetwork& net, const ScoreGraph& f, double lambda,
                              GradientMatch match) {
  return exact_explanation_loss(z, net, grad_f(f, z), lambda, match);
}

double surrogate_loss(const Tensor& z, const ThetaNetwork& net, const Tensor& grad, double lambda,
                      GradientMatch match) {
  const Tensor theta = theta_forward(z.reshaped({static_cast<int64_t>(z.size())}), net);
  const double fit = gradient_mismatch(theta.data(), grad.data(), match);
  if (lambda == 0.0) return fit;
  return fit + lambda * std::sqrt(static_cast<double>(net.input_dim())) * lipschitz_certificate(net);
}

double surrogate_loss(const Tensor& z, const ThetaNetwork& net, const ScoreGraph& f, double lambda,
                      GradientMatch match) {
  return surrogate_loss(z, net, grad_f(f, z), lambda, match);
}

PerturbationSet sample_perturbations(const Tensor& center, double radius, int64_t count, uint64_t seed) {
  if (!(radius >= 0.0)) throw SehmError("sample_perturbations: radius must be non-negative");
  if (count < 1) throw SehmError("sample_perturbations: need at least one point");
  const int64_t d = static_cast<int64_t>(center.size());
  PerturbationSet set{center.reshaped({d}), radius, count, seed, Tensor({count, d})};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit;
  std::vector<double> dir(static_cast<size_t>(d));
  for (int64_t i = 0; i < count; ++i) {
    double n = 0.0;
    while (n == 0.0) {
      for (double& x : dir) x = normal(rng);
      n = norm2(dir);
    }
    const double r = radius * std::pow(unit(rng), 1.0 / static_cast<double>(d));
    for (int64_t j = 0; j < d; ++j) {
      set.points[static_cast<size_t>(i * d + j)] = center[static_cast<size_t>(j)] + r * dir[static_cast<size_t>(j)] / n;
    }
  }
  return set;
}

ad::Var explanation_objective(const ThetaVars& net, const ad::Var& points, const Tensor& grads, int64_t sets,
                              const std::vector<SpectralNormResult>& spectra, const ObjectiveConfig& config) {
  ad::Tape& tape = *points.tape();
  const Shape& s = points.shape();
  if (s.size() != 2 || grads.shape() != s) {
    throw SehmError("explanation_objective: points " + shape_string(s) + " and gradients " +
                    shape_string(grads.shape()) + " must both be N x D_r");
  }
  if (sets < 1 || s[0] % sets != 0) throw SehmError("explanation_objective: points do not split into equal sets");
  if (spectra.size() != net.weights.size()) throw SehmError("explanation_objective: one spectrum per layer needed");
  const double per_set = static_cast<double>(s[0] / sets);
  const ad::Var theta = theta_forward(net, points);
  const ad::Var target = tape.constant(grads);
  const ad::Var matched = config.match == GradientMatch::kAllOnes ? ad::sum(theta, 1, true) : theta;
  ad::Var loss = ad::scale(ad::sum_all(ad::norm(matched - target, 1)), 1.0 / static_cast<double>(sets));
  if (config.lambda != 0.0) {
    ad::Var cert = spectral_norm(net.weights[0], spectra[0]);
    for (size_t k = 1; k < net.weights.size(); ++k) cert = cert * spectral_norm(net.weights[k], spectra[k]);
    loss = loss + ad::scale(cert, per_set * config.lambda * std::sqrt(static_cast<double>(s[1])));
  }
  if (config.lambda_r != 0.0) {
    for (const ad::Var& p : net.all()) loss = loss + ad::scale(ad::sum_all(ad::abs(p)), config.lambda_r);
  }
  return loss;
}

double explanation_objective(const std::vector<PerturbationSet>& sets, const ThetaNetwork& net, const ScoreGraph& f,
                             const ObjectiveConfig& config) {
  if (sets.empty()) throw SehmError("explanation_objective: no perturbation sets");
  const int64_t per = sets.front().count, d = net.input_dim();
  Tensor points({static_cast<int64_t>(sets.size()) * per, d});
  for (size_t i = 0; i < sets.size(); ++i) {
    if (sets[i].count != per) throw SehmError("explanation_objective: perturbation sets differ in size");
    std::copy(sets[i].points.data().begin(), sets[i].points.data().end(),
              points.mutable_data().begin() + static_cast<int64_t>(i) * per * d);
  }
  ad::Tape tape;
  const ad::Var pv = tape.constant(points);
  return explanation_objective(bind_theta(net, tape, false), pv, grad_f(f, points),
                               static_cast<int64_t>(sets.size()), layer_spectra(net, 5000, 1e-13), config)
      .value()
      .item();
}

ThetaTrainer::ThetaTrainer(ThetaNetwork net, ObjectiveConfig objective, AdamConfig adam)
    : net_(std::move(net)), objective_(objective), adam_(adam, [&] {
        std::vector<Shape> shapes;
        for (const Tensor& t : net_.tensors()) shapes.push_back(t.shape());
        return shapes;
      }()),
      warm_(net_.layers().size()) {}

double ThetaTrainer::step(const Tensor& points, const Tensor& grads, int64_t sets) {
  std::vector<SpectralNormResult> spectra;
  for (size_t k = 0; k < net_.layers().size(); ++k) {
    spectra.push_back(spectral_norm(net_.layers()[k].weight, objective_.power_iters, objective_.power_tol, k + 1,
                                    &warm_[k]));
    warm_[k] = spectra.back().v;
  }
  ad::Tape tape;
  const ThetaVars vars = bind_theta(net_, tape, true);
  const ad::Var loss = explanation_objective(vars, tape.constant(points), grads, sets, spectra, objective_);
  const ad::Gradients g = tape.backward(loss);
  std::vector<Tensor> params = net_.tensors();
  std::vector<Tensor> grad_list;
  for (const ad::Var& v : vars.all()) grad_list.push_back(g[v]);
  adam_step(params, grad_list, adam_);
  net_.assign(params);
  return loss.value().item();
}

uint64_t pass_tag(const LocalizedSeries& series) {
  uint64_t h = 1469598103934665603ULL;
  const int64_t dims[4] = {series.length, series.windows, series.neighbor, series.variables};
  fnv_mix(h, dims, sizeof(dims));
  fnv_mix(h, series.values.data().data(), series.values.size() * sizeof(double));
  return h;
}

ContributionWeights contribution_weights(const SehmModel& model, const LocalizedSeries& series) {
  require_local_attention(model);
  ContributionWeights out;
  out.pass = pass_tag(series);
  for (int64_t h = 0; h < model.config().heads; ++h) {
    out.heads.push_back(model.config().kernelized
                            ? attention_contribution_weights(series, model.head(h), model.features())
                            : exact_contribution_weights(series, model.head(h)));
  }
  return out;
}

ThetaOutput theta_for(const SehmModel& model, const ThetaNetwork& net, const LocalizedSeries& series) {
  const Tensor z = model.embed(series_batch(model, series));
  return {theta_forward(z.reshaped({z.dim(1)}), net), pass_tag(series)};
}

Tensor beta_decompose(const LocalizedSeries& series, const ContributionWeights& weights, const ThetaOutput& theta,
                      const MultiHeadConfig& config) {
  const uint64_t tag = pass_tag(series);
  if (weights.pass != tag || theta.pass != tag) {
    throw SehmError("beta_decompose: attention weights or theta come from a different forward pass");
  }
  const int64_t l_count = series.windows, c = series.neighbor, d = series.variables;
  const int64_t heads = config.heads;
  if (static_cast<int64_t>(weights.heads.size()) != heads) throw SehmError("beta_decompose: one weight tensor per head needed");
  const Tensor& wo = config.output_projection;
  if (wo.rank() != 2 || wo.dim(0) != heads * d) throw SehmError("beta_decompose: output projection has wrong shape");
  const int64_t d_o = wo.dim(1);
  if (theta.theta.size() != static_cast<size_t>(l_count * d_o)) {
    throw SehmError("beta_decompose: theta length " + std::to_string(theta.theta.size()) + " is not L * D_o = " +
                    std::to_string(l_count * d_o));
  }
  for (const Tensor& w : weights.heads) {
    if (w.shape() != Shape{l_count, c}) throw SehmError("beta_decompose: attention weights must be L x C");
  }
  // a[l, h D + d] = sum_o theta[l, o] W^O[h D + d, o]
  const Tensor a = ad::matmul(theta.theta.reshaped({l_count, d_o}), ad::transpose2d(wo));
  Tensor beta({series.length, d});
  for (int64_t t = 0; t < series.length; ++t) {
    const int64_t l = t / c, j = t % c;
    for (int64_t v = 0; v < d; ++v) {
      double s = 0.0;
      for (int64_t h = 0; h < heads; ++h) {
        s += weights.heads[static_cast<size_t>(h)].at({l, j}) * a.at({l, h * d + v});
      }
      beta.at({t, v}) = s;
    }
  }
  return beta;
}

Explanation explain(const SehmModel& model, const ThetaNetwork& net, const Tensor& series, const Tensor& mask) {
  require_local_attention(model);
  const LocalizedSeries local = localize(series, mask, model.config().neighbor);
  const Tensor batch = series_batch(model, local);
  const Tensor z = model.embed(batch);
  const int64_t dr = z.dim(1);
  if (dr != net.input_dim()) throw SehmError("explain: theta network width does not match the model");
  Explanation e;
  const ThetaOutput theta{theta_forward(z.reshaped({dr}), net), pass_tag(local)};
  e.theta = theta.theta;
  e.g = g_approx(z.data(), e.theta.data());
  e.f = model.predict_from_z(z).item();
  e.beta = beta_decompose(local, contribution_weights(model, local), theta, model.multi_head());
  e.values = batch.reshaped({local.length, local.variables});
  e.missing = Tensor(e.values.shape());
  for (size_t i = 0; i < e.missing.size(); ++i) e.missing[i] = mask[i] == 0.0 ? 1.0 : 0.0;
  return e;
}

}  // namespace sehm
