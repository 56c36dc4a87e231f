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

#include "sehm/synthetic.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

namespace sehm {
namespace {

struct Interval {
  int64_t variable;  // -1 = every variable
  int64_t begin;
  int64_t end;
};

bool overlaps(const Interval& a, const Interval& b) {
  const bool same_var = a.variable < 0 || b.variable < 0 || a.variable == b.variable;
  return same_var && a.begin < b.end && b.begin < a.end;
}

int64_t uniform_int(std::mt19937_64& rng, int64_t lo, int64_t hi) {
  return std::uniform_int_distribution<int64_t>(lo, hi)(rng);
}

// Places an interval of random length in [min_len, max_len] that avoids
// every protected interval.
Interval place_gap(std::mt19937_64& rng, int64_t variable, int64_t min_len, int64_t max_len, int64_t length,
                   const std::vector<Interval>& protected_spans) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const int64_t len = uniform_int(rng, min_len, max_len);
    const int64_t start = uniform_int(rng, 0, length - len);
    const Interval gap{variable, start, start + len};
    if (std::none_of(protected_spans.begin(), protected_spans.end(),
                     [&](const Interval& p) { return overlaps(gap, p); })) {
      return gap;
    }
  }
  throw SehmError("generate_synthetic: cannot place a gap of length " + std::to_string(min_len) + ".." +
                  std::to_string(max_len) + " clear of the planted motifs");
}

struct Generated {
  Dataset data;
  std::vector<int64_t> positions;
};

Generated generate(const SyntheticSpec& spec) {
  spec.validate();
  const int64_t n = spec.samples, t_len = spec.length, d = spec.variables;
  const int64_t positives = std::llround(spec.positive_fraction * static_cast<double>(n));

  std::mt19937_64 label_rng(spec.seed);
  std::vector<int64_t> order(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
  std::shuffle(order.begin(), order.end(), label_rng);

  Generated g;
  Dataset& ds = g.data;
  ds.values = Tensor({n, t_len, d});
  ds.mask = Tensor::full({n, t_len, d}, 1.0);
  ds.labels = Tensor({n});
  ds.variable_names = default_variable_names(d);
  g.positions.assign(static_cast<size_t>(n), -1);
  for (int64_t k = 0; k < positives; ++k) ds.labels[static_cast<size_t>(order[static_cast<size_t>(k)])] = 1.0;

  const Motif& target = spec.motifs.front();
  const int64_t target_len = target.length();
  std::uniform_real_distribution<double> unit;
  std::normal_distribution<double> normal;
  for (int64_t i = 0; i < n; ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "s%05lld", static_cast<long long>(i));
    ds.ids.emplace_back(id);
    std::seed_seq seq{spec.seed, static_cast<uint64_t>(i), uint64_t{0x5e4d}};
    std::mt19937_64 rng(seq);
    double* x = ds.values.mutable_data().data() + i * t_len * d;
    double* m = ds.mask.mutable_data().data() + i * t_len * d;

    for (int64_t v = 0; v < d; ++v) {
      for (int s = 0; s < 3; ++s) {
        const double amp = spec.background_amplitude * unit(rng);
        const double period = 20.0 + 180.0 * unit(rng);
        const double phase = 2.0 * std::numbers::pi * unit(rng);
        for (int64_t t = 0; t < t_len; ++t) {
          x[t * d + v] += amp * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / period + phase);
        }
      }
    }

    std::vector<Interval> planted;
    const auto plant = [&](const Motif& motif, int64_t start) {
      const int64_t len = motif.length();
      const size_t width = motif.variables.size();
      for (int64_t k = 0; k < len; ++k) {
        for (size_t j = 0; j < width; ++j) {
          x[(start + k) * d + motif.variables[j]] += motif.pattern[static_cast<size_t>(k) * width + j];
        }
      }
      for (int64_t v : motif.variables) planted.push_back({v, start, start + len});
    };
    if (ds.labels[static_cast<size_t>(i)] == 1.0) {
      const int64_t start = uniform_int(rng, spec.region_begin, spec.region_end - target_len);
      plant(target, start);
      g.positions[static_cast<size_t>(i)] = start;
    }
    if (unit(rng) < spec.decoy_probability) {
      // Uniform over starts that keep the decoy entirely outside the region.
      const int64_t before = std::max<int64_t>(0, spec.region_begin - target_len + 1);
      const int64_t after = std::max<int64_t>(0, t_len - target_len - spec.region_end + 1);
      if (before + after > 0) {
        const int64_t pick = uniform_int(rng, 0, before + after - 1);
        plant(target, pick < before ? pick : spec.region_end + (pick - before));
      }
    }
    for (size_t k = 1; k < spec.motifs.size(); ++k) {
      if (unit(rng) < 0.5) {
        plant(spec.motifs[k], uniform_int(rng, 0, t_len - spec.motifs[k].length()));
      }
    }
    if (spec.noise > 0.0) {
      for (int64_t k = 0; k < t_len * d; ++k) x[k] += spec.noise * normal(rng);
    }

    std::vector<Interval> gaps;
    for (int64_t k = 0; k < spec.joint_gaps; ++k) {
      gaps.push_back(place_gap(rng, -1, spec.joint_gap_min, spec.joint_gap_max, t_len, planted));
    }
    for (int64_t v = 0; v < d; ++v) {
      for (int64_t k = 0; k < spec.gaps_per_variable; ++k) {
        gaps.push_back(place_gap(rng, v, spec.gap_min, spec.gap_max, t_len, planted));
      }
    }
    for (const Interval& gap : gaps) {
      for (int64_t t = gap.begin; t < gap.end; ++t) {
        for (int64_t v = 0; v < d; ++v) {
          if (gap.variable >= 0 && gap.variable != v) continue;
          x[t * d + v] = 0.0;
          m[t * d + v] = 0.0;
        }
      }
    }
  }
  return g;
}

}  // namespace

int64_t Motif::length() const {
  return variables.empty() ? 0 : static_cast<int64_t>(pattern.size() / variables.size());
}

std::vector<Motif> default_motifs() {
  Motif target{{0, 1, 2}, {}};
  for (int k = 0; k < 12; ++k) {
    const double rise = k < 6 ? 0.5 * (k + 1) : 0.5 * (12 - k);
    target.pattern.insert(target.pattern.end(), {rise, k < 6 ? -1.5 : 1.5, 2.0});
  }
  Motif other{{3, 4}, {}};
  for (int k = 0; k < 10; ++k) {
    const double s = k % 2 == 0 ? 1.5 : -1.5;
    other.pattern.insert(other.pattern.end(), {s, -s});
  }
  return {target, other};
}

void SyntheticSpec::validate() const {
  if (samples < 2 || length < 1 || variables < 1) throw SehmError("synthetic: need >= 2 samples, T >= 1, D >= 1");
  if (motifs.empty()) throw SehmError("synthetic: the motif library is empty");
  for (const Motif& m : motifs) {
    if (m.variables.empty() || m.pattern.empty() || m.pattern.size() % m.variables.size() != 0) {
      throw SehmError("synthetic: a motif pattern must hold a whole number of rows over its variables");
    }
    if (m.length() >= length) throw SehmError("synthetic: every motif must be shorter than the series");
    std::vector<int64_t> vars = m.variables;
    std::sort(vars.begin(), vars.end());
    if (std::adjacent_find(vars.begin(), vars.end()) != vars.end()) {
      throw SehmError("synthetic: a motif lists a variable twice");
    }
    if (vars.front() < 0 || vars.back() >= variables) throw SehmError("synthetic: motif variable out of range");
  }
  const int64_t target_len = motifs.front().length();
  if (region_begin < 0 || region_end > length || region_end - region_begin < target_len) {
    throw SehmError("synthetic: the designated region [" + std::to_string(region_begin) + ", " +
                    std::to_string(region_end) + ") cannot hold the designated motif");
  }
  const auto check_range = [&](int64_t lo, int64_t hi, const char* what) {
    if (lo < 1 || hi < lo || hi > length) {
      throw SehmError(std::string("synthetic: ") + what + " lengths must lie within [1, T]");
    }
  };
  if (gaps_per_variable > 0) check_range(gap_min, gap_max, "gap");
  if (joint_gaps > 0) check_range(joint_gap_min, joint_gap_max, "joint gap");
  if (gaps_per_variable < 0 || joint_gaps < 0) throw SehmError("synthetic: gap counts must be non-negative");
  if (noise < 0.0 || background_amplitude < 0.0) throw SehmError("synthetic: noise and amplitude must be >= 0");
  if (decoy_probability < 0.0 || decoy_probability > 1.0) throw SehmError("synthetic: decoy probability outside [0, 1]");
  const int64_t positives = std::llround(positive_fraction * static_cast<double>(samples));
  const double achieved = static_cast<double>(positives) / static_cast<double>(samples);
  if (positives < 1 || positives >= samples || std::abs(achieved - positive_fraction) > 0.02) {
    throw SehmError("synthetic: class balance " + std::to_string(positive_fraction) + " is infeasible with " +
                    std::to_string(samples) + " samples (achievable " + std::to_string(achieved) + ")");
  }
}

Dataset Dataset::subset(const std::vector<int64_t>& index) const {
  const int64_t t_len = length(), d = variables();
  const int64_t n = static_cast<int64_t>(index.size());
  if (n == 0) throw SehmError("dataset subset is empty");
  Dataset out;
  out.variable_names = variable_names;
  out.values = Tensor({n, t_len, d});
  out.mask = Tensor({n, t_len, d});
  out.labels = Tensor({n});
  const int64_t row = t_len * d;
  for (int64_t k = 0; k < n; ++k) {
    const int64_t i = index[static_cast<size_t>(k)];
    if (i < 0 || i >= size()) throw SehmError("dataset index out of range: " + std::to_string(i));
    out.ids.push_back(ids[static_cast<size_t>(i)]);
    std::copy_n(values.data().begin() + i * row, row, out.values.mutable_data().begin() + k * row);
    std::copy_n(mask.data().begin() + i * row, row, out.mask.mutable_data().begin() + k * row);
    out.labels[static_cast<size_t>(k)] = labels[static_cast<size_t>(i)];
  }
  return out;
}

Tensor Dataset::sample_values(int64_t i) const {
  const int64_t row = length() * variables();
  return Tensor({length(), variables()},
                std::vector<double>(values.data().begin() + i * row, values.data().begin() + (i + 1) * row));
}

Tensor Dataset::sample_mask(int64_t i) const {
  const int64_t row = length() * variables();
  return Tensor({length(), variables()},
                std::vector<double>(mask.data().begin() + i * row, mask.data().begin() + (i + 1) * row));
}

Dataset generate_synthetic(const SyntheticSpec& spec) { return generate(spec).data; }

std::vector<int64_t> planted_positions(const SyntheticSpec& spec) { return generate(spec).positions; }

std::vector<std::string> default_variable_names(int64_t count) {
  std::vector<std::string> names;
  for (int64_t v = 0; v < count; ++v) names.push_back("var" + std::to_string(v));
  return names;
}

}  // namespace sehm
