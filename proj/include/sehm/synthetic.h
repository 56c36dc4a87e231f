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

// Synthetic long multivariate series with planted motifs and large gaps.
//
// Every variable carries a smooth background (three sinusoids). A sample is
// positive iff the designated motif is planted inside the designated region. Decoy copies of the motif may be planted outside the
// region in any sample, so position matters. Gaps never cover a planted
// motif.

#ifndef SEHM_SYNTHETIC_H_
#define SEHM_SYNTHETIC_H_

#include <cstdint>
#include <string>
#include <vector>

#include "sehm/tensor.h"

namespace sehm {

// A pattern over several variables: `pattern` is length x variables.size(),
// row-major, added onto the background.
struct Motif {
  std::vector<int64_t> variables;
  std::vector<double> pattern;

  int64_t length() const;
};

// The default library: a 12-step rise/fall/plateau pattern over variables
// 0-2 (designated) and a 10-step oscillation over variables 3-4.
std::vector<Motif> default_motifs();

struct SyntheticSpec {
  int64_t samples = 2000;
  int64_t length = 600;
  int64_t variables = 8;

  // Per-variable gaps: count per variable, lengths uniform in [min, max].
  int64_t gaps_per_variable = 2;
  int64_t gap_min = 10;
  int64_t gap_max = 90;
  // Gaps covering every variable at once, lengths in [min, max].
  int64_t joint_gaps = 1;
  int64_t joint_gap_min = 59;
  int64_t joint_gap_max = 120;

  // motifs[0] is the designated motif; the rest are background patterns
  // planted at random in any sample.
  std::vector<Motif> motifs = default_motifs();
  int64_t region_begin = 60;
  int64_t region_end = 180;
  double decoy_probability = 0.5;

  double background_amplitude = 0.3;
  double noise = 0.0;
  double positive_fraction = 0.5;
  uint64_t seed = 1;

  void validate() const;
};

struct Dataset {
  std::vector<std::string> ids;
  std::vector<std::string> variable_names;
  Tensor values;  // N x T x D, 0 where missing
  Tensor mask;    // N x T x D, 1 = observed
  Tensor labels;  // N

  int64_t size() const { return labels.dim(0); }
  int64_t length() const { return values.dim(1); }
  int64_t variables() const { return values.dim(2); }

  // Rows `index` in order.
  Dataset subset(const std::vector<int64_t>& index) const;
  // One sample as T x D.
  Tensor sample_values(int64_t i) const;
  Tensor sample_mask(int64_t i) const;
};

Dataset generate_synthetic(const SyntheticSpec& spec);

// Positions (start) of the designated motif per sample, -1 when absent from
// the region. Recomputed from the spec, for tests and inspection.
std::vector<int64_t> planted_positions(const SyntheticSpec& spec);

std::vector<std::string> default_variable_names(int64_t count);

}  // namespace sehm

#endif  // SEHM_SYNTHETIC_H_
