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

// Invariant suite behind `sehm selfcheck`.

#ifndef SEHM_SELFCHECK_H_
#define SEHM_SELFCHECK_H_

#include <cstdint>
#include <string>
#include <vector>

namespace sehm {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Central-difference gradient checks (eps 1e-5, max relative error 1e-4)
// over every primitive, the attention stack, both recurrent cells, the
// classifier and the theta network.
std::vector<CheckResult> gradient_checks(uint64_t seed);

// Windows lying inside a gap of 2C-1 steps produce exactly zero output for
// both attention forms; `samples` series x `draws` parameter draws.
CheckResult gap_zero_check(uint64_t seed, int64_t samples, int64_t draws);

// surrogate loss >= exact loss on random small instances.
CheckResult surrogate_bound_check(uint64_t seed, int64_t instances);

// |theta(z) - theta(z')| <= certificate |z - z'| on random nets and pairs.
CheckResult certificate_check(uint64_t seed, int64_t nets, int64_t pairs);

std::vector<CheckResult> run_selfcheck(uint64_t seed);

}  // namespace sehm

#endif  // SEHM_SELFCHECK_H_
