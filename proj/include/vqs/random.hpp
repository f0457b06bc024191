// Copyright 2026 The VQS Toolkit Authors
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

// Seeded randomness with results that do not depend on the standard library
// implementation (std::shuffle and the std distributions are not portable).

#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace vqs {

using Rng = std::mt19937_64;

// Uniform integer in [0, bound) by rejection; bound must be positive.
std::uint64_t uniform_index(Rng& rng, std::uint64_t bound);

// Uniform real in [lo, hi) from the top 53 bits of one draw.
double uniform_real(Rng& rng, double lo, double hi);

// Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

}  // namespace vqs
