//
// rng.hpp
//
// Copyright 2026 The Compass Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace compass {

using Rng = std::mt19937_64;

// Standard-library distributions are implementation-defined, so all draws go
// through these fixed mappings to keep seeded output stable everywhere.

inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_in(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
    return rng() % n;
}

// Box-Muller; draws two uniforms per sample.
inline double normal01(Rng& rng) {
    const double u1 = 1.0 - uniform01(rng); // (0, 1]
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

} // namespace compass
