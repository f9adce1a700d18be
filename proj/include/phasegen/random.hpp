// SPDX-License-Identifier: Apache-2.0
//
// Copyright 2026 The phasegen Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "phasegen/types.hpp"

namespace phasegen {

using Engine = std::mt19937_64;

/// Separates the random streams used for different purposes so that, e.g.,
/// a scenario draw and a sample draw with the same indices never coincide.
enum class StreamDomain : std::uint64_t {
  sample = 0x73616d706c65ULL,
  scenario = 0x7363656e6172ULL,
  stats = 0x7374617473ULL,
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based stream derivation: the engine for (seed, batch, index) is a
/// pure function of those values, so any sample can be regenerated alone.
inline Engine make_stream(std::uint64_t seed, std::uint64_t batch, std::uint64_t index,
                          StreamDomain domain = StreamDomain::sample) {
  std::uint64_t h = splitmix64(seed ^ static_cast<std::uint64_t>(domain));
  h = splitmix64(h ^ batch);
  h = splitmix64(h ^ (index * 0xd1b54a32d192ed03ULL));
  return Engine{h};
}

/// Circular-symmetric complex Gaussian CN(0, 1): real and imaginary parts are
/// independent N(0, 1/2). Scale by sqrt(variance) for CN(0, variance).
class ComplexNormal {
 public:
  template <class Rng>
  Complex operator()(Rng& rng) {
    const double re = normal_(rng);
    const double im = normal_(rng);
    return {re, im};
  }

 private:
  std::normal_distribution<double> normal_{0.0, std::sqrt(0.5)};
};

}  // namespace phasegen
