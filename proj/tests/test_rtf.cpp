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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "phasegen/rtf.hpp"
#include "phasegen/signalgen.hpp"

using namespace phasegen;
using Catch::Approx;

namespace {

CoherenceFactors scalar_factors(int bins) {
  CoherenceFactors f;
  for (int k = 0; k < bins; ++k) {
    f.factors.push_back(RealMatrix::Ones(1, 1));
    f.min_eigenvalues.push_back(1.0);
  }
  return f;
}

}  // namespace

TEST_CASE("without reverberation the RTF is the unit-modulus direct path") {
  const auto geom = ArrayGeometry::default_ula();
  const auto factors = factorize(geom);
  const auto src = source_position(35.0, 1.8);
  Engine rng(1);
  const auto rtf = gen_rtf(rng, factors, 0.0, geom, src);
  const RealMatrix phi = direct_phases(geom, src);
  for (Eigen::Index k = 0; k < rtf.h.rows(); ++k) {
    for (Eigen::Index i = 0; i < rtf.h.cols(); ++i) {
      CHECK(std::abs(rtf.h(k, i)) == Approx(1.0).epsilon(1e-15));
      CHECK(std::abs(rtf.h(k, i) - std::polar(1.0, -phi(k, i))) <= 1e-15);
    }
  }
}

TEST_CASE("single-channel reverberation has unit variance") {
  const auto factors = scalar_factors(1);
  Engine rng(2);
  double power = 0.0;
  const int n = 100000;
  for (int d = 0; d < n; ++d) power += std::norm(gen_reverb(rng, factors, 1.0)(0, 0));
  const double var = power / n;
  CHECK(var >= 0.99);
  CHECK(var <= 1.01);
}

TEST_CASE("DRR of -10 dB gives reverberation power 10") {
  const double sigma_r2 = db_to_variance(-10.0);
  CHECK(sigma_r2 == Approx(10.0).epsilon(1e-15));
  const auto geom = ArrayGeometry::default_ula();
  const auto factors = factorize(geom);
  Engine rng(3);
  // Bins are independent: 400 realizations x 256 bins = 102400 draws of mic 0.
  double power = 0.0;
  std::size_t n = 0;
  for (int d = 0; d < 400; ++d) {
    const ComplexMatrix rev = gen_reverb(rng, factors, sigma_r2);
    for (Eigen::Index k = 0; k < rev.rows(); ++k, ++n) power += std::norm(rev(k, 0));
  }
  CHECK(power / static_cast<double>(n) == Approx(10.0).epsilon(0.02));
}

TEST_CASE("reverberation is spatially correlated per the sinc law and circular") {
  const auto geom = ArrayGeometry::default_ula();
  const auto factors = factorize(geom);
  const auto target = build_coherence(geom);
  const int n = 20000;
  const int bins[] = {1, 20, 40, 200};
  Complex cross[4][4] = {};
  double power[4][4] = {};
  Complex square[4] = {};
  Complex across_bins{};
  Engine rng(4);
  for (int d = 0; d < n; ++d) {
    const ComplexMatrix rev = gen_reverb(rng, factors, 2.0);
    for (int b = 0; b < 4; ++b) {
      const Eigen::Index k = bins[b] - 1;
      for (int j = 0; j < 4; ++j) {
        cross[b][j] += rev(k, 0) * std::conj(rev(k, j));
        power[b][j] += std::norm(rev(k, j));
      }
      square[b] += rev(k, 0) * rev(k, 0);
    }
    across_bins += rev(0, 0) * std::conj(rev(1, 0));
  }
  const double tol = 3.3 / std::sqrt(static_cast<double>(n));
  for (int b = 0; b < 4; ++b) {
    for (int j = 1; j < 4; ++j) {
      const Complex coh = cross[b][j] / std::sqrt(power[b][0] * power[b][j]);
      CHECK(std::abs(coh - target.at_bin(bins[b])(0, j)) <= tol);
    }
    CHECK(std::abs(square[b]) / power[b][0] <= tol);
  }
  CHECK(std::abs(across_bins) / std::sqrt(power[0][0] * power[0][0]) <= 2.0 * tol);
}

TEST_CASE("gen_rtf checks factor dimensions") {
  const auto geom = ArrayGeometry::default_ula();
  const auto other = factorize(ArrayGeometry::uniform_linear(3, 0.05));
  Engine rng(5);
  CHECK_THROWS_AS(gen_rtf(rng, other, 1.0, geom, source_position(10.0, 1.0)), std::invalid_argument);
  CHECK_THROWS_AS(gen_reverb(rng, factorize(geom), -1.0), std::invalid_argument);
}
