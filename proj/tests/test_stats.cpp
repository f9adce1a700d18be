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

#include "phasegen/stats.hpp"

using namespace phasegen;
using Catch::Approx;

namespace {

const StatsConfig& default_config() {
  static const StatsConfig cfg(ArrayGeometry::default_ula(), 2024);
  return cfg;
}

const CoherenceEstimate& default_estimate() {
  static const CoherenceEstimate est = estimate_coherence(default_config(), 100000);
  return est;
}

}  // namespace

TEST_CASE("self-coherence is exactly one and the estimate is Hermitian") {
  const auto& est = default_estimate();
  for (int k = 1; k <= 256; k += 17) {
    const ComplexMatrix& c = est.at_bin(k);
    for (Eigen::Index i = 0; i < 4; ++i) {
      CHECK(c(i, i) == Complex(1.0, 0.0));
      for (Eigen::Index j = 0; j < 4; ++j) {
        CHECK(c(i, j) == std::conj(c(j, i)));
        CHECK(std::abs(c(i, j)) <= 1.0 + 1e-12);
      }
    }
  }
}

TEST_CASE("adjacent-mic coherence at the first bin") {
  const Complex c = default_estimate().at_bin(1)(0, 1);
  CHECK(std::abs(c.real() - 0.99965) <= 0.01);
  CHECK(std::abs(c.imag()) <= 0.01);
}

TEST_CASE("coherence at the first sinc zero") {
  // d / c * fs = 1: the sinc argument is pi at bin K = 4.
  const StatsConfig cfg(ArrayGeometry({Vec3(0, 0, 0), Vec3(0.02, 0, 0)}, 320.0, 16000.0, 4), 5);
  const auto est = estimate_coherence(cfg, 100000);
  CHECK(std::abs(est.at_bin(4)(0, 1)) <= 0.011);
}

TEST_CASE("coherence, circular symmetry and power checks pass on the generator") {
  const auto& cfg = default_config();
  const auto& est = default_estimate();
  const auto coherence = check_coherence(cfg, est, {1, 64, 128, 256});
  CHECK(coherence.size() == 4u * 6u * 2u);
  CHECK(all_pass(coherence));
  const auto symmetric = check_circular_symmetry(est, {1, 128, 256});
  CHECK(all_pass(symmetric));
  for (int k : {1, 128, 256}) CHECK(est.power[static_cast<std::size_t>(k - 1)].mean() == Approx(1.0).epsilon(0.01));
}

TEST_CASE("variance calibration") {
  const auto& cfg = default_config();
  const auto params = ScenarioParams::make(30.0, 6, 2.0, 30.0, 0.0);
  const auto checks = check_variances(cfg, params, 100000);
  REQUIRE(checks.size() == 3);
  for (const auto& c : checks) {
    INFO(c.check << " estimate " << c.estimate);
    CHECK(c.pass);
  }
  // sigma_N2 = 0.001: the 3-sigma window is within [0.00097, 0.00103].
  CHECK(checks[1].target == Approx(0.001));
  CHECK(checks[1].estimate >= 0.00097);
  CHECK(checks[1].estimate <= 0.00103);
  CHECK(checks[2].estimate >= 0.99);
  CHECK(checks[2].estimate <= 1.01);
  CHECK(checks[0].estimate >= 0.99);
  CHECK(checks[0].estimate <= 1.01);
}

TEST_CASE("a mis-wired noise variance is detected") {
  const auto& cfg = default_config();
  const auto params = ScenarioParams::make(30.0, 6, 2.0, 20.0, -3.0);
  auto wrong = params;
  wrong.sigma_n2 *= 1.1;
  const auto checks = check_variances_of(
      [&](Engine& rng) { return gen_sample_components(rng, wrong, cfg.geom, cfg.factors); }, params, 256, 4, 100000,
      cfg.seed, 99, cfg.workers);
  CHECK(checks[0].pass);
  CHECK_FALSE(checks[1].pass);
  CHECK(checks[2].pass);
}

TEST_CASE("bins are independent and circular") {
  const auto& cfg = default_config();
  const auto checks =
      check_bin_independence(cfg, ScenarioParams::make(90.0, 18, 2.0, 0.0, 0.0), {{1, 2}, {1, 128}, {127, 128}}, 20000);
  CHECK(checks.size() == 9u + 6u);
  for (const auto& c : checks) {
    INFO(c.check << " estimate " << c.estimate);
    CHECK(c.pass);
    CHECK(c.tolerance == Approx(3.3 / std::sqrt(20000.0)));
  }
}

TEST_CASE("identical bins are fully correlated") {
  const auto& cfg = default_config();
  const auto checks =
      check_bin_independence(cfg, ScenarioParams::make(90.0, 18, 2.0, 0.0, 0.0), {{5, 5}}, 1000);
  for (int q = 0; q < 3; ++q) CHECK(checks[static_cast<std::size_t>(q)].estimate == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("checks are deterministic and independent of worker count") {
  const StatsConfig one(ArrayGeometry::default_ula(), 77, 1);
  const StatsConfig three(ArrayGeometry::default_ula(), 77, 3);
  const auto params = ScenarioParams::make(10.0, 2, 1.5, 12.0, -6.0);
  const auto a = check_variances(one, params, 5000);
  const auto b = check_variances(three, params, 5000);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].estimate == b[i].estimate);
  const auto e1 = estimate_coherence(one, 3000);
  const auto e2 = estimate_coherence(three, 3000);
  CHECK(e1.coherence == e2.coherence);
}

TEST_CASE("estimate_coherence needs enough draws") {
  CHECK_THROWS_AS(estimate_coherence(default_config(), 99), std::invalid_argument);
}

TEST_CASE("check records serialize with a fixed schema") {
  const auto c = make_check("x", 1.0, 1.004, 0.01, 100000);
  const auto j = c.to_json();
  CHECK(j.size() == 6);
  for (const char* key : {"check", "target", "estimate", "tolerance", "pass", "n"}) CHECK(j.contains(key));
  CHECK(j["pass"] == true);
}
