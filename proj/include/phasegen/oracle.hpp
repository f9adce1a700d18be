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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "phasegen/geometry.hpp"
#include "phasegen/phasemap.hpp"
#include "phasegen/rtf.hpp"
#include "phasegen/types.hpp"

namespace phasegen {

inline constexpr double kDefaultReferenceDistance = 2.0;

/// Direct-path steering vectors a_c(k) for every candidate class, stored
/// class-major, then bin, then mic.
class SteeringTable {
 public:
  SteeringTable(std::vector<double> classes, int num_bins, Eigen::Index num_mics, std::vector<Complex> data)
      : classes_(std::move(classes)), bins_(num_bins), mics_(num_mics), data_(std::move(data)) {}

  const std::vector<double>& classes() const { return classes_; }
  int num_classes() const { return static_cast<int>(classes_.size()); }
  int num_bins() const { return bins_; }
  Eigen::Index num_mics() const { return mics_; }

  /// Steering vector entries of class c at bin row k0 (0-based).
  std::span<const Complex> at(int c, int k0) const {
    const auto offset = (static_cast<std::size_t>(c) * static_cast<std::size_t>(bins_) + static_cast<std::size_t>(k0)) *
                        static_cast<std::size_t>(mics_);
    return std::span<const Complex>(data_).subspan(offset, static_cast<std::size_t>(mics_));
  }

 private:
  std::vector<double> classes_;
  int bins_;
  Eigen::Index mics_;
  std::vector<Complex> data_;
};

inline SteeringTable build_steering(const ArrayGeometry& geom, const std::vector<double>& classes,
                                    double r_ref = kDefaultReferenceDistance) {
  if (classes.empty()) throw std::invalid_argument("build_steering: no candidate classes");
  const int bins = geom.num_bins();
  const auto m = static_cast<Eigen::Index>(geom.num_mics());
  std::vector<Complex> data;
  data.reserve(classes.size() * static_cast<std::size_t>(bins) * static_cast<std::size_t>(m));
  for (const double theta : classes) {
    const ComplexMatrix a = direct_path(geom, source_position(theta, r_ref));
    data.insert(data.end(), a.data(), a.data() + a.size());
  }
  return SteeringTable(classes, bins, m, std::move(data));
}

struct DoaDecision {
  std::vector<double> scores;
  int argmax_class = 0;
  double est_theta = 0.0;
};

/// First index of the maximal score.
inline int argmax(std::span<const double> scores) {
  return static_cast<int>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

inline DoaDecision decide(std::vector<double> scores, const std::vector<double>& classes) {
  DoaDecision d;
  d.argmax_class = argmax(scores);
  d.est_theta = classes[static_cast<std::size_t>(d.argmax_class)];
  d.scores = std::move(scores);
  return d;
}

/// Phase-only steered response power:
///   score[c] = sum_k | sum_i exp(j Phi[k][i]) conj(a_c(k)_i) |^2
/// Magnitudes never enter, so the oracle scores exactly the phase-map feature.
inline DoaDecision srp_phase(const RealMatrix& phi, const SteeringTable& table) {
  if (phi.rows() != table.num_bins() || phi.cols() != table.num_mics()) {
    throw std::invalid_argument("srp_phase: phase map shape does not match steering table");
  }
  ComplexMatrix unit(phi.rows(), phi.cols());
  for (Eigen::Index n = 0; n < phi.size(); ++n) unit.data()[n] = std::polar(1.0, phi.data()[n]);

  std::vector<double> scores(static_cast<std::size_t>(table.num_classes()), 0.0);
  for (int c = 0; c < table.num_classes(); ++c) {
    double total = 0.0;
    for (int k = 0; k < table.num_bins(); ++k) {
      const auto a = table.at(c, k);
      Complex acc(0.0, 0.0);
      for (Eigen::Index i = 0; i < table.num_mics(); ++i) acc += unit(k, i) * std::conj(a[static_cast<std::size_t>(i)]);
      total += std::norm(acc);
    }
    scores[static_cast<std::size_t>(c)] = total;
  }
  return decide(std::move(scores), table.classes());
}

inline DoaDecision srp_phase(const MicSignals& y, const SteeringTable& table) {
  return srp_phase(extract_phase(y), table);
}

/// Averages the per-frame score vectors after normalizing each to sum 1.
inline DoaDecision block_decision(std::span<const DoaDecision> frames, const std::vector<double>& classes) {
  if (frames.empty()) throw std::invalid_argument("block_decision: no frames");
  const std::size_t n_classes = frames.front().scores.size();
  if (n_classes != classes.size()) throw std::invalid_argument("block_decision: class count mismatch");
  std::vector<double> mean(n_classes, 0.0);
  for (const auto& frame : frames) {
    if (frame.scores.size() != n_classes) throw std::invalid_argument("block_decision: class count mismatch");
    double sum = 0.0;
    for (const double s : frame.scores) sum += s;
    for (std::size_t c = 0; c < n_classes; ++c) {
      mean[c] += sum > 0.0 ? frame.scores[c] / sum : 1.0 / static_cast<double>(n_classes);
    }
  }
  for (double& v : mean) v /= static_cast<double>(frames.size());
  return decide(std::move(mean), classes);
}

struct DoaMetrics {
  double mae = 0.0;   // degrees
  double pacc = 0.0;  // fraction within the tolerance, inclusive
  std::size_t count = 0;
};

inline constexpr double kPaccToleranceDeg = 5.0;

/// Mean absolute error and pseudo-accuracy (|est - truth| <= 5 degrees).
inline DoaMetrics metrics(std::span<const double> estimates, std::span<const double> truths) {
  if (estimates.size() != truths.size()) throw std::invalid_argument("metrics: length mismatch");
  if (estimates.empty()) throw std::invalid_argument("metrics: no decisions");
  double abs_sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t n = 0; n < estimates.size(); ++n) {
    const double err = std::abs(estimates[n] - truths[n]);
    abs_sum += err;
    // Slack absorbs round-off in class grids with non-representable steps.
    if (err <= kPaccToleranceDeg + 1e-9) ++hits;
  }
  const auto n = static_cast<double>(estimates.size());
  return {abs_sum / n, static_cast<double>(hits) / n, estimates.size()};
}

inline DoaMetrics metrics(std::span<const DoaDecision> decisions, std::span<const double> truths) {
  std::vector<double> est;
  est.reserve(decisions.size());
  for (const auto& d : decisions) est.push_back(d.est_theta);
  return metrics(std::span<const double>(est), truths);
}

}  // namespace phasegen
