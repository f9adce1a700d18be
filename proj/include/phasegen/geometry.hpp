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
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "phasegen/types.hpp"

namespace phasegen {

/// Microphone array plus the acquisition constants shared by every model
/// stage: speed of sound, sampling rate and the number of one-sided DFT bins.
///
/// Bins are numbered k = 1..K (DC excluded, Nyquist included); bin k sits at
/// fs * k / (2K) Hz. Matrices indexed by bin store bin k in row k - 1.
/// Microphones are indexed from 0.
///
/// Immutable after construction.
class ArrayGeometry {
 public:
  static constexpr double kDefaultSpeedOfSound = 343.0;
  static constexpr double kDefaultSampleRate = 16000.0;
  static constexpr int kDefaultBins = 256;

  ArrayGeometry(std::vector<Vec3> mics, double speed_of_sound = kDefaultSpeedOfSound,
                double sample_rate = kDefaultSampleRate, int num_bins = kDefaultBins)
      : mics_(std::move(mics)), c_(speed_of_sound), fs_(sample_rate), bins_(num_bins) {
    if (mics_.size() < 2) throw std::invalid_argument("geometry: at least two microphones required");
    for (const auto& m : mics_) {
      if (!m.allFinite()) throw std::invalid_argument("geometry: microphone position is not finite");
    }
    if (!(c_ > 0.0) || !std::isfinite(c_)) throw std::invalid_argument("geometry: speed of sound must be > 0");
    if (!(fs_ > 0.0) || !std::isfinite(fs_)) throw std::invalid_argument("geometry: sample rate must be > 0");
    if (bins_ < 1) throw std::invalid_argument("geometry: number of bins must be >= 1");

    const auto m = mics_.size();
    distances_ = RealMatrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    bool distinct = false;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) {
        const double d = (mics_[i] - mics_[j]).norm();
        distances_(i, j) = d;
        distances_(j, i) = d;
        distinct = distinct || d > 0.0;
      }
    }
    if (!distinct) throw std::invalid_argument("geometry: all microphone positions coincide");
  }

  /// Uniform linear array on the x-axis, centered at the origin.
  static ArrayGeometry uniform_linear(int num_mics, double spacing,
                                      double speed_of_sound = kDefaultSpeedOfSound,
                                      double sample_rate = kDefaultSampleRate,
                                      int num_bins = kDefaultBins) {
    if (num_mics < 2) throw std::invalid_argument("geometry: at least two microphones required");
    std::vector<Vec3> mics;
    mics.reserve(static_cast<std::size_t>(num_mics));
    const double center = 0.5 * (num_mics - 1);
    for (int i = 0; i < num_mics; ++i) mics.emplace_back((i - center) * spacing, 0.0, 0.0);
    return ArrayGeometry(std::move(mics), speed_of_sound, sample_rate, num_bins);
  }

  /// 4-mic ULA, 0.08 m spacing, 16 kHz, DFT length 512 (K = 256).
  static ArrayGeometry default_ula() { return uniform_linear(4, 0.08); }

  /// Parses {"c": .., "fs": .., "dft_len": .., "mics": [[x,y,z], ...]}.
  /// Missing c/fs/dft_len fall back to the defaults; K = dft_len / 2.
  static ArrayGeometry from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("mics")) throw std::invalid_argument("geometry: expected object with \"mics\"");
    std::vector<Vec3> mics;
    for (const auto& p : j.at("mics")) {
      if (!p.is_array() || p.size() != 3) throw std::invalid_argument("geometry: each mic must be [x, y, z]");
      mics.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
    }
    const int dft_len = j.value("dft_len", 2 * kDefaultBins);
    if (dft_len < 2 || dft_len % 2 != 0) throw std::invalid_argument("geometry: dft_len must be even and >= 2");
    return ArrayGeometry(std::move(mics), j.value("c", kDefaultSpeedOfSound), j.value("fs", kDefaultSampleRate),
                         dft_len / 2);
  }

  static ArrayGeometry load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("geometry: cannot open " + path.string());
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument("geometry: " + path.string() + ": " + e.what());
    }
    return from_json(j);
  }

  nlohmann::json to_json() const {
    nlohmann::json mics = nlohmann::json::array();
    for (const auto& m : mics_) mics.push_back({m.x(), m.y(), m.z()});
    return {{"c", c_}, {"fs", fs_}, {"dft_len", 2 * bins_}, {"mics", std::move(mics)}};
  }

  std::size_t num_mics() const { return mics_.size(); }
  int num_bins() const { return bins_; }
  double speed_of_sound() const { return c_; }
  double sample_rate() const { return fs_; }
  const std::vector<Vec3>& mics() const { return mics_; }
  const Vec3& mic(std::size_t i) const { return mics_.at(i); }

  /// Symmetric M x M matrix of inter-microphone distances, zero diagonal.
  const RealMatrix& distances() const { return distances_; }

  /// Phase advance per meter of path length at bin k: pi * fs * k / (K * c).
  double radians_per_meter(int k) const { return (kPi * fs_ * k / bins_) / c_; }

 private:
  std::vector<Vec3> mics_;
  double c_;
  double fs_;
  int bins_;
  RealMatrix distances_;
};

/// Point source in the array's horizontal plane, array center at the origin.
struct SourcePosition {
  Vec3 s;
  double theta_deg;
  double r;
};

/// s = [r cos(theta), r sin(theta), 0] with theta in degrees.
inline SourcePosition source_position(double theta_deg, double r) {
  if (!(r > 0.0) || !std::isfinite(r)) throw std::domain_error("source_position: r must be > 0");
  if (!(theta_deg >= 0.0 && theta_deg <= 180.0)) throw std::domain_error("source_position: theta must be in [0, 180]");
  const double t = deg_to_rad(theta_deg);
  return {Vec3(r * std::cos(t), r * std::sin(t), 0.0), theta_deg, r};
}

/// Unwrapped direct-path phase ||m_i - s|| / c * pi * fs * k / K of mic i at bin k.
inline double direct_phase(const ArrayGeometry& geom, const SourcePosition& src, std::size_t i, int k) {
  if (i >= geom.num_mics()) throw std::out_of_range("direct_phase: microphone index out of range");
  if (k < 1 || k > geom.num_bins()) throw std::out_of_range("direct_phase: bin index out of range");
  return (geom.mic(i) - src.s).norm() * geom.radians_per_meter(k);
}

/// All direct phases as a K x M matrix (row k - 1 holds bin k).
inline RealMatrix direct_phases(const ArrayGeometry& geom, const SourcePosition& src) {
  const auto m = static_cast<Eigen::Index>(geom.num_mics());
  const int bins = geom.num_bins();
  RealMatrix phi(bins, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double dist = (geom.mic(static_cast<std::size_t>(i)) - src.s).norm();
    for (int k = 1; k <= bins; ++k) phi(k - 1, i) = dist * geom.radians_per_meter(k);
  }
  return phi;
}

}  // namespace phasegen
