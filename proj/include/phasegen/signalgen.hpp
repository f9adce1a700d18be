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

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <ranges>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "phasegen/coherence.hpp"
#include "phasegen/geometry.hpp"
#include "phasegen/parallel.hpp"
#include "phasegen/phasemap.hpp"
#include "phasegen/random.hpp"
#include "phasegen/rtf.hpp"
#include "phasegen/types.hpp"

namespace phasegen {

struct Range {
  double lo = 0.0;
  double hi = 0.0;

  bool operator==(const Range&) const = default;
};

/// Laws for the source and sensor-noise spectra. Only circular-symmetric
/// complex Gaussian is implemented.
enum class SourceLaw { gaussian };

inline std::string_view to_string(SourceLaw law) {
  switch (law) {
    case SourceLaw::gaussian:
      return "gaussian";
  }
  return "unknown";
}

inline SourceLaw source_law_from_string(std::string_view name) {
  if (name == "gaussian") return SourceLaw::gaussian;
  throw std::invalid_argument("unknown source law: " + std::string(name));
}

/// Evenly spaced class angles start, start + step, ..., up to end inclusive.
inline std::vector<double> class_grid(double start, double step, double end) {
  if (!(step > 0.0)) throw std::invalid_argument("class grid: step must be > 0");
  if (!(end >= start)) throw std::invalid_argument("class grid: end must be >= start");
  const auto count = static_cast<std::size_t>(std::floor((end - start) / step + 1e-9)) + 1;
  std::vector<double> classes(count);
  for (std::size_t i = 0; i < count; ++i) classes[i] = start + static_cast<double>(i) * step;
  return classes;
}

/// Scenario parameter laws: theta uniform over the discrete class angles,
/// r / SNR / DRR independent and uniform over their ranges.
struct ScenarioDistributions {
  std::vector<double> theta_classes = class_grid(0.0, 5.0, 180.0);
  Range r{1.0, 3.0};
  Range snr_db{0.0, 30.0};
  Range drr_db{-9.0, 0.0};

  /// SNR U(0, 30) dB, r U(1, 3) m, 37 classes 0..180 step 5, DRR U(-9, 0) dB.
  static ScenarioDistributions training_defaults() { return {}; }

  int num_classes() const { return static_cast<int>(theta_classes.size()); }

  void validate() const {
    if (theta_classes.empty()) throw std::invalid_argument("distributions: no theta classes");
    for (std::size_t i = 0; i < theta_classes.size(); ++i) {
      const double t = theta_classes[i];
      if (!(t >= 0.0 && t <= 180.0)) throw std::invalid_argument("distributions: class angle outside [0, 180]");
      if (i > 0 && !(t > theta_classes[i - 1])) {
        throw std::invalid_argument("distributions: class angles must be strictly increasing");
      }
    }
    auto check = [](const Range& range, const char* name) {
      if (!std::isfinite(range.lo) || !std::isfinite(range.hi) || range.lo > range.hi) {
        throw std::invalid_argument(std::string("distributions: invalid range for ") + name);
      }
    };
    check(r, "r");
    check(snr_db, "snr");
    check(drr_db, "drr");
    if (!(r.lo > 0.0)) throw std::invalid_argument("distributions: r must be > 0");
  }

  nlohmann::json to_json() const {
    return {{"theta_classes", theta_classes},
            {"r", {r.lo, r.hi}},
            {"snr_db", {snr_db.lo, snr_db.hi}},
            {"drr_db", {drr_db.lo, drr_db.hi}}};
  }

  bool operator==(const ScenarioDistributions&) const = default;
};

/// Level in dB to linear variance: 10^(-db / 10).
inline double db_to_variance(double db) {
  // Evaluated in extended precision so the result is within one ulp of 10^(-db/10).
  return static_cast<double>(std::pow(10.0L, -static_cast<long double>(db) / 10.0L));
}

/// One draw of scenario parameters with the derived variances.
struct ScenarioParams {
  double theta_deg = 0.0;
  int class_index = 0;
  double r = 1.0;
  double snr_db = 0.0;
  double drr_db = 0.0;
  double sigma_r2 = 1.0;
  double sigma_n2 = 1.0;

  static ScenarioParams make(double theta_deg, int class_index, double r, double snr_db, double drr_db) {
    return {theta_deg, class_index, r, snr_db, drr_db, db_to_variance(drr_db), db_to_variance(snr_db)};
  }

  nlohmann::json to_json() const {
    return {{"theta", theta_deg}, {"class_index", class_index}, {"r", r},           {"snr_db", snr_db},
            {"drr_db", drr_db},   {"sigma_R2", sigma_r2},       {"sigma_N2", sigma_n2}};
  }

  static ScenarioParams from_json(const nlohmann::json& j) {
    return {j.at("theta").get<double>(),  j.at("class_index").get<int>(), j.at("r").get<double>(),
            j.at("snr_db").get<double>(), j.at("drr_db").get<double>(),   j.at("sigma_R2").get<double>(),
            j.at("sigma_N2").get<double>()};
  }

  bool operator==(const ScenarioParams&) const = default;
};

inline double draw_uniform(Engine& rng, const Range& range) {
  if (range.lo == range.hi) return range.lo;
  return std::uniform_real_distribution<double>(range.lo, range.hi)(rng);
}

/// Draws class, r, SNR and DRR in that order.
inline ScenarioParams sample_params(Engine& rng, const ScenarioDistributions& dists) {
  const int c = std::uniform_int_distribution<int>(0, dists.num_classes() - 1)(rng);
  const double r = draw_uniform(rng, dists.r);
  const double snr = draw_uniform(rng, dists.snr_db);
  const double drr = draw_uniform(rng, dists.drr_db);
  return ScenarioParams::make(dists.theta_classes[static_cast<std::size_t>(c)], c, r, snr, drr);
}

/// Every intermediate of one generated sample, for validation.
struct SampleComponents {
  ComplexVector x;      // source spectrum, K
  ComplexMatrix h_dir;  // K x M
  ComplexMatrix h_rev;  // K x M
  ComplexMatrix noise;  // K x M
  ComplexMatrix y;      // K x M
};

/// Y_i(k) = X(k) H_i(k) + N_i(k). Draw order: H_rev (all bins), X (all
/// bins), then N bin by bin in mic order.
template <class Rng>
SampleComponents gen_sample_components(Rng& rng, const ScenarioParams& params, const ArrayGeometry& geom,
                                       const CoherenceFactors& factors) {
  check_factors_match(factors, geom);
  if (!(params.sigma_n2 >= 0.0) || !std::isfinite(params.sigma_n2)) {
    throw std::invalid_argument("gen_sample: sigma_N2 must be >= 0");
  }
  const SourcePosition src = source_position(params.theta_deg, params.r);
  SampleComponents out;
  out.h_rev = gen_reverb(rng, factors, params.sigma_r2);
  out.h_dir = direct_path(geom, src);

  const Eigen::Index bins = out.h_dir.rows();
  const Eigen::Index m = out.h_dir.cols();
  ComplexNormal cn;
  out.x.resize(bins);
  for (Eigen::Index k = 0; k < bins; ++k) out.x(k) = cn(rng);

  const double noise_scale = std::sqrt(params.sigma_n2);
  out.noise.resize(bins, m);
  out.y.resize(bins, m);
  for (Eigen::Index k = 0; k < bins; ++k) {
    for (Eigen::Index i = 0; i < m; ++i) {
      out.noise(k, i) = noise_scale * cn(rng);
      out.y(k, i) = out.x(k) * (out.h_dir(k, i) + out.h_rev(k, i)) + out.noise(k, i);
    }
  }
  return out;
}

template <class Rng>
MicSignals gen_sample(Rng& rng, const ScenarioParams& params, const ArrayGeometry& geom,
                      const CoherenceFactors& factors) {
  return {gen_sample_components(rng, params, geom, factors).y};
}

/// float32 export of a phase in (-pi, pi]. Values that round onto -pi in
/// single precision are folded to +pi so the exported range stays half-open.
inline float to_export_phase(double phase) {
  constexpr float pi_f = static_cast<float>(kPi);
  const auto f = static_cast<float>(phase);
  return f <= -pi_f ? pi_f : f;
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (const unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

struct GeneratorOptions {
  // Consecutive samples sharing one scenario draw (1 = fresh draw per sample).
  int frames_per_scenario = 1;
  unsigned workers = default_workers();
  SourceLaw law = SourceLaw::gaussian;
};

/// Everything that determines generated content. Worker count is excluded:
/// output does not depend on it.
inline nlohmann::json canonical_config(const ArrayGeometry& geom, const ScenarioDistributions& dists,
                                       const GeneratorOptions& opts) {
  return {{"geometry", geom.to_json()},
          {"distributions", dists.to_json()},
          {"frames_per_scenario", opts.frames_per_scenario},
          {"source_law", std::string(to_string(opts.law))}};
}

/// B phase maps with labels, parameter draws and provenance.
struct DatasetBatch {
  int num_samples = 0;
  int num_bins = 0;
  int num_mics = 0;
  int num_classes = 0;
  std::vector<float> phases;  // B x K x M, sample-major, then bin, then mic
  std::vector<std::int32_t> labels;
  std::vector<ScenarioParams> params;
  std::uint64_t seed = 0;
  std::uint64_t batch_index = 0;
  std::uint64_t config_hash = 0;
  nlohmann::json config = nlohmann::json::object();

  std::size_t map_size() const { return static_cast<std::size_t>(num_bins) * static_cast<std::size_t>(num_mics); }

  std::span<const float> phase_map(std::size_t b) const {
    return std::span<const float>(phases).subspan(b * map_size(), map_size());
  }

  RealMatrix phase_matrix(std::size_t b) const {
    const auto map = phase_map(b);
    RealMatrix phi(num_bins, num_mics);
    for (std::size_t n = 0; n < map.size(); ++n) phi.data()[n] = map[n];
    return phi;
  }

  bool operator==(const DatasetBatch&) const = default;
};

/// Generates B samples. Sample b uses the stream derived from
/// (master_seed, batch_index, b); its scenario comes from the stream of
/// (master_seed, batch_index, b / frames_per_scenario). Output is identical
/// for any worker count.
inline DatasetBatch gen_batch(std::uint64_t master_seed, std::uint64_t batch_index, int batch_size,
                              const ScenarioDistributions& dists, const ArrayGeometry& geom,
                              const CoherenceFactors& factors, const GeneratorOptions& opts = {}) {
  if (batch_size < 1) throw std::invalid_argument("gen_batch: batch size must be >= 1");
  if (opts.frames_per_scenario < 1) throw std::invalid_argument("gen_batch: frames_per_scenario must be >= 1");
  dists.validate();
  check_factors_match(factors, geom);

  DatasetBatch batch;
  batch.num_samples = batch_size;
  batch.num_bins = geom.num_bins();
  batch.num_mics = static_cast<int>(geom.num_mics());
  batch.num_classes = dists.num_classes();
  batch.seed = master_seed;
  batch.batch_index = batch_index;
  batch.config = canonical_config(geom, dists, opts);
  batch.config_hash = fnv1a64(batch.config.dump());
  batch.phases.resize(static_cast<std::size_t>(batch_size) * batch.map_size());
  batch.labels.resize(static_cast<std::size_t>(batch_size));
  batch.params.resize(static_cast<std::size_t>(batch_size));

  const std::size_t map_size = batch.map_size();
  const auto frames = static_cast<std::uint64_t>(opts.frames_per_scenario);
  parallel_for(static_cast<std::size_t>(batch_size), opts.workers, [&](std::size_t b) {
    Engine scenario_rng = make_stream(master_seed, batch_index, b / frames, StreamDomain::scenario);
    const ScenarioParams params = sample_params(scenario_rng, dists);
    Engine rng = make_stream(master_seed, batch_index, b, StreamDomain::sample);
    const RealMatrix phi = extract_phase(gen_sample(rng, params, geom, factors));
    float* dst = batch.phases.data() + b * map_size;
    for (std::size_t n = 0; n < map_size; ++n) dst[n] = to_export_phase(phi.data()[n]);
    batch.labels[b] = params.class_index;
    batch.params[b] = params;
  });
  return batch;
}

/// Geometry, factors and scenario laws bundled for repeated batch generation.
/// The factorization happens once, at construction.
class Generator {
 public:
  Generator(ArrayGeometry geom, ScenarioDistributions dists, GeneratorOptions opts = {})
      : geom_(std::move(geom)), dists_(std::move(dists)), opts_(opts) {
    dists_.validate();
    const auto start = std::chrono::steady_clock::now();
    factors_ = factorize(geom_);
    factorization_seconds_ = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    config_ = canonical_config(geom_, dists_, opts_);
    config_hash_ = fnv1a64(config_.dump());
  }

  DatasetBatch batch(std::uint64_t master_seed, std::uint64_t batch_index, int batch_size) const {
    return gen_batch(master_seed, batch_index, batch_size, dists_, geom_, factors_, opts_);
  }

  const ArrayGeometry& geometry() const { return geom_; }
  const ScenarioDistributions& distributions() const { return dists_; }
  const GeneratorOptions& options() const { return opts_; }
  const CoherenceFactors& factors() const { return factors_; }
  const nlohmann::json& config() const { return config_; }
  std::uint64_t config_hash() const { return config_hash_; }
  double factorization_seconds() const { return factorization_seconds_; }

 private:
  ArrayGeometry geom_;
  ScenarioDistributions dists_;
  GeneratorOptions opts_;
  CoherenceFactors factors_;
  nlohmann::json config_;
  std::uint64_t config_hash_ = 0;
  double factorization_seconds_ = 0.0;
};

/// Lazily generated batches 0, 1, ..., count - 1. Only the batch being
/// consumed is held in memory.
inline auto stream_batches(std::shared_ptr<const Generator> gen, std::uint64_t master_seed, int batch_size,
                           std::uint64_t count) {
  return std::views::iota(std::uint64_t{0}, count) |
         std::views::transform([gen = std::move(gen), master_seed, batch_size](std::uint64_t index) {
           return gen->batch(master_seed, index, batch_size);
         });
}

/// Unbounded variant.
inline auto stream_batches(std::shared_ptr<const Generator> gen, std::uint64_t master_seed, int batch_size) {
  return std::views::iota(std::uint64_t{0}) |
         std::views::transform([gen = std::move(gen), master_seed, batch_size](std::uint64_t index) {
           return gen->batch(master_seed, index, batch_size);
         });
}

}  // namespace phasegen
