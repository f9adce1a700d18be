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
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "phasegen/coherence.hpp"
#include "phasegen/geometry.hpp"
#include "phasegen/io.hpp"
#include "phasegen/oracle.hpp"
#include "phasegen/signalgen.hpp"
#include "phasegen/stats.hpp"

namespace phasegen::cli {

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kConfigError = 2, kIoError = 3 };

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::optional<std::filesystem::path> geometry_path;
  ScenarioDistributions dists = ScenarioDistributions::training_defaults();
  int batches = 1;
  int batch_size = 512;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "phasegen_out";
  unsigned workers = default_workers();
  int frames_per_scenario = 1;
  SourceLaw law = SourceLaw::gaussian;
  bool json = false;

  // generate
  std::optional<std::filesystem::path> dump_factors;
  // validate
  std::size_t n_draws = 100000;
  // estimate
  std::filesystem::path dataset;
  double r_ref = kDefaultReferenceDistance;
  int block_frames = 50;
  bool records = false;
  // bench
  bool scaling = false;

  void validate() const {
    if (batches < 1) throw ConfigError("batches must be >= 1");
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
    if (frames_per_scenario < 1) throw ConfigError("frames per scenario must be >= 1");
    if (block_frames < 1) throw ConfigError("block frames must be >= 1");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (!(r_ref > 0.0)) throw ConfigError("r_ref must be > 0");
    try {
      dists.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }

  ArrayGeometry geometry() const {
    if (!geometry_path) return ArrayGeometry::default_ula();
    try {
      return ArrayGeometry::load(*geometry_path);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    } catch (const std::runtime_error& e) {
      throw ConfigError(e.what());
    }
  }

  GeneratorOptions generator_options() const { return {frames_per_scenario, workers, law}; }
};

inline std::filesystem::path batch_file_name(const std::filesystem::path& dir, std::uint64_t index) {
  char name[32];
  std::snprintf(name, sizeof name, "batch_%06llu.pgd", static_cast<unsigned long long>(index));
  return dir / name;
}

template <class Fn>
int run_guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << '\n';
    return kIoError;
  } catch (const ContainerError& e) {
    err << "io error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "io error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::domain_error& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }
}

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

/// Writes `batches` PGD1 files into out_dir and prints a summary.
inline int cmd_generate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return run_guarded(err, [&] {
    cfg.validate();
    auto gen = std::make_shared<const Generator>(cfg.geometry(), cfg.dists, cfg.generator_options());
    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    if (ec) throw IoError("cannot create " + cfg.out_dir.string() + ": " + ec.message());
    if (cfg.dump_factors) {
      std::ofstream f(*cfg.dump_factors, std::ios::binary | std::ios::trunc);
      if (!f) throw IoError("cannot open " + cfg.dump_factors->string());
      write_factors(gen->factors(), f);
    }

    std::size_t bytes = 0;
    double gen_seconds = 0.0;
    std::uint64_t index = 0;
    auto start = Clock::now();
    for (const DatasetBatch& batch : stream_batches(gen, cfg.seed, cfg.batch_size, static_cast<std::uint64_t>(cfg.batches))) {
      gen_seconds += seconds_since(start);
      bytes += write_batch_file(batch, batch_file_name(cfg.out_dir, index++));
      start = Clock::now();
    }
    const auto samples = static_cast<std::uint64_t>(cfg.batches) * static_cast<std::uint64_t>(cfg.batch_size);
    const double rate = gen_seconds > 0.0 ? static_cast<double>(samples) / gen_seconds : 0.0;
    if (cfg.json) {
      out << nlohmann::json{{"command", "generate"}, {"files", cfg.batches},   {"samples", samples},
                            {"bytes", bytes},        {"samples_per_sec", rate}, {"config_hash", detail::hex64(gen->config_hash())}}
                 .dump()
          << '\n';
    } else {
      out << "generated " << cfg.batches << " files, " << samples << " samples, " << bytes << " bytes in "
          << cfg.out_dir.string() << " (" << static_cast<std::uint64_t>(rate) << " samples/sec)\n";
    }
    return kOk;
  });
}

/// Runs the statistical validation suite; exit 1 if any check fails.
inline int cmd_validate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return run_guarded(err, [&] {
    cfg.validate();
    if (cfg.n_draws < 100) throw ConfigError("draws must be >= 100");
    const auto start = Clock::now();
    const StatsConfig stats(cfg.geometry(), cfg.seed, cfg.workers);
    const SuiteOptions opts{.n_draws = cfg.n_draws, .dists = cfg.dists};
    const auto checks = run_validation_suite(stats, opts);
    const bool ok = all_pass(checks);
    const auto failed = std::count_if(checks.begin(), checks.end(), [](const CheckResult& c) { return !c.pass; });
    if (cfg.json) {
      for (const auto& c : checks) out << c.to_json().dump() << '\n';
      out << nlohmann::json{{"command", "validate"}, {"checks", checks.size()}, {"failed", failed}, {"pass", ok},
                            {"seconds", seconds_since(start)}}
                 .dump()
          << '\n';
    } else {
      print_report(out, checks);
      out << (ok ? "all " : "FAILED: ") << (ok ? checks.size() : static_cast<std::size_t>(failed)) << " of "
          << checks.size() << (ok ? " checks passed" : " checks") << " (" << seconds_since(start) << " s)\n";
    }
    return ok ? kOk : kCheckFailed;
  });
}

/// Loads every batch from a file (possibly concatenated) or a directory of
/// .pgd files, in file-name order.
inline std::vector<DatasetBatch> load_dataset(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  if (!fs::exists(path)) throw IoError("dataset not found: " + path.string());
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".pgd") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(path);
  }
  std::vector<DatasetBatch> batches;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    if (!in) throw IoError("cannot open " + f.string());
    for (auto& b : read_all_batches(in)) batches.push_back(std::move(b));
  }
  return batches;
}

struct EstimateResult {
  DoaMetrics frame;
  DoaMetrics block;
  std::size_t blocks = 0;
};

/// Frame-level decisions for every sample, then block decisions over runs of
/// up to block_frames frames sharing identical scenario parameters.
inline EstimateResult estimate_dataset(const std::vector<DatasetBatch>& batches, const ArrayGeometry& geom,
                                       const std::vector<double>& classes, double r_ref, int block_frames,
                                       unsigned workers, std::ostream* records = nullptr) {
  const SteeringTable table = build_steering(geom, classes, r_ref);
  struct Frame {
    const DatasetBatch* batch;
    std::size_t index;
  };
  std::vector<Frame> frames;
  for (const auto& b : batches) {
    if (b.num_classes != table.num_classes()) throw ConfigError("dataset class count does not match class grid");
    for (std::size_t i = 0; i < static_cast<std::size_t>(b.num_samples); ++i) frames.push_back({&b, i});
  }
  if (frames.empty()) throw ConfigError("empty dataset");

  std::vector<DoaDecision> decisions(frames.size());
  parallel_for(frames.size(), workers, [&](std::size_t n) {
    decisions[n] = srp_phase(frames[n].batch->phase_matrix(frames[n].index), table);
  });

  std::vector<double> truths(frames.size());
  for (std::size_t n = 0; n < frames.size(); ++n) {
    const int label = frames[n].batch->labels[frames[n].index];
    truths[n] = classes.at(static_cast<std::size_t>(label));
    if (records) {
      *records << nlohmann::json{{"class_true", label},
                                 {"class_est", decisions[n].argmax_class},
                                 {"scores", decisions[n].scores}}
                      .dump()
               << '\n';
    }
  }

  // Group by scenario, preserving first-appearance order.
  std::vector<std::vector<std::size_t>> groups;
  std::map<std::vector<double>, std::size_t> group_of;
  for (std::size_t n = 0; n < frames.size(); ++n) {
    const ScenarioParams& p = frames[n].batch->params[frames[n].index];
    const std::vector<double> key{p.theta_deg, p.r, p.snr_db, p.drr_db};
    auto [it, inserted] = group_of.try_emplace(key, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(n);
  }
  std::vector<double> block_est;
  std::vector<double> block_truth;
  for (const auto& group : groups) {
    for (std::size_t start = 0; start < group.size(); start += static_cast<std::size_t>(block_frames)) {
      const std::size_t end = std::min(group.size(), start + static_cast<std::size_t>(block_frames));
      std::vector<DoaDecision> block;
      for (std::size_t g = start; g < end; ++g) block.push_back(decisions[group[g]]);
      block_est.push_back(block_decision(block, classes).est_theta);
      block_truth.push_back(truths[group[start]]);
    }
  }

  EstimateResult result;
  result.frame = metrics(decisions, truths);
  result.block = metrics(std::span<const double>(block_est), block_truth);
  result.blocks = block_est.size();
  return result;
}

/// Runs the phase-only SRP oracle over a dataset and reports MAE / PACC at
/// frame and block level.
inline int cmd_estimate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return run_guarded(err, [&] {
    cfg.validate();
    const auto batches = load_dataset(cfg.dataset);
    if (batches.empty()) throw ConfigError("empty dataset");
    const nlohmann::json& embedded = batches.front().config;
    const ArrayGeometry geom =
        embedded.contains("geometry") ? ArrayGeometry::from_json(embedded.at("geometry")) : cfg.geometry();
    const std::vector<double> classes = embedded.contains("distributions")
                                            ? embedded.at("distributions").at("theta_classes").get<std::vector<double>>()
                                            : cfg.dists.theta_classes;
    const EstimateResult r =
        estimate_dataset(batches, geom, classes, cfg.r_ref, cfg.block_frames, cfg.workers, cfg.records ? &out : nullptr);
    const nlohmann::json summary = {{"command", "estimate"},      {"frames", r.frame.count}, {"blocks", r.blocks},
                                    {"block_frames", cfg.block_frames}, {"mae", r.frame.mae},    {"pacc", r.frame.pacc},
                                    {"mae50", r.block.mae},        {"pacc50", r.block.pacc}};
    out << summary.dump() << '\n';
    return kOk;
  });
}

struct BenchResult {
  unsigned workers = 1;
  double samples_per_sec = 0.0;
  double per_sample_us = 0.0;
  double per_batch_ms = 0.0;

  nlohmann::json to_json() const {
    return {{"workers", workers},
            {"samples_per_sec", samples_per_sec},
            {"per_sample_us", per_sample_us},
            {"per_batch_ms", per_batch_ms}};
  }
};

/// Times generation of cfg.batches batches on `workers` threads, no IO.
inline BenchResult bench_generation(const RunConfig& cfg, const Generator& gen, unsigned workers) {
  GeneratorOptions opts = gen.options();
  opts.workers = workers;
  const auto start = Clock::now();
  std::size_t samples = 0;
  for (int b = 0; b < cfg.batches; ++b) {
    samples += gen_batch(cfg.seed, static_cast<std::uint64_t>(b), cfg.batch_size, gen.distributions(), gen.geometry(),
                         gen.factors(), opts)
                   .labels.size();
  }
  const double secs = seconds_since(start);
  const auto n = static_cast<double>(samples);
  return {workers, n / secs, 1e6 * secs / n, 1e3 * secs / static_cast<double>(cfg.batches)};
}

/// Throughput report. The one-time factorization (done when the generator
/// is built) is reported once, separately from the per-batch figures.
inline int cmd_bench(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return run_guarded(err, [&] {
    cfg.validate();
    const Generator gen(cfg.geometry(), cfg.dists, cfg.generator_options());
    const double factorization_ms = 1e3 * gen.factorization_seconds();
    if (cfg.json) {
      out << nlohmann::json{{"command", "bench"}, {"factorization_ms", factorization_ms}, {"bins", gen.geometry().num_bins()},
                            {"mics", gen.geometry().num_mics()}}
                 .dump()
          << '\n';
    } else {
      out << "factorization: " << factorization_ms << " ms (K=" << gen.geometry().num_bins()
          << ", M=" << gen.geometry().num_mics() << ", once per geometry)\n";
    }
    std::vector<unsigned> counts{cfg.workers};
    if (cfg.scaling) {
      counts.clear();
      for (unsigned w = 1; w <= default_workers(); ++w) counts.push_back(w);
    }
    for (const unsigned w : counts) {
      const BenchResult r = bench_generation(cfg, gen, w);
      if (cfg.json) {
        nlohmann::json j = r.to_json();
        j["command"] = "bench";
        j["batch_size"] = cfg.batch_size;
        j["batches"] = cfg.batches;
        out << j.dump() << '\n';
      } else {
        char line[256];
        std::snprintf(line, sizeof line, "workers=%u  %.0f samples/sec  %.2f us/sample  %.2f ms/batch (B=%d)\n",
                      r.workers, r.samples_per_sec, r.per_sample_us, r.per_batch_ms, cfg.batch_size);
        out << line;
      }
    }
    return kOk;
  });
}

}  // namespace phasegen::cli
