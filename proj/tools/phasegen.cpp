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

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "phasegen/cli.hpp"

namespace {

phasegen::Range to_range(const std::vector<double>& v, const char* name) {
  if (v.size() != 2) throw phasegen::cli::ConfigError(std::string(name) + " expects LO HI");
  return {v[0], v[1]};
}

}  // namespace

int main(int argc, char** argv) {
  using namespace phasegen;
  cli::RunConfig cfg;

  std::vector<double> snr{cfg.dists.snr_db.lo, cfg.dists.snr_db.hi};
  std::vector<double> drr{cfg.dists.drr_db.lo, cfg.dists.drr_db.hi};
  std::vector<double> dist{cfg.dists.r.lo, cfg.dists.r.hi};
  std::vector<double> classes{0.0, 5.0, 180.0};
  std::string geometry;
  std::string law = "gaussian";
  std::string out_dir = cfg.out_dir.string();
  std::string dump_factors;
  std::string dataset;

  CLI::App app{"phasegen: online phase-map training data for microphone-array DOA estimation"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML config file; flags override its values");

  app.add_option("--geometry", geometry, "Array geometry JSON {c, fs, dft_len, mics} (default: 4-mic ULA, 0.08 m, 16 kHz, DFT 512)");
  app.add_option("--snr", snr, "SNR range in dB, LO HI")->expected(2)->capture_default_str();
  app.add_option("--drr", drr, "DRR range in dB, LO HI")->expected(2)->capture_default_str();
  app.add_option("--r", dist, "Source distance range in m, LO HI")->expected(2)->capture_default_str();
  app.add_option("--classes", classes, "Class angle grid in degrees, START STEP END")->expected(3)->capture_default_str();
  app.add_option("--seed", cfg.seed, "Master seed (falls back to $PHASEGEN_SEED)")->envname("PHASEGEN_SEED")->capture_default_str();
  app.add_option("--workers", cfg.workers, "Worker threads")->capture_default_str();
  app.add_option("--batch-size", cfg.batch_size, "Samples per minibatch")->capture_default_str();
  app.add_option("--batches", cfg.batches, "Number of minibatches")->capture_default_str();
  app.add_option("--frames-per-scenario", cfg.frames_per_scenario,
                 "Consecutive samples sharing one scenario draw")->capture_default_str();
  app.add_option("--law", law, "Source and noise law")->check(CLI::IsMember({"gaussian"}))->capture_default_str();
  app.add_flag("--json", cfg.json, "Line-delimited JSON output");

  auto* generate = app.add_subcommand("generate", "Write minibatches as PGD1 files");
  generate->add_option("--out", out_dir, "Output directory")->capture_default_str();
  generate->add_option("--dump-factors", dump_factors, "Also write the coherence factors to this file");

  auto* validate = app.add_subcommand("validate", "Run the statistical validation suite");
  validate->add_option("--draws", cfg.n_draws, "Monte Carlo draws per check")->capture_default_str();

  auto* estimate = app.add_subcommand("estimate", "Score a dataset with the phase-only SRP oracle");
  estimate->add_option("dataset", dataset, "PGD1 file or directory of .pgd files")->required();
  estimate->add_option("--r-ref", cfg.r_ref, "Steering distance in m")->capture_default_str();
  estimate->add_option("--block-frames", cfg.block_frames, "Frames per block decision")->capture_default_str();
  estimate->add_flag("--records", cfg.records, "Emit one JSON record per frame");

  auto* bench = app.add_subcommand("bench", "Measure generation throughput");
  bench->add_flag("--scaling", cfg.scaling, "Repeat for 1..cores workers");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kConfigError;
  }

  try {
    cfg.dists.snr_db = to_range(snr, "--snr");
    cfg.dists.drr_db = to_range(drr, "--drr");
    cfg.dists.r = to_range(dist, "--r");
    cfg.dists.theta_classes = class_grid(classes.at(0), classes.at(1), classes.at(2));
    cfg.law = source_law_from_string(law);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return cli::kConfigError;
  }
  if (!geometry.empty()) cfg.geometry_path = geometry;
  cfg.out_dir = out_dir;
  if (!dump_factors.empty()) cfg.dump_factors = dump_factors;
  cfg.dataset = dataset;

  if (generate->parsed()) return cli::cmd_generate(cfg, std::cout, std::cerr);
  if (validate->parsed()) return cli::cmd_validate(cfg, std::cout, std::cerr);
  if (estimate->parsed()) return cli::cmd_estimate(cfg, std::cout, std::cerr);
  return cli::cmd_bench(cfg, std::cout, std::cerr);
}
