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
#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "phasegen/coherence.hpp"
#include "phasegen/geometry.hpp"
#include "phasegen/parallel.hpp"
#include "phasegen/random.hpp"
#include "phasegen/rtf.hpp"
#include "phasegen/signalgen.hpp"

// Monte Carlo checks that the generator follows its declared laws. Every
// tolerance is an explicit function of the number of independent draws n:
//   - means of |.|^2 :                3 sigma, sigma = target / sqrt(n)
//   - coherences and correlations :   3.3 / sqrt(n)
// Draws are accumulated in fixed-size chunks with their own streams and
// reduced in chunk order, so results do not depend on the worker count.

namespace phasegen {

struct CheckResult {
  std::string check;
  double target = 0.0;
  double estimate = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::size_t n = 0;

  nlohmann::json to_json() const {
    return {{"check", check}, {"target", target}, {"estimate", estimate},
            {"tolerance", tolerance}, {"pass", pass}, {"n", n}};
  }
};

inline CheckResult make_check(std::string name, double target, double estimate, double tolerance, std::size_t n) {
  const bool pass = std::abs(estimate - target) <= tolerance;
  return {std::move(name), target, estimate, tolerance, pass, n};
}

inline double correlation_tolerance(std::size_t n) { return 3.3 / std::sqrt(static_cast<double>(n)); }

/// Validation target: a geometry with its factors, plus seed and workers.
struct StatsConfig {
  ArrayGeometry geom = ArrayGeometry::default_ula();
  CoherenceFactors factors = factorize(geom);
  std::uint64_t seed = 0;
  unsigned workers = default_workers();

  StatsConfig() = default;
  StatsConfig(ArrayGeometry g, std::uint64_t s, unsigned w = default_workers())
      : geom(std::move(g)), factors(factorize(geom)), seed(s), workers(w) {}
};

namespace detail {

inline constexpr std::size_t kChunkDraws = 1024;

// Stream tags keeping the individual checks statistically independent.
inline constexpr std::uint64_t kTagCoherence = 1;
inline constexpr std::uint64_t kTagVariance = 2;
inline constexpr std::uint64_t kTagBins = 3;

// Runs draw(rng, acc) n times split across fixed chunks, then folds the
// per-chunk accumulators in order with merge(total, part).
template <class Acc, class Draw, class Merge>
Acc chunked_accumulate(std::size_t n, std::uint64_t seed, std::uint64_t tag, unsigned workers, const Acc& zero,
                       Draw&& draw, Merge&& merge) {
  const std::size_t chunks = (n + kChunkDraws - 1) / kChunkDraws;
  std::vector<Acc> parts(chunks, zero);
  parallel_for(chunks, workers, [&](std::size_t c) {
    Engine rng = make_stream(seed, tag, c, StreamDomain::stats);
    const std::size_t count = std::min(kChunkDraws, n - c * kChunkDraws);
    for (std::size_t d = 0; d < count; ++d) draw(rng, parts[c]);
  });
  Acc total = zero;
  for (const auto& part : parts) merge(total, part);
  return total;
}

}  // namespace detail

/// Sample coherence, power and normalized pseudo-variance of H_rev per bin.
struct CoherenceEstimate {
  std::vector<ComplexMatrix> coherence;  // per bin, M x M, Hermitian
  std::vector<Eigen::VectorXd> power;    // per bin, mean |H_rev,i|^2
  std::vector<ComplexVector> pseudo;     // per bin, sum H^2 / sum |H|^2
  std::size_t n_draws = 0;

  const ComplexMatrix& at_bin(int k) const { return coherence.at(static_cast<std::size_t>(k - 1)); }
};

/// Estimates from n_draws independent reverberation realizations produced by
/// draw(rng) -> K x M matrix.
template <class ReverbDraw>
CoherenceEstimate estimate_coherence_of(ReverbDraw&& draw, int bins, Eigen::Index m, std::size_t n_draws,
                                        std::uint64_t seed, unsigned workers) {
  if (n_draws < 100) throw std::invalid_argument("estimate_coherence: need at least 100 draws");
  struct Acc {
    std::vector<ComplexMatrix> cross;
    std::vector<ComplexVector> square;
  };
  Acc zero{std::vector<ComplexMatrix>(static_cast<std::size_t>(bins), ComplexMatrix::Zero(m, m)),
           std::vector<ComplexVector>(static_cast<std::size_t>(bins), ComplexVector::Zero(m))};
  const Acc total = detail::chunked_accumulate(
      n_draws, seed, detail::kTagCoherence, workers, zero,
      [&](Engine& rng, Acc& acc) {
        const ComplexMatrix h = draw(rng);
        for (int k = 0; k < bins; ++k) {
          auto& cross = acc.cross[static_cast<std::size_t>(k)];
          auto& square = acc.square[static_cast<std::size_t>(k)];
          for (Eigen::Index i = 0; i < m; ++i) {
            const Complex hi = h(k, i);
            square(i) += hi * hi;
            for (Eigen::Index j = 0; j < m; ++j) cross(i, j) += hi * std::conj(h(k, j));
          }
        }
      },
      [&](Acc& into, const Acc& part) {
        for (int k = 0; k < bins; ++k) {
          into.cross[static_cast<std::size_t>(k)] += part.cross[static_cast<std::size_t>(k)];
          into.square[static_cast<std::size_t>(k)] += part.square[static_cast<std::size_t>(k)];
        }
      });

  CoherenceEstimate est;
  est.n_draws = n_draws;
  for (int k = 0; k < bins; ++k) {
    const ComplexMatrix& s = total.cross[static_cast<std::size_t>(k)];
    ComplexMatrix coh(m, m);
    Eigen::VectorXd power(m);
    ComplexVector pseudo(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double sii = s(i, i).real();
      power(i) = sii / static_cast<double>(n_draws);
      pseudo(i) = total.square[static_cast<std::size_t>(k)](i) / sii;
      for (Eigen::Index j = 0; j < m; ++j) coh(i, j) = s(i, j) / std::sqrt(sii * s(j, j).real());
    }
    est.coherence.push_back(std::move(coh));
    est.power.push_back(std::move(power));
    est.pseudo.push_back(std::move(pseudo));
  }
  return est;
}

/// Sample coherence of the generator's own reverberation path.
inline CoherenceEstimate estimate_coherence(const StatsConfig& cfg, std::size_t n_draws) {
  return estimate_coherence_of([&](Engine& rng) { return gen_reverb(rng, cfg.factors, 1.0); },
                               cfg.geom.num_bins(), cfg.factors.num_mics(), n_draws, cfg.seed, cfg.workers);
}

/// Sample coherence against the sinc targets at the given bins, real and
/// imaginary parts checked separately.
inline std::vector<CheckResult> check_coherence(const StatsConfig& cfg, const CoherenceEstimate& est,
                                                const std::vector<int>& bins) {
  const CoherenceSet target = build_coherence(cfg.geom);
  const double tol = correlation_tolerance(est.n_draws);
  std::vector<CheckResult> out;
  const Eigen::Index m = cfg.factors.num_mics();
  for (const int k : bins) {
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = i + 1; j < m; ++j) {
        const std::string where = "[k=" + std::to_string(k) + ",i=" + std::to_string(i) + ",j=" + std::to_string(j) + "]";
        const Complex c = est.at_bin(k)(i, j);
        out.push_back(make_check("coherence_re" + where, target.at_bin(k)(i, j), c.real(), tol, est.n_draws));
        out.push_back(make_check("coherence_im" + where, 0.0, c.imag(), tol, est.n_draws));
      }
    }
  }
  return out;
}

/// |E[H_rev^2]| / E|H_rev|^2 at the given bins for microphone 0.
inline std::vector<CheckResult> check_circular_symmetry(const CoherenceEstimate& est, const std::vector<int>& bins) {
  const double tol = correlation_tolerance(est.n_draws);
  std::vector<CheckResult> out;
  for (const int k : bins) {
    const Complex p = est.pseudo.at(static_cast<std::size_t>(k - 1))(0);
    out.push_back(make_check("pseudo_variance_h_rev[k=" + std::to_string(k) + "]", 0.0, std::abs(p), tol, est.n_draws));
  }
  return out;
}

/// E|X|^2, E|N|^2 and E|H_rev|^2 against 1, sigma_N2 and sigma_R2.
///
/// Bins are independent, so every sample contributes K realizations per
/// quantity; ceil(n_draws / K) samples are drawn. N is additionally
/// independent across mics (n = samples * K * M). H_rev is pooled over
/// correlated mics, for which 3 sigma / sqrt(samples * K) is a conservative
/// bound.
template <class SampleDraw>
std::vector<CheckResult> check_variances_of(SampleDraw&& draw, const ScenarioParams& params, int bins,
                                            Eigen::Index m, std::size_t n_draws, std::uint64_t seed,
                                            std::uint64_t stream_tag, unsigned workers) {
  const std::size_t per_sample = static_cast<std::size_t>(bins);
  const std::size_t samples = (n_draws + per_sample - 1) / per_sample;
  struct Acc {
    double x = 0.0, n = 0.0, h = 0.0;
  };
  const Acc total = detail::chunked_accumulate(
      samples, seed, stream_tag, workers, Acc{},
      [&](Engine& rng, Acc& acc) {
        const SampleComponents s = draw(rng);
        acc.x += s.x.squaredNorm();
        acc.n += s.noise.squaredNorm();
        acc.h += s.h_rev.squaredNorm();
      },
      [](Acc& into, const Acc& part) {
        into.x += part.x;
        into.n += part.n;
        into.h += part.h;
      });

  const std::size_t n_x = samples * per_sample;
  const std::size_t n_n = n_x * static_cast<std::size_t>(m);
  const double mean_x = total.x / static_cast<double>(n_x);
  const double mean_n = total.n / static_cast<double>(n_n);
  const double mean_h = total.h / static_cast<double>(n_n);
  auto bound = [](double target, std::size_t n) { return 3.0 * target / std::sqrt(static_cast<double>(n)); };
  char tag[96];
  std::snprintf(tag, sizeof tag, "[snr=%.3g,drr=%.3g]", params.snr_db, params.drr_db);
  return {make_check(std::string("variance_x") + tag, 1.0, mean_x, bound(1.0, n_x), n_x),
          make_check(std::string("variance_n") + tag, params.sigma_n2, mean_n, bound(params.sigma_n2, n_n), n_n),
          make_check(std::string("variance_h_rev") + tag, params.sigma_r2, mean_h, bound(params.sigma_r2, n_x), n_x)};
}

inline std::vector<CheckResult> check_variances(const StatsConfig& cfg, const ScenarioParams& params,
                                                std::size_t n_draws, std::uint64_t stream_tag = detail::kTagVariance) {
  return check_variances_of(
      [&](Engine& rng) { return gen_sample_components(rng, params, cfg.geom, cfg.factors); }, params,
      cfg.geom.num_bins(), cfg.factors.num_mics(), n_draws, cfg.seed, stream_tag, cfg.workers);
}

/// Normalized correlation |sum a b*| / sqrt(sum |a|^2 sum |b|^2).
struct CrossAccumulator {
  Complex cross{0.0, 0.0};
  double aa = 0.0;
  double bb = 0.0;
  Complex square_a{0.0, 0.0};

  void add(Complex a, Complex b) {
    cross += a * std::conj(b);
    aa += std::norm(a);
    bb += std::norm(b);
    square_a += a * a;
  }
  void merge(const CrossAccumulator& o) {
    cross += o.cross;
    aa += o.aa;
    bb += o.bb;
    square_a += o.square_a;
  }
  double correlation() const { return std::abs(cross) / std::sqrt(aa * bb); }
  double pseudo() const { return std::abs(square_a) / aa; }
};

using BinPair = std::pair<int, int>;

/// Cross-bin correlations of X, N (mic 0) and H_rev (mic 0), plus the
/// pseudo-variance of X and N at the first bin of each pair.
template <class SampleDraw>
std::vector<CheckResult> check_bin_independence_of(SampleDraw&& draw, const std::vector<BinPair>& pairs,
                                                   std::size_t n_draws, std::uint64_t seed, unsigned workers) {
  const std::size_t q = 3;
  const std::vector<CrossAccumulator> zero(pairs.size() * q);
  const auto total = detail::chunked_accumulate(
      n_draws, seed, detail::kTagBins, workers, zero,
      [&](Engine& rng, std::vector<CrossAccumulator>& acc) {
        const SampleComponents s = draw(rng);
        for (std::size_t p = 0; p < pairs.size(); ++p) {
          const Eigen::Index a = pairs[p].first - 1;
          const Eigen::Index b = pairs[p].second - 1;
          acc[p * q + 0].add(s.x(a), s.x(b));
          acc[p * q + 1].add(s.noise(a, 0), s.noise(b, 0));
          acc[p * q + 2].add(s.h_rev(a, 0), s.h_rev(b, 0));
        }
      },
      [](std::vector<CrossAccumulator>& into, const std::vector<CrossAccumulator>& part) {
        for (std::size_t n = 0; n < into.size(); ++n) into[n].merge(part[n]);
      });

  const double tol = correlation_tolerance(n_draws);
  const char* names[q] = {"x", "n", "h_rev"};
  std::vector<CheckResult> out;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const std::string where = "[" + std::to_string(pairs[p].first) + "," + std::to_string(pairs[p].second) + "]";
    for (std::size_t v = 0; v < q; ++v) {
      out.push_back(make_check(std::string("bin_correlation_") + names[v] + where, 0.0, total[p * q + v].correlation(),
                               tol, n_draws));
    }
  }
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const std::string where = "[k=" + std::to_string(pairs[p].first) + "]";
    out.push_back(make_check("pseudo_variance_x" + where, 0.0, total[p * q + 0].pseudo(), tol, n_draws));
    out.push_back(make_check("pseudo_variance_n" + where, 0.0, total[p * q + 1].pseudo(), tol, n_draws));
  }
  return out;
}

inline std::vector<CheckResult> check_bin_independence(const StatsConfig& cfg, const ScenarioParams& params,
                                                       const std::vector<BinPair>& pairs, std::size_t n_draws) {
  for (const auto& [a, b] : pairs) {
    if (a < 1 || b < 1 || a > cfg.geom.num_bins() || b > cfg.geom.num_bins()) {
      throw std::out_of_range("check_bin_independence: bin out of range");
    }
  }
  return check_bin_independence_of(
      [&](Engine& rng) { return gen_sample_components(rng, params, cfg.geom, cfg.factors); }, pairs, n_draws,
      cfg.seed, cfg.workers);
}

/// Keeps only the requested bins that exist for this geometry.
inline std::vector<int> existing_bins(const ArrayGeometry& geom, std::vector<int> bins) {
  std::erase_if(bins, [&](int k) { return k < 1 || k > geom.num_bins(); });
  return bins;
}

struct SuiteOptions {
  std::size_t n_draws = 100000;
  int variance_draws = 5;  // parameter sets for the variance checks
  ScenarioDistributions dists = ScenarioDistributions::training_defaults();
};

/// The full validation suite: coherence convergence, circular symmetry,
/// variance calibration and bin independence.
inline std::vector<CheckResult> run_validation_suite(const StatsConfig& cfg, const SuiteOptions& opts = {}) {
  std::vector<CheckResult> all;
  auto append = [&](std::vector<CheckResult> part) {
    all.insert(all.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  };
  const int last = cfg.geom.num_bins();
  const auto coherence_bins = existing_bins(cfg.geom, {1, 64, 128, last});
  const CoherenceEstimate est = estimate_coherence(cfg, opts.n_draws);
  append(check_coherence(cfg, est, coherence_bins));
  append(check_circular_symmetry(est, existing_bins(cfg.geom, {1, (last + 1) / 2, last})));

  Engine param_rng = make_stream(cfg.seed, detail::kTagVariance, 0, StreamDomain::scenario);
  for (int p = 0; p < opts.variance_draws; ++p) {
    const ScenarioParams params = sample_params(param_rng, opts.dists);
    append(check_variances(cfg, params, opts.n_draws, detail::kTagVariance + 16 * static_cast<std::uint64_t>(p + 1)));
  }

  std::vector<BinPair> pairs;
  for (const BinPair& bp : {BinPair{1, 2}, BinPair{1, 128}, BinPair{127, 128}}) {
    if (bp.second <= last) pairs.push_back(bp);
  }
  if (pairs.empty() && last >= 2) pairs.push_back({1, last});
  if (!pairs.empty()) append(check_bin_independence(cfg, ScenarioParams::make(90.0, 18, 2.0, 0.0, 0.0), pairs, opts.n_draws));
  return all;
}

inline bool all_pass(const std::vector<CheckResult>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

inline void print_report(std::ostream& os, const std::vector<CheckResult>& checks) {
  char line[256];
  for (const auto& c : checks) {
    std::snprintf(line, sizeof line, "%s  %-44s target=% .6g estimate=% .6g tol=%.3g n=%zu\n", c.pass ? "PASS" : "FAIL",
                  c.check.c_str(), c.target, c.estimate, c.tolerance, c.n);
    os << line;
  }
}

}  // namespace phasegen
