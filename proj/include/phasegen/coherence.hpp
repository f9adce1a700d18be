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
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "phasegen/geometry.hpp"
#include "phasegen/types.hpp"

namespace phasegen {

/// sin(x) / x, with sinc(0) = 1.
inline double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; }

/// Diffuse-field spatial coherence matrices Gamma(k), one real symmetric
/// M x M matrix per bin k = 1..K (stored at index k - 1).
struct CoherenceSet {
  std::vector<RealMatrix> gammas;

  int num_bins() const { return static_cast<int>(gammas.size()); }
  Eigen::Index num_mics() const { return gammas.empty() ? 0 : gammas.front().rows(); }
  const RealMatrix& at_bin(int k) const { return gammas.at(static_cast<std::size_t>(k - 1)); }
};

/// Gamma(k)_ij = sinc(||m_i - m_j|| / c * pi * fs * k / K)
inline CoherenceSet build_coherence(const ArrayGeometry& geom) {
  const RealMatrix& dist = geom.distances();
  const Eigen::Index m = dist.rows();
  CoherenceSet set;
  set.gammas.reserve(static_cast<std::size_t>(geom.num_bins()));
  for (int k = 1; k <= geom.num_bins(); ++k) {
    const double scale = geom.radians_per_meter(k);
    RealMatrix g(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      g(i, i) = 1.0;
      for (Eigen::Index j = i + 1; j < m; ++j) g(i, j) = g(j, i) = sinc(dist(i, j) * scale);
    }
    set.gammas.push_back(std::move(g));
  }
  return set;
}

class FactorizationError : public std::runtime_error {
 public:
  FactorizationError(int bin, const std::string& what)
      : std::runtime_error("factorize: bin " + std::to_string(bin) + ": " + what), bin_(bin) {}
  int bin() const { return bin_; }

 private:
  int bin_;
};

/// Square-root factors L(k) with L(k) L(k)^T equal to the PSD projection of
/// Gamma(k). Shared read-only by all sampling workers.
struct CoherenceFactors {
  std::vector<RealMatrix> factors;
  // Smallest eigenvalue of each symmetrized Gamma(k) before clipping.
  std::vector<double> min_eigenvalues;

  int num_bins() const { return static_cast<int>(factors.size()); }
  Eigen::Index num_mics() const { return factors.empty() ? 0 : factors.front().rows(); }
  const RealMatrix& at_bin(int k) const { return factors.at(static_cast<std::size_t>(k - 1)); }
};

/// Eigendecomposition with negative eigenvalues clipped to zero. Plain
/// Cholesky breaks down at low bins where Gamma approaches the all-ones
/// (rank one) matrix.
inline CoherenceFactors factorize(const CoherenceSet& coh) {
  CoherenceFactors out;
  out.factors.reserve(coh.gammas.size());
  out.min_eigenvalues.reserve(coh.gammas.size());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  for (std::size_t idx = 0; idx < coh.gammas.size(); ++idx) {
    const int bin = static_cast<int>(idx) + 1;
    const RealMatrix& g = coh.gammas[idx];
    if (g.rows() != g.cols()) throw FactorizationError(bin, "coherence matrix is not square");
    if (!g.allFinite()) throw FactorizationError(bin, "coherence matrix has non-finite entries");
    const Eigen::MatrixXd sym = 0.5 * (g + g.transpose());
    solver.compute(sym);
    if (solver.info() != Eigen::Success) throw FactorizationError(bin, "eigendecomposition did not converge");
    const Eigen::VectorXd& lambda = solver.eigenvalues();
    out.min_eigenvalues.push_back(lambda.minCoeff());
    const Eigen::VectorXd root = lambda.cwiseMax(0.0).cwiseSqrt();
    out.factors.emplace_back(solver.eigenvectors() * root.asDiagonal());
  }
  return out;
}

inline CoherenceFactors factorize(const ArrayGeometry& geom) { return factorize(build_coherence(geom)); }

}  // namespace phasegen
