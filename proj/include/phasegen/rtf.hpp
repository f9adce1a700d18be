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
#include <stdexcept>

#include "phasegen/coherence.hpp"
#include "phasegen/geometry.hpp"
#include "phasegen/random.hpp"
#include "phasegen/types.hpp"

namespace phasegen {

/// One room transfer function realization, K x M.
struct RtfRealization {
  ComplexMatrix h;
};

inline void check_factors_match(const CoherenceFactors& factors, const ArrayGeometry& geom) {
  if (factors.num_bins() != geom.num_bins() || factors.num_mics() != static_cast<Eigen::Index>(geom.num_mics())) {
    throw std::invalid_argument("rtf: coherence factors do not match the array geometry");
  }
}

/// Direct path exp(-j phi_dir(k)) for every bin and microphone.
inline ComplexMatrix direct_path(const ArrayGeometry& geom, const SourcePosition& src) {
  const RealMatrix phi = direct_phases(geom, src);
  ComplexMatrix h(phi.rows(), phi.cols());
  for (Eigen::Index k = 0; k < phi.rows(); ++k) {
    for (Eigen::Index i = 0; i < phi.cols(); ++i) h(k, i) = std::polar(1.0, -phi(k, i));
  }
  return h;
}

/// Late reverberation H_rev(k) ~ CN(0, sigma_r2 * Gamma(k)), independent over
/// bins. Per bin, draws z ~ CN(0, I) (mic order, real part before imaginary)
/// and returns sqrt(sigma_r2) * L(k) z.
template <class Rng>
ComplexMatrix gen_reverb(Rng& rng, const CoherenceFactors& factors, double sigma_r2) {
  if (!(sigma_r2 >= 0.0) || !std::isfinite(sigma_r2)) throw std::invalid_argument("rtf: sigma_R2 must be >= 0");
  const int bins = factors.num_bins();
  const Eigen::Index m = factors.num_mics();
  const double scale = std::sqrt(sigma_r2);
  ComplexNormal cn;
  ComplexMatrix rev(bins, m);
  ComplexVector z(m);
  for (int k = 0; k < bins; ++k) {
    for (Eigen::Index j = 0; j < m; ++j) z(j) = cn(rng);
    const RealMatrix& l = factors.factors[static_cast<std::size_t>(k)];
    for (Eigen::Index i = 0; i < m; ++i) {
      double re = 0.0;
      double im = 0.0;
      for (Eigen::Index j = 0; j < m; ++j) {
        re += l(i, j) * z(j).real();
        im += l(i, j) * z(j).imag();
      }
      rev(k, i) = Complex(scale * re, scale * im);
    }
  }
  return rev;
}

/// H = H_dir + H_rev for one source position.
template <class Rng>
RtfRealization gen_rtf(Rng& rng, const CoherenceFactors& factors, double sigma_r2, const ArrayGeometry& geom,
                       const SourcePosition& src) {
  check_factors_match(factors, geom);
  ComplexMatrix rev = gen_reverb(rng, factors, sigma_r2);
  return {direct_path(geom, src) + rev};
}

}  // namespace phasegen
