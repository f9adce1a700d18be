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

#include "phasegen/types.hpp"

namespace phasegen {

/// Microphone spectra Y, K x M, source normalized to unit variance.
struct MicSignals {
  ComplexMatrix y;
};

/// Phase map (K x M, radians in (-pi, pi]) plus its class label.
struct PhaseMapSample {
  RealMatrix phi;
  int class_index = 0;
};

/// Principal value in (-pi, pi]. Zero maps to 0 regardless of the signs of
/// its zero components.
inline double principal_phase(Complex z) {
  if (z == Complex(0.0, 0.0)) return 0.0;
  const double a = std::arg(z);
  return a <= -kPi ? kPi : a;
}

inline RealMatrix extract_phase(const ComplexMatrix& y) {
  RealMatrix phi(y.rows(), y.cols());
  for (Eigen::Index k = 0; k < y.rows(); ++k) {
    for (Eigen::Index i = 0; i < y.cols(); ++i) phi(k, i) = principal_phase(y(k, i));
  }
  return phi;
}

inline RealMatrix extract_phase(const MicSignals& y) { return extract_phase(y.y); }

/// Wraps any angle to (-pi, pi].
inline double wrap_phase(double a) {
  double w = std::remainder(a, 2.0 * kPi);
  return w <= -kPi ? w + 2.0 * kPi : w;
}

}  // namespace phasegen
