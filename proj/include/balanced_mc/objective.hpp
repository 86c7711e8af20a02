// Copyright 2026 The balanced-mc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "balanced_mc/linalg.hpp"
#include "balanced_mc/masked.hpp"

namespace bmc {

/// Checks shapes and that W >= 1 wherever T is observed.
inline void validate_fit_inputs(const MatrixRef& Y, const MatrixRef& T,
                                const MatrixRef& W, std::string_view what) {
  require_same_shape(Y, T, what);
  require_same_shape(Y, W, what);
  validate_mask(T);
  require_finite(Y, what);
  require_finite(W, what);
  if (((T.array() == 1.0) && (W.array() < 1.0)).any())
    throw InvalidInput(std::string(what) +
                       ": weights must be >= 1 on observed entries");
}

/// (n1 n2)^{-1} ||T o W^{1/2} o (Y - A)||_F^2
inline double weighted_data_fit(const MatrixRef& A, const MatrixRef& Y,
                                const MatrixRef& T, const MatrixRef& W) {
  require_same_shape(A, Y, "weighted_data_fit");
  const double n = static_cast<double>(Y.size());
  return (T.array() * W.array() * (Y - A).array().square()).sum() / n;
}

/// The hybrid estimator's objective:
///   (n1 n2)^{-1} ||T o W^{1/2} o (Y - A)||_F^2 + mu ||A||_*
inline double hybrid_objective(const MatrixRef& A, const MatrixRef& Y,
                               const MatrixRef& T, const MatrixRef& W,
                               double mu) {
  validate_fit_inputs(Y, T, W, "hybrid_objective");
  require_same_shape(A, Y, "hybrid_objective");
  if (!(mu >= 0)) throw InvalidInput("hybrid_objective: mu must be >= 0");
  const double fit = weighted_data_fit(A, Y, T, W);
  return mu == 0.0 ? fit : fit + mu * nuclear_norm(A);
}

}  // namespace bmc
