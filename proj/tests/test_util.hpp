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

#include <cstdint>

#include "balanced_mc/linalg.hpp"
#include "balanced_mc/random.hpp"

namespace bmc::testing {

/// Entries uniform on [lo, hi), filled column by column.
inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
                            double lo = -1.0, double hi = 1.0) {
  RngStream rng{CounterRng(seed)};
  Matrix M(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) M(i, j) = rng.uniform(lo, hi);
  return M;
}

/// 0/1 mask with each entry observed with probability p; entry (0, 0) is
/// always observed so the mask is never empty.
inline Matrix random_mask(Eigen::Index rows, Eigen::Index cols, double p,
                          std::uint64_t seed) {
  RngStream rng{CounterRng(seed)};
  Matrix T(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) T(i, j) = rng.uniform() < p ? 1.0 : 0.0;
  T(0, 0) = 1.0;
  return T;
}

inline Matrix random_symmetric(Eigen::Index n, std::uint64_t seed) {
  const Matrix A = random_matrix(n, n, seed);
  return (A + A.transpose()) / 2.0;
}

inline double rel_frobenius(const MatrixRef& a, const MatrixRef& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

}  // namespace bmc::testing
