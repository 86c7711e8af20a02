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

#include <cstddef>
#include <vector>

#include "balanced_mc/linalg.hpp"

namespace bmc {

/// Throws InvalidInput unless every entry of T is exactly 0 or 1 (and, when
/// require_observed, at least one entry is 1).
inline void validate_mask(const MatrixRef& T, bool require_observed = true) {
  if (T.size() == 0) throw InvalidInput("mask: empty matrix");
  Eigen::Index ones = 0;
  for (Eigen::Index j = 0; j < T.cols(); ++j)
    for (Eigen::Index i = 0; i < T.rows(); ++i) {
      const double t = T(i, j);
      if (t == 1.0)
        ++ones;
      else if (t != 0.0)
        throw InvalidInput("mask: entries must be exactly 0 or 1");
    }
  if (require_observed && ones == 0)
    throw InvalidInput("mask: no observed entries");
}

inline Eigen::Index observed_count(const MatrixRef& T) {
  return static_cast<Eigen::Index>((T.array() == 1.0).count());
}

/// Observed positions of a mask in row-major order, with optional per-entry
/// value and weight payloads.
struct ObservedEntries {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::vector<Eigen::Index> row;
  std::vector<Eigen::Index> col;
  std::vector<double> value;
  std::vector<double> weight;

  std::size_t size() const noexcept { return row.size(); }
};

inline ObservedEntries observed_entries(const MatrixRef& T) {
  ObservedEntries e;
  e.rows = T.rows();
  e.cols = T.cols();
  for (Eigen::Index i = 0; i < T.rows(); ++i)
    for (Eigen::Index j = 0; j < T.cols(); ++j)
      if (T(i, j) == 1.0) {
        e.row.push_back(i);
        e.col.push_back(j);
      }
  return e;
}

inline ObservedEntries observed_entries(const MatrixRef& T, const MatrixRef& Y,
                                        const MatrixRef& W) {
  ObservedEntries e = observed_entries(T);
  e.value.reserve(e.size());
  e.weight.reserve(e.size());
  for (std::size_t k = 0; k < e.size(); ++k) {
    e.value.push_back(Y(e.row[k], e.col[k]));
    e.weight.push_back(W(e.row[k], e.col[k]));
  }
  return e;
}

/// Y paired with its observation mask T. Unobserved values are stored as 0.
class MaskedMatrix {
 public:
  MaskedMatrix(Matrix values, Matrix mask)
      : values_(std::move(values)), mask_(std::move(mask)) {
    require_same_shape(values_, mask_, "MaskedMatrix");
    validate_mask(mask_);
    require_finite(values_, "MaskedMatrix");
    values_ = values_.cwiseProduct(mask_);
  }

  const Matrix& values() const noexcept { return values_; }
  const Matrix& mask() const noexcept { return mask_; }
  Eigen::Index n1() const noexcept { return values_.rows(); }
  Eigen::Index n2() const noexcept { return values_.cols(); }
  Eigen::Index observed() const { return observed_count(mask_); }

 private:
  Matrix values_;
  Matrix mask_;
};

}  // namespace bmc
