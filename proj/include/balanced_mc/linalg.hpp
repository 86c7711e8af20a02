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

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <string>
#include <string_view>

#include "balanced_mc/errors.hpp"
#include "balanced_mc/random.hpp"

namespace bmc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using MatrixRef = Eigen::Ref<const Matrix>;

/// Dense SVD is used below this minimum dimension, power iteration above.
inline constexpr Eigen::Index kFullSvdSwitchover = 64;

inline void require_finite(const MatrixRef& m, std::string_view what) {
  if (!m.allFinite())
    throw InvalidInput(std::string(what) + ": non-finite entry");
}

inline void require_same_shape(const MatrixRef& a, const MatrixRef& b,
                               std::string_view what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InvalidInput(std::string(what) + ": shape mismatch (" +
                       std::to_string(a.rows()) + "x" +
                       std::to_string(a.cols()) + " vs " +
                       std::to_string(b.rows()) + "x" +
                       std::to_string(b.cols()) + ")");
}

struct SingularTriplet {
  double sigma = 0.0;
  Vector u;
  Vector v;
};

/// Thrown when power iteration exhausts its budget; best() is the last
/// iterate, which is still a consistent triplet (M v = sigma u).
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, SingularTriplet best)
      : std::runtime_error(what), best_(std::move(best)) {}
  const SingularTriplet& best() const noexcept { return best_; }

 private:
  SingularTriplet best_;
};

/// Anything that can apply a matrix and its transpose to dense vectors.
template <class Op>
concept LinearOperator = requires(const Op& op, const Vector& x, Vector& y) {
  { op.rows() } -> std::convertible_to<Eigen::Index>;
  { op.cols() } -> std::convertible_to<Eigen::Index>;
  op.apply(x, y);
  op.apply_transpose(x, y);
};

class DenseOperator {
 public:
  explicit DenseOperator(const MatrixRef& m) : m_(m) {}
  Eigen::Index rows() const { return m_.rows(); }
  Eigen::Index cols() const { return m_.cols(); }
  void apply(const Vector& x, Vector& y) const { y.noalias() = m_ * x; }
  void apply_transpose(const Vector& x, Vector& y) const {
    y.noalias() = m_.transpose() * x;
  }

 private:
  MatrixRef m_;
};

struct PowerIterationResult {
  SingularTriplet triplet;
  int iterations = 0;
  bool converged = false;
};

/// Power iteration on M^T M. Stops when the singular-value estimate changes
/// by less than tol (relative). The returned triplet always satisfies
/// M v = sigma u exactly, with sigma >= 0.
template <LinearOperator Op>
PowerIterationResult power_iteration(const Op& op, double tol, int max_iter,
                                     const Vector* start = nullptr) {
  const Eigen::Index m = op.rows();
  const Eigen::Index n = op.cols();
  PowerIterationResult out;
  Vector v(n);
  if (start != nullptr && start->size() == n && start->norm() > 0) {
    v = *start;
  } else {
    RngStream rng(CounterRng(0x5eed5eedULL));
    for (Eigen::Index j = 0; j < n; ++j) v[j] = rng.uniform(-1.0, 1.0);
  }
  v.normalize();

  Vector w(m), z(n);
  double sigma = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    op.apply(v, w);
    const double s = w.norm();
    if (s == 0.0) {
      sigma = 0.0;
      out.iterations = it;
      out.converged = true;
      break;
    }
    op.apply_transpose(w, z);
    const double zn = z.norm();
    // ||M^T M v|| / ||M v|| is a lower bound on sigma_1 that improves on s.
    const double est = zn / s;
    v = z / zn;
    out.iterations = it;
    if (std::abs(est - sigma) <= tol * std::max(est, 1e-300)) {
      sigma = est;
      out.converged = true;
      break;
    }
    sigma = est;
  }

  op.apply(v, w);
  sigma = w.norm();
  if (sigma == 0.0) {
    // Zero operator (or v in its kernel): canonical basis vectors.
    out.triplet.sigma = 0.0;
    out.triplet.u = Vector::Unit(m, 0);
    out.triplet.v = Vector::Unit(n, 0);
    out.converged = true;
    return out;
  }
  out.triplet.sigma = sigma;
  out.triplet.u = w / sigma;
  out.triplet.v = std::move(v);
  return out;
}

/// Largest singular value with its singular vectors, oriented so that
/// u^T M v = sigma >= 0. Small matrices go through a full SVD.
inline SingularTriplet top_singular_triplet(const MatrixRef& M,
                                            double tol = 1e-10,
                                            int max_iter = 10000) {
  require_finite(M, "top_singular_triplet");
  if (!(tol > 0)) throw InvalidInput("top_singular_triplet: tol must be > 0");
  if (M.size() == 0) throw InvalidInput("top_singular_triplet: empty matrix");

  if (std::min(M.rows(), M.cols()) <= kFullSvdSwitchover) {
    SingularTriplet t;
    if (M.isZero(0.0)) {
      t.u = Vector::Unit(M.rows(), 0);
      t.v = Vector::Unit(M.cols(), 0);
      return t;
    }
    Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    t.sigma = svd.singularValues()[0];
    t.u = svd.matrixU().col(0);
    t.v = svd.matrixV().col(0);
    if (t.u.dot(M * t.v) < 0) t.u = -t.u;
    return t;
  }

  auto res = power_iteration(DenseOperator(M), tol, max_iter);
  if (!res.converged)
    throw ConvergenceError("top_singular_triplet: no convergence after " +
                               std::to_string(max_iter) + " iterations",
                           std::move(res.triplet));
  return std::move(res.triplet);
}

inline Vector singular_values(const MatrixRef& M) {
  require_finite(M, "singular_values");
  if (M.size() == 0) return Vector();
  Eigen::BDCSVD<Matrix> svd(M);
  return svd.singularValues();
}

inline double spectral_norm(const MatrixRef& M) {
  const Vector s = singular_values(M);
  return s.size() ? s[0] : 0.0;
}

inline double nuclear_norm(const MatrixRef& M) {
  return singular_values(M).sum();
}

/// Number of singular values above rel_tol * sigma_1.
inline int estimate_rank(const MatrixRef& M, double rel_tol = 1e-4) {
  if (!(rel_tol > 0 && rel_tol < 1))
    throw InvalidInput("estimate_rank: rel_tol must lie in (0, 1)");
  const Vector s = singular_values(M);
  if (s.size() == 0 || s[0] == 0.0) return 0;
  const double cut = rel_tol * s[0];
  return static_cast<int>((s.array() > cut).count());
}

/// Singular-value soft thresholding U max(S - t, 0) V^T.
inline Matrix svt(const MatrixRef& M, double threshold) {
  require_finite(M, "svt");
  if (!(threshold >= 0)) throw InvalidInput("svt: threshold must be >= 0");
  if (threshold == 0.0) return M;
  Eigen::BDCSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector s = (svd.singularValues().array() - threshold).max(0.0);
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

/// Euclidean projection onto the positive semidefinite cone. The input is
/// symmetrized first.
inline Matrix psd_project(const MatrixRef& S) {
  if (S.rows() != S.cols())
    throw InvalidInput("psd_project: matrix must be square");
  require_finite(S, "psd_project");
  const Matrix sym = 0.5 * (S + S.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  const Vector lam = eig.eigenvalues().cwiseMax(0.0);
  const Matrix& Q = eig.eigenvectors();
  Matrix out = Q * lam.asDiagonal() * Q.transpose();
  return 0.5 * (out + out.transpose());
}

/// ||M||_{2,inf}: largest row Euclidean norm.
inline double max_row_norm(const MatrixRef& M) {
  if (M.rows() == 0) return 0.0;
  return M.rowwise().norm().maxCoeff();
}

/// Projection onto {M : ||M||_{2,inf} <= radius}; rows inside the ball are
/// returned untouched.
inline Matrix row_norm_project(const MatrixRef& M, double radius) {
  if (!(radius > 0)) throw InvalidInput("row_norm_project: radius must be > 0");
  require_finite(M, "row_norm_project");
  Matrix out = M;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double nrm = out.row(i).norm();
    if (nrm > radius) out.row(i) *= radius / nrm;
  }
  return out;
}

/// In-place variant; returns true if any row was rescaled.
template <class Derived>
bool row_norm_project_inplace(Eigen::MatrixBase<Derived>& M, double radius) {
  bool clipped = false;
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    const double nrm = M.row(i).norm();
    if (nrm > radius) {
      M.row(i) *= radius / nrm;
      clipped = true;
    }
  }
  return clipped;
}

}  // namespace bmc
