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

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "balanced_mc/linalg.hpp"
#include "balanced_mc/masked.hpp"
#include "balanced_mc/objective.hpp"
#include "balanced_mc/random.hpp"

namespace bmc {

/// A = L R^T with L: n1 x r, R: n2 x r.
struct FactorPair {
  Matrix L;
  Matrix R;

  Eigen::Index rank() const noexcept { return L.cols(); }
  Matrix product() const { return L * R.transpose(); }
};

struct PgdConfig {
  double beta = 1.0;
  double mu = 0.0;
  int rank = 1;
  /// Step as a fraction of 1 / (Lipschitz bound of the block gradient),
  /// recomputed for each block from the current factors. Halved for the
  /// rest of the solve after any iteration that raises the objective.
  double step = 1.0;
  int max_iter = 5000;
  double tol = 1e-6;
  /// Row-norm radius beta (literal) instead of sqrt(beta). The default
  /// sqrt(beta) makes the factor set match the max-norm ball of radius beta.
  bool literal_radius = false;

  double radius() const { return literal_radius ? beta : std::sqrt(beta); }

  void validate(Eigen::Index n1, Eigen::Index n2) const {
    if (!(beta > 0)) throw InvalidInput("PgdConfig: beta must be > 0");
    if (!(mu >= 0)) throw InvalidInput("PgdConfig: mu must be >= 0");
    if (!(step > 0)) throw InvalidInput("PgdConfig: step must be > 0");
    if (rank < 1 || rank > std::min(n1, n2))
      throw InvalidInput("PgdConfig: rank must lie in [1, min(n1, n2)]");
    if (max_iter < 1) throw InvalidInput("PgdConfig: max_iter must be >= 1");
    if (!(tol > 0)) throw InvalidInput("PgdConfig: tol must be > 0");
  }
};

struct PgdResult {
  FactorPair factors;
  Matrix A_hat;
  std::vector<double> objective_trace;
  int iterations = 0;
  bool converged = false;
  /// Whether the row-norm projection rescaled any row at any point. When
  /// false the run is identical to one with any larger radius.
  bool projection_active = false;
};

/// f(L, R) = (n1 n2)^{-1} ||T o W^{1/2} o (Y - L R^T)||_F^2
///           + (mu / 2)(||L||_F^2 + ||R||_F^2)
inline double factored_objective(const FactorPair& P, const MatrixRef& Y,
                                 const MatrixRef& T, const MatrixRef& W,
                                 double mu) {
  require_same_shape(Y, T, "factored_objective");
  require_same_shape(Y, W, "factored_objective");
  if (P.L.rows() != Y.rows() || P.R.rows() != Y.cols() ||
      P.L.cols() != P.R.cols())
    throw InvalidInput("factored_objective: factor shapes do not match Y");
  return weighted_data_fit(P.product(), Y, T, W) +
         0.5 * mu * (P.L.squaredNorm() + P.R.squaredNorm());
}

/// Analytic gradient of factored_objective:
///   df/dL = -(2 / n1 n2) [T o W o (Y - L R^T)] R + mu L, and symmetrically.
inline FactorPair factored_gradient(const FactorPair& P, const MatrixRef& Y,
                                    const MatrixRef& T, const MatrixRef& W,
                                    double mu) {
  const double c = 2.0 / static_cast<double>(Y.size());
  const Matrix G = (T.array() * W.array() * (Y - P.product()).array()).matrix();
  return {-c * G * P.R + mu * P.L, -c * G.transpose() * P.L + mu * P.R};
}

/// Max relative deviation between analytic and central-difference gradients
/// over `coords` randomly chosen factor entries.
inline double gradient_check(const FactorPair& P, const MatrixRef& Y,
                             const MatrixRef& T, const MatrixRef& W, double mu,
                             double eps, std::uint64_t seed = 1,
                             int coords = 20) {
  if (!(eps > 0 && eps <= 1e-3))
    throw InvalidInput("gradient_check: eps must lie in (0, 1e-3]");
  const FactorPair g = factored_gradient(P, Y, T, W, mu);
  RngStream rng{CounterRng(seed)};
  const auto nl = static_cast<std::uint64_t>(P.L.size());
  const auto total = nl + static_cast<std::uint64_t>(P.R.size());
  double worst = 0.0;
  for (int c = 0; c < coords; ++c) {
    const auto idx = rng.below(total);
    FactorPair plus = P;
    FactorPair minus = P;
    double analytic;
    if (idx < nl) {
      const auto k = static_cast<Eigen::Index>(idx);
      plus.L.data()[k] += eps;
      minus.L.data()[k] -= eps;
      analytic = g.L.data()[k];
    } else {
      const auto k = static_cast<Eigen::Index>(idx - nl);
      plus.R.data()[k] += eps;
      minus.R.data()[k] -= eps;
      analytic = g.R.data()[k];
    }
    const double fd = (factored_objective(plus, Y, T, W, mu) -
                       factored_objective(minus, Y, T, W, mu)) /
                      (2.0 * eps);
    const double denom = std::max({std::abs(analytic), std::abs(fd), 1e-8});
    worst = std::max(worst, std::abs(fd - analytic) / denom);
  }
  return worst;
}

/// Thin SVD of the reweighted observed matrix, kept so that several radii
/// can share one decomposition.
struct SpectralInit {
  Matrix U;  ///< n1 x r, scaled by sqrt of singular values
  Matrix V;  ///< n2 x r, scaled by sqrt of singular values

  SpectralInit(const MatrixRef& Y, const MatrixRef& T, const MatrixRef& W,
               int rank) {
    const Matrix tw = T.cwiseProduct(W);
    const double mass = tw.sum();
    if (!(mass > 0)) throw InvalidInput("SpectralInit: no observed weight");
    // Rescale so the reweighted matrix has the scale of a full observation.
    const Matrix M = (static_cast<double>(Y.size()) / mass) * tw.cwiseProduct(Y);
    Eigen::BDCSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector s = svd.singularValues().head(rank).cwiseSqrt();
    U = svd.matrixU().leftCols(rank) * s.asDiagonal();
    V = svd.matrixV().leftCols(rank) * s.asDiagonal();
  }

  FactorPair factors(double radius) const {
    return {row_norm_project(U, radius), row_norm_project(V, radius)};
  }
};

namespace detail {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline void observed_residuals(const ObservedEntries& obs, const RowMat& L,
                               const RowMat& R, Vector& res) {
  for (std::size_t k = 0; k < obs.size(); ++k)
    res[static_cast<Eigen::Index>(k)] =
        obs.value[k] - L.row(obs.row[k]).dot(R.row(obs.col[k]));
}

inline double objective_from_residuals(const ObservedEntries& obs,
                                       const Vector& res, const RowMat& L,
                                       const RowMat& R, double mu,
                                       double inv_n) {
  double fit = 0.0;
  for (std::size_t k = 0; k < obs.size(); ++k) {
    const double r = res[static_cast<Eigen::Index>(k)];
    fit += obs.weight[k] * r * r;
  }
  return fit * inv_n + 0.5 * mu * (L.squaredNorm() + R.squaredNorm());
}

inline double squared_spectral_norm(const RowMat& F) {
  const Matrix gram = F.transpose() * F;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  return std::max(eig.eigenvalues().maxCoeff(), 0.0);
}

}  // namespace detail

/// Alternating projected gradient on (L, R) with row-norm projection.
/// Only observed entries are touched, so each iteration costs O(|obs| r).
/// Returns the best iterate seen.
inline PgdResult pgd_solve(const MatrixRef& Y, const MatrixRef& T,
                           const MatrixRef& W, const PgdConfig& config,
                           const std::optional<FactorPair>& init = {}) {
  validate_fit_inputs(Y, T, W, "pgd_solve");
  config.validate(Y.rows(), Y.cols());
  const ObservedEntries obs = observed_entries(T, Y, W);
  const double inv_n = 1.0 / static_cast<double>(Y.size());
  const double c = 2.0 * inv_n;
  const double radius = config.radius();
  const double w_max = *std::max_element(obs.weight.begin(), obs.weight.end());
  const double mu = config.mu;

  FactorPair start = init ? *init : SpectralInit(Y, T, W, config.rank).factors(radius);
  if (start.L.rows() != Y.rows() || start.R.rows() != Y.cols() ||
      start.L.cols() != config.rank || start.R.cols() != config.rank)
    throw InvalidInput("pgd_solve: initial factors do not match the problem");
  detail::RowMat L = start.L;
  detail::RowMat R = start.R;
  PgdResult out;
  out.projection_active = row_norm_project_inplace(L, radius);
  out.projection_active |= row_norm_project_inplace(R, radius);

  Vector res(static_cast<Eigen::Index>(obs.size()));
  detail::RowMat G;
  detail::observed_residuals(obs, L, R, res);
  double f = detail::objective_from_residuals(obs, res, L, R, mu, inv_n);
  const double f0 = f;

  out.objective_trace.push_back(f);
  detail::RowMat best_L = L, best_R = R;
  double best_f = f;
  // Halved whenever an iteration increases the objective.
  double step = config.step;

  for (int it = 1; it <= config.max_iter; ++it) {
    // L block.
    G = mu * L;
    for (std::size_t k = 0; k < obs.size(); ++k)
      G.row(obs.row[k]) -= (c * obs.weight[k] * res[static_cast<Eigen::Index>(k)]) *
                           R.row(obs.col[k]);
    double lip = c * w_max * detail::squared_spectral_norm(R) + mu;
    L -= (step / std::max(lip, 1e-300)) * G;
    out.projection_active |= row_norm_project_inplace(L, radius);
    detail::observed_residuals(obs, L, R, res);

    // R block.
    G = mu * R;
    for (std::size_t k = 0; k < obs.size(); ++k)
      G.row(obs.col[k]) -= (c * obs.weight[k] * res[static_cast<Eigen::Index>(k)]) *
                           L.row(obs.row[k]);
    lip = c * w_max * detail::squared_spectral_norm(L) + mu;
    R -= (step / std::max(lip, 1e-300)) * G;
    out.projection_active |= row_norm_project_inplace(R, radius);
    detail::observed_residuals(obs, L, R, res);

    const double f_new = detail::objective_from_residuals(obs, res, L, R, mu, inv_n);
    out.objective_trace.push_back(f_new);
    out.iterations = it;
    if (!std::isfinite(f_new) || f_new > 1e6 * std::max(f0, 1e-300))
      throw NumericalFailure(
          "pgd_solve: objective diverged at iteration " + std::to_string(it) +
              "; try a smaller step",
          it);
    if (f_new < best_f) {
      best_f = f_new;
      best_L = L;
      best_R = R;
    }
    const bool increased = f_new > f;
    const double change = std::abs(f - f_new) / std::max(std::abs(f), 1e-300);
    f = f_new;
    if (increased) {
      step *= 0.5;
    } else if (change < config.tol) {
      out.converged = true;
      break;
    }
  }

  out.factors = {best_L, best_R};
  out.A_hat = out.factors.product();
  return out;
}

}  // namespace bmc
