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
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "balanced_mc/linalg.hpp"
#include "balanced_mc/masked.hpp"
#include "balanced_mc/objective.hpp"

namespace bmc {

struct AdmmConfig {
  double rho = 0.1;
  double tau = 1.618;
  double mu = 0.0;
  double beta = 1.0;
  int max_iter = 2000;
  /// Relative change of the objective (evaluated at Z12) between iterations.
  double tol = 1e-5;
  /// Use X <- Pi{Z + (V + mu I) / rho}, with the multiplier entering with a
  /// plus sign, instead of the exact minimizer of the augmented Lagrangian.
  bool plus_sign_x_update = false;

  void validate() const {
    if (!(rho > 0)) throw InvalidInput("AdmmConfig: rho must be > 0");
    if (!(tau > 0 && tau <= (1.0 + std::sqrt(5.0)) / 2.0))
      throw InvalidInput("AdmmConfig: tau must lie in (0, (1+sqrt 5)/2]");
    if (!(mu >= 0)) throw InvalidInput("AdmmConfig: mu must be >= 0");
    if (!(beta > 0)) throw InvalidInput("AdmmConfig: beta must be > 0");
    if (max_iter < 1) throw InvalidInput("AdmmConfig: max_iter must be >= 1");
    if (!(tol > 0)) throw InvalidInput("AdmmConfig: tol must be > 0");
  }
};

/// Lifted iterates. X, Z, V are symmetric of side n1 + n2; Z's upper-right
/// n1 x n2 block is the matrix estimate.
struct AdmmState {
  Matrix X;
  Matrix Z;
  Matrix V;
  std::vector<double> objective_trace;
  double primal_residual = 0.0;
  int iterations = 0;
};

struct AdmmResult {
  Matrix A_hat;
  AdmmState state;
  bool converged = false;
};

/// Entrywise map onto P_beta with the data-fit closed form on observed
/// entries of the off-diagonal block:
///   diagonal            -> clamp to [0, beta]
///   off-diagonal        -> clamp to [-beta, beta]
///   observed (i, n1+j)  -> clamp((Y W + rho C) / (W + rho), -beta, beta)
/// This is the exact minimizer over P_beta of
///   sum_obs W (Y - Z12)^2 + (rho / 2) ||Z - C||_F^2
/// for symmetric Z.
inline Matrix phi_project(const MatrixRef& C, const MatrixRef& T,
                          const MatrixRef& Y, const MatrixRef& W, double beta,
                          double rho) {
  const Eigen::Index n1 = Y.rows();
  const Eigen::Index n2 = Y.cols();
  const Eigen::Index n = n1 + n2;
  if (C.rows() != n || C.cols() != n)
    throw InvalidInput("phi_project: C must be (n1+n2)-square");
  require_same_shape(Y, T, "phi_project");
  require_same_shape(Y, W, "phi_project");
  require_finite(C, "phi_project");
  if (!(beta > 0) || !(rho > 0))
    throw InvalidInput("phi_project: beta and rho must be > 0");

  Matrix out(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      // Symmetrize the input entry pair before projecting.
      const double c = 0.5 * (C(i, j) + C(j, i));
      double z;
      if (i == j) {
        z = std::clamp(c, 0.0, beta);
      } else if (i < n1 && j >= n1 && T(i, j - n1) == 1.0) {
        const double w = W(i, j - n1);
        z = std::clamp((Y(i, j - n1) * w + rho * c) / (w + rho), -beta, beta);
      } else {
        z = std::clamp(c, -beta, beta);
      }
      out(i, j) = z;
      out(j, i) = z;
    }
  }
  return out;
}

/// Solves the hybrid estimator through its semidefinite lifting
///   min sum_obs W (Y - Z12)^2 + lambda tr(X)
///   s.t. X psd, X = Z, Z in P_beta,     lambda = mu n1 n2 / 2,
/// which is (n1 n2) times the hybrid objective because the minimal trace of
/// a psd lifting of A is 2 ||A||_*. rho acts on this scaled problem.
///
/// `observer`, when set, is called after every iteration.
inline AdmmResult admm_solve(
    const MatrixRef& Y, const MatrixRef& T, const MatrixRef& W,
    const AdmmConfig& config,
    const std::function<void(const AdmmState&)>& observer = {}) {
  config.validate();
  validate_fit_inputs(Y, T, W, "admm_solve");
  const Eigen::Index n1 = Y.rows();
  const Eigen::Index n2 = Y.cols();
  const Eigen::Index n = n1 + n2;
  const double lambda = config.mu * static_cast<double>(n1 * n2) / 2.0;
  const double rho = config.rho;
  const double sign = config.plus_sign_x_update ? 1.0 : -1.0;

  AdmmResult res;
  AdmmState& st = res.state;
  st.X = Matrix::Zero(n, n);
  st.Z = Matrix::Zero(n, n);
  st.V = Matrix::Zero(n, n);
  const Matrix shift = lambda * Matrix::Identity(n, n);
  const double residual_cap = 1e-3 * static_cast<double>(n);

  double prev = std::numeric_limits<double>::quiet_NaN();
  for (int it = 1; it <= config.max_iter; ++it) {
    const auto fail = [it] {
      return NumericalFailure(
          "admm_solve: non-finite iterate at iteration " + std::to_string(it), it);
    };
    const Matrix arg = st.Z + (sign / rho) * (st.V + shift);
    if (!arg.allFinite()) throw fail();
    st.X = psd_project(arg);
    const Matrix c = st.X + st.V / rho;
    if (!c.allFinite()) throw fail();
    st.Z = phi_project(c, T, Y, W, config.beta, rho);
    st.V += (config.tau * rho) * (st.X - st.Z);
    st.iterations = it;
    if (!st.V.allFinite()) throw fail();

    st.primal_residual = (st.X - st.Z).norm();
    const auto A = st.Z.topRightCorner(n1, n2);
    const double obj = weighted_data_fit(A, Y, T, W) +
                       (config.mu == 0.0 ? 0.0 : config.mu * nuclear_norm(A));
    st.objective_trace.push_back(obj);
    if (observer) observer(st);

    if (it > 1) {
      const double change = std::abs(obj - prev) / std::max(1.0, std::abs(prev));
      if (change < config.tol && st.primal_residual <= residual_cap) {
        res.converged = true;
        break;
      }
    }
    prev = obj;
  }
  res.A_hat = st.Z.topRightCorner(n1, n2);
  return res;
}

}  // namespace bmc
