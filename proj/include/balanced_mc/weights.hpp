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
#include <utility>
#include <vector>

#include "balanced_mc/linalg.hpp"
#include "balanced_mc/masked.hpp"

namespace bmc {

enum class WeightAlgorithm {
  /// Accelerated projected gradient on a smoothed spectral norm, with the
  /// smoothing level decreased in stages (default).
  kSmoothed,
  /// Projected subgradient descent against u1 v1^T o T + 2 kappa' T o W.
  kSubgradient,
};

enum class StepRule {
  kInverseSqrt,  ///< step0 / sqrt(k)
  kConstant,     ///< step0
};

struct WeightOptions {
  WeightAlgorithm algorithm = WeightAlgorithm::kSmoothed;
  int max_iter = 2000;
  /// Smoothed: the last stage runs at smoothing level tol * ||T - J||.
  /// Subgradient: relative improvement of the best objective required over
  /// `window` iterations before the step is halved.
  double tol = 1e-4;

  // Smoothed algorithm.
  /// First smoothing level as a fraction of ||T - J||.
  double smoothing0 = 0.05;
  /// Factor applied to the smoothing level between stages.
  double smoothing_decay = 0.3;
  int stage_iter = 200;
  /// Number of leading singular pairs entering the smoothed gradient.
  int smooth_pairs = 4;

  // Subgradient algorithm.
  int window = 20;
  StepRule step_rule = StepRule::kInverseSqrt;
  /// Length of the first normalized step, in units of sqrt(#observed).
  double step0 = 1.0;
  /// The solve stops once the step scale has been halved below this
  /// fraction of its initial value.
  double min_step_ratio = 1e-3;

  /// Large masks track the top of the spectrum with a warm-started block
  /// subspace iteration: `block` vectors, `subspace_iter` sweeps per step.
  int block = 24;
  int subspace_iter = 2;
  /// Masks with min(n1, n2) at or below this use an exact dense SVD.
  Eigen::Index dense_cutoff = 64;
};

struct WeightSolution {
  Matrix weights;  ///< W on observed positions, 0 elsewhere
  double kappa_prime = 0.0;
  double h_value = 0.0;  ///< ||T o W - J||
  double frob_tw = 0.0;  ///< ||T o W||_F
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// The operator T o W - J held as observed entries plus the all-ones shift.
class BalancingResidualOperator {
 public:
  BalancingResidualOperator(const ObservedEntries& obs, const Vector& w)
      : obs_(obs), w_(w) {}
  Eigen::Index rows() const { return obs_.rows; }
  Eigen::Index cols() const { return obs_.cols; }
  void apply(const Vector& x, Vector& y) const {
    y.setConstant(obs_.rows, -x.sum());
    for (std::size_t k = 0; k < obs_.size(); ++k)
      y[obs_.row[k]] += w_[k] * x[obs_.col[k]];
  }
  void apply_transpose(const Vector& x, Vector& y) const {
    y.setConstant(obs_.cols, -x.sum());
    for (std::size_t k = 0; k < obs_.size(); ++k)
      y[obs_.col[k]] += w_[k] * x[obs_.row[k]];
  }

 private:
  const ObservedEntries& obs_;
  const Vector& w_;
};

namespace detail {

inline Matrix scatter(const ObservedEntries& obs, const Vector& w,
                      double fill) {
  Matrix out = Matrix::Constant(obs.rows, obs.cols, fill);
  for (std::size_t k = 0; k < obs.size(); ++k)
    out(obs.row[k], obs.col[k]) = w[k];
  return out;
}

inline Matrix balancing_residual(const ObservedEntries& obs, const Vector& w) {
  Matrix x = Matrix::Constant(obs.rows, obs.cols, -1.0);
  for (std::size_t k = 0; k < obs.size(); ++k)
    x(obs.row[k], obs.col[k]) = w[k] - 1.0;
  return x;
}

/// Leading singular values (descending) and vectors of T o W - J.
struct LeadingSpectrum {
  Vector sigma;
  Matrix U;
  Matrix V;
};

/// Tracks the leading spectrum of T o W - J across iterations: an exact SVD
/// for small masks, otherwise a warm-started block subspace iteration with
/// Rayleigh-Ritz whose basis carries over between calls.
class SpectrumTracker {
 public:
  SpectrumTracker(const ObservedEntries& obs, const WeightOptions& opts)
      : obs_(obs),
        dense_(std::min(obs.rows, obs.cols) <= opts.dense_cutoff),
        block_(std::min<Eigen::Index>(std::max<Eigen::Index>(opts.block, 1),
                                      std::min(obs.rows, obs.cols))),
        sweeps_(std::max(opts.subspace_iter, 1)) {
    if (!dense_) {
      RngStream rng(CounterRng(0xb10cULL));
      basis_.resize(obs.cols, block_);
      for (Eigen::Index j = 0; j < block_; ++j)
        for (Eigen::Index i = 0; i < obs.cols; ++i)
          basis_(i, j) = rng.uniform(-1.0, 1.0);
      Eigen::HouseholderQR<Matrix> qr(basis_);
      basis_ = qr.householderQ() * Matrix::Identity(obs.cols, block_);
    }
  }

  LeadingSpectrum operator()(const Vector& w) {
    LeadingSpectrum out;
    if (dense_) {
      Eigen::BDCSVD<Matrix> svd(balancing_residual(obs_, w),
                                   Eigen::ComputeThinU | Eigen::ComputeThinV);
      out.sigma = svd.singularValues().head(block_);
      out.U = svd.matrixU().leftCols(block_);
      out.V = svd.matrixV().leftCols(block_);
      return out;
    }
    // Dense products: the GEMM kernels beat scattered row updates even at
    // moderate sampling rates.
    const Matrix X = balancing_residual(obs_, w);
    Matrix V = basis_;
    Matrix U(obs_.rows, block_);
    for (int s = 0; s < sweeps_; ++s) {
      U.noalias() = X * V;
      V.noalias() = X.transpose() * U;
      Eigen::HouseholderQR<Matrix> qr(V);
      V = qr.householderQ() * Matrix::Identity(obs_.cols, block_);
    }
    U.noalias() = X * V;
    // Rayleigh-Ritz through the small Gram matrix U^T U = Q diag(s^2) Q^T.
    Eigen::SelfAdjointEigenSolver<Matrix> eig(U.transpose() * U);
    const Matrix Q = eig.eigenvectors().rowwise().reverse();
    out.sigma = eig.eigenvalues().reverse().cwiseMax(0.0).cwiseSqrt();
    out.U = U * Q;
    for (Eigen::Index j = 0; j < block_; ++j)
      if (out.sigma[j] > 0.0) out.U.col(j) /= out.sigma[j];
    // Rotate the basis onto the Ritz vectors so the next warm start is
    // ordered.
    basis_ = V * Q;
    out.V = basis_;
    return out;
  }

 private:
  const ObservedEntries& obs_;
  bool dense_;
  Eigen::Index block_;
  int sweeps_;
  Matrix basis_;
};

inline double exact_objective(const ObservedEntries& obs, const Vector& w,
                              double kappa_prime) {
  return spectral_norm(balancing_residual(obs, w)) + kappa_prime * w.squaredNorm();
}

/// Projected subgradient with restarts from the best point at half the step
/// scale whenever the best objective stalls over a window.
inline Vector weights_subgradient(const ObservedEntries& obs, double kappa_prime,
                                  const WeightOptions& opts, WeightSolution& sol) {
  const auto n_obs = static_cast<Eigen::Index>(obs.size());
  SpectrumTracker spectrum(obs, opts);
  Vector w = Vector::Ones(n_obs);
  Vector best_w = w;
  double best_f = std::numeric_limits<double>::infinity();
  std::vector<double> best_trace;
  best_trace.reserve(static_cast<std::size_t>(opts.max_iter));

  const double scale0 = opts.step0 * std::sqrt(static_cast<double>(n_obs));
  double scale = scale0;
  int epoch_k = 1;
  int epoch_start = 0;
  Vector g(n_obs);

  for (int it = 0; it < opts.max_iter; ++it) {
    const LeadingSpectrum top = spectrum(w);
    const double sigma = top.sigma[0];
    const double f = sigma + kappa_prime * w.squaredNorm();
    if (f < best_f) {
      best_f = f;
      best_w = w;
    }
    best_trace.push_back(best_f);
    sol.iterations = it + 1;

    if (it - epoch_start >= opts.window) {
      const double before = best_trace[static_cast<std::size_t>(it - opts.window)];
      if (before - best_f <= opts.tol * std::max(1.0, std::abs(best_f))) {
        if (scale <= opts.min_step_ratio * scale0) {
          sol.converged = true;
          break;
        }
        scale *= 0.5;
        w = best_w;
        epoch_k = 1;
        epoch_start = it;
        continue;
      }
    }

    for (Eigen::Index k = 0; k < n_obs; ++k) {
      const double sub = sigma > 0.0 ? top.U(obs.row[k], 0) * top.V(obs.col[k], 0) : 0.0;
      g[k] = sub + 2.0 * kappa_prime * w[k];
    }
    const double gn = g.norm();
    if (gn == 0.0) {
      sol.converged = true;
      break;
    }
    const double step = opts.step_rule == StepRule::kInverseSqrt
                            ? scale / std::sqrt(static_cast<double>(epoch_k))
                            : scale;
    w = (w - (step / gn) * g).cwiseMax(1.0);
    ++epoch_k;
  }
  return best_w;
}

/// Accelerated projected gradient on
///   t log sum_i exp(sigma_i / t) + kappa' ||w||^2
/// over the leading singular values, for a decreasing sequence of smoothing
/// levels t. The smoothed term overestimates ||T o W - J|| by at most
/// t log(block). Gradient restarts reset the momentum.
inline Vector weights_smoothed(const ObservedEntries& obs, double kappa_prime,
                               const WeightOptions& opts, WeightSolution& sol) {
  const auto n_obs = static_cast<Eigen::Index>(obs.size());
  SpectrumTracker spectrum(obs, opts);
  Vector w = Vector::Ones(n_obs);
  const double h0 = spectral_norm(balancing_residual(obs, w));
  Vector best_w = w;
  double best_f = h0 + kappa_prime * w.squaredNorm();
  if (h0 == 0.0) {
    sol.converged = true;
    return best_w;
  }

  const double t_final = opts.tol * h0;
  double t = std::max(opts.smoothing0 * h0, t_final);
  Vector y = w, w_next(n_obs), g(n_obs);
  int it = 0;
  for (;;) {
    const double step = 1.0 / (1.0 / t + 2.0 * kappa_prime);
    double theta = 1.0;
    y = w;
    for (int k = 0; k < opts.stage_iter && it < opts.max_iter; ++k, ++it) {
      const LeadingSpectrum top = spectrum(y);
      const Eigen::Index m = std::min<Eigen::Index>(top.sigma.size(), std::max(opts.smooth_pairs, 1));
      Vector p = ((top.sigma.head(m).array() - top.sigma[0]) / t).exp();
      p /= p.sum();
      const Matrix Up = top.U.leftCols(m) * p.asDiagonal();
      for (Eigen::Index e = 0; e < n_obs; ++e)
        g[e] = Up.row(obs.row[e]).dot(top.V.row(obs.col[e]).head(m)) +
               2.0 * kappa_prime * y[e];
      w_next = (y - step * g).cwiseMax(1.0);
      const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
      if ((y - w_next).dot(w_next - w) > 0.0) {
        theta = 1.0;
        y = w_next;
      } else {
        y = w_next + ((theta - 1.0) / theta_next) * (w_next - w);
        theta = theta_next;
      }
      w.swap(w_next);
    }
    const double f = exact_objective(obs, w, kappa_prime);
    if (f < best_f) {
      best_f = f;
      best_w = w;
    }
    sol.iterations = it;
    if (t <= t_final) {
      sol.converged = true;
      break;
    }
    if (it >= opts.max_iter) break;
    t = std::max(t * opts.smoothing_decay, t_final);
  }
  return best_w;
}

}  // namespace detail

/// Weights W >= 1 on observed entries minimizing
///   ||T o W - J|| + kappa' ||T o W||_F^2
/// starting from W = J. The best iterate found is returned.
inline WeightSolution solve_weights(const MatrixRef& T, double kappa_prime,
                                    const WeightOptions& opts = {}) {
  validate_mask(T);
  if (!(kappa_prime >= 0) || !std::isfinite(kappa_prime))
    throw InvalidInput("solve_weights: kappa_prime must be finite and >= 0");
  if (opts.max_iter < 1 || opts.window < 1 || !(opts.tol > 0) || !(opts.step0 > 0) ||
      opts.stage_iter < 1 || !(opts.smoothing0 > 0) ||
      !(opts.smoothing_decay > 0 && opts.smoothing_decay < 1))
    throw InvalidInput("solve_weights: invalid options");

  const ObservedEntries obs = observed_entries(T);
  WeightSolution sol;
  sol.kappa_prime = kappa_prime;
  const Vector w = opts.algorithm == WeightAlgorithm::kSmoothed
                       ? detail::weights_smoothed(obs, kappa_prime, opts, sol)
                       : detail::weights_subgradient(obs, kappa_prime, opts, sol);
  sol.weights = detail::scatter(obs, w, 0.0);
  sol.h_value = spectral_norm(detail::balancing_residual(obs, w));
  sol.frob_tw = w.norm();
  sol.objective = sol.h_value + kappa_prime * w.squaredNorm();
  return sol;
}

/// Weights fixed at 1 on observed entries (uniform weighting).
inline Matrix unit_weights(const MatrixRef& T) { return T; }

struct ProfilePoint {
  double kappa_prime = 0.0;
  double h_value = 0.0;
  double frob_tw = 0.0;
};

struct BalancingProfile {
  std::vector<ProfilePoint> points;  ///< ascending in kappa_prime
  double h_max = 0.0;
  double h_min = 0.0;

  /// Fraction of balancing achieved at point i: (M - h_i) / (M - m).
  double percentage(std::size_t i) const {
    const double span = h_max - h_min;
    if (!(span > 0)) return 1.0;
    return (h_max - points.at(i).h_value) / span;
  }
};

/// 8 (by default) log-spaced points in [1e-6, 1e2] / (n1 n2).
inline std::vector<double> default_kappa_grid(Eigen::Index n1, Eigen::Index n2,
                                              int points = 8) {
  if (points < 1) throw InvalidInput("default_kappa_grid: points must be >= 1");
  const double scale = 1.0 / (static_cast<double>(n1) * static_cast<double>(n2));
  std::vector<double> grid;
  for (int i = 0; i < points; ++i) {
    const double e = points == 1 ? -6.0 : -6.0 + 8.0 * i / (points - 1);
    grid.push_back(std::pow(10.0, e) * scale);
  }
  return grid;
}

/// One weight solve per grid value; also returns the solutions themselves
/// through `solutions` when non-null.
inline BalancingProfile balancing_profile(
    const MatrixRef& T, const std::vector<double>& kappa_grid,
    const WeightOptions& opts = {},
    std::vector<WeightSolution>* solutions = nullptr) {
  if (kappa_grid.empty())
    throw InvalidInput("balancing_profile: empty kappa grid");
  if (!std::is_sorted(kappa_grid.begin(), kappa_grid.end()))
    throw InvalidInput("balancing_profile: kappa grid must be ascending");
  BalancingProfile profile;
  for (double kp : kappa_grid) {
    WeightSolution s = solve_weights(T, kp, opts);
    profile.points.push_back({kp, s.h_value, s.frob_tw});
    if (solutions) solutions->push_back(std::move(s));
  }
  const auto [lo, hi] = std::minmax_element(
      profile.points.begin(), profile.points.end(),
      [](const ProfilePoint& a, const ProfilePoint& b) {
        return a.h_value < b.h_value;
      });
  profile.h_min = lo->h_value;
  profile.h_max = hi->h_value;
  return profile;
}

struct PercentageChoice {
  double target = 0.0;
  double kappa_prime = 0.0;
  std::size_t index = 0;
};

/// For each target fraction, the grid point whose balancing percentage is
/// closest to it (ties go to the smaller kappa').
inline std::vector<PercentageChoice> select_by_percentage(
    const BalancingProfile& profile, const std::vector<double>& targets) {
  if (targets.empty()) throw InvalidInput("select_by_percentage: no targets");
  if (profile.points.empty())
    throw InvalidInput("select_by_percentage: empty profile");
  std::vector<PercentageChoice> out;
  const bool degenerate =
      profile.points.size() < 2 || !(profile.h_max > profile.h_min);
  for (double p : targets) {
    std::size_t best = 0;
    if (!degenerate) {
      double best_gap = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < profile.points.size(); ++i) {
        const double gap = std::abs(profile.percentage(i) - p);
        if (gap < best_gap) {
          best_gap = gap;
          best = i;
        }
      }
    }
    out.push_back({p, profile.points[best].kappa_prime, best});
  }
  return out;
}

/// S(W, D) = |<(T o W - J) o D, D>| / (n1 n2).
inline double balancing_error(const MatrixRef& W, const MatrixRef& T,
                              const MatrixRef& Delta) {
  require_same_shape(W, T, "balancing_error");
  require_same_shape(W, Delta, "balancing_error");
  const double n = static_cast<double>(W.size());
  const double s =
      ((T.cwiseProduct(W).array() - 1.0) * Delta.array().square()).sum();
  return std::abs(s) / n;
}

/// Uniform relaxed bound (n1 n2)^{-1/2} ||T o W - J|| beta'^2, which
/// dominates S(W, D) for every D with ||D||_max <= beta'.
inline double relaxed_bound(const MatrixRef& W, const MatrixRef& T,
                            double beta_prime) {
  require_same_shape(W, T, "relaxed_bound");
  if (!(beta_prime > 0)) throw InvalidInput("relaxed_bound: beta' must be > 0");
  const Matrix X = (T.cwiseProduct(W).array() - 1.0).matrix();
  const double h = top_singular_triplet(X).sigma;
  return h * beta_prime * beta_prime / std::sqrt(static_cast<double>(W.size()));
}

}  // namespace bmc
