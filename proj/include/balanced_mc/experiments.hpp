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
#include <cstdint>
#include <cstdlib>
#include <iomanip>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "balanced_mc/convex_solver.hpp"
#include "balanced_mc/linalg.hpp"
#include "balanced_mc/masked.hpp"
#include "balanced_mc/nonconvex_solver.hpp"
#include "balanced_mc/random.hpp"
#include "balanced_mc/weights.hpp"

namespace bmc {

// ---------------------------------------------------------------------------
// Synthetic data

enum class SnrCalibration {
  kAnalytic,  ///< sigma from E||A*||_F^2 under Uniform[0,2] factors
  kRealized,  ///< sigma from the realized ||A*||_F
};

struct SyntheticInstance {
  Matrix A_star;
  Matrix Pi;
  Matrix Y;  ///< A_star + noise on every entry
  Matrix T;
  std::uint64_t seed = 0;
  int setting = 1;
  int rank = 1;
  double snr = 1.0;
  double sigma_eps = 1.0;
};

/// Per-entry signal power E[A_ij^2] for A = U V^T with r Uniform[0,2]
/// columns: r E[u^2] E[v^2] + r (r - 1) (E[u] E[v])^2.
inline double expected_entry_power(int r) {
  const double rr = static_cast<double>(r);
  return rr * (4.0 / 3.0) * (4.0 / 3.0) + rr * (rr - 1.0);
}

/// Type-7 (linear interpolation) quantile of an ascending sample.
inline double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw InvalidInput("quantile: empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Observation probabilities for the three missingness designs. Settings 2
/// and 3 key on the empirical quartiles of A*: setting 2 observes large
/// entries more often, setting 3 less often.
inline Matrix observation_probabilities(const MatrixRef& A_star, int setting) {
  if (setting < 1 || setting > 3)
    throw InvalidInput("observation_probabilities: setting must be 1, 2 or 3");
  if (setting == 1) return Matrix::Constant(A_star.rows(), A_star.cols(), 0.25);
  std::vector<double> v(A_star.data(), A_star.data() + A_star.size());
  std::sort(v.begin(), v.end());
  const double q25 = quantile_sorted(v, 0.25);
  const double q75 = quantile_sorted(v, 0.75);
  const double low = setting == 2 ? 1.0 / 16.0 : 7.0 / 16.0;
  const double high = setting == 2 ? 7.0 / 16.0 : 1.0 / 16.0;
  return A_star.unaryExpr([&](double a) {
    if (a <= q25) return low;
    if (a <= q75) return 0.25;
    return high;
  });
}

/// Draw order on the counter stream keyed by `seed`: U (n1 x r, row-major),
/// V (n2 x r, row-major), noise (n1 x n2, row-major, two counters each),
/// then the Bernoulli mask (n1 x n2, row-major).
inline SyntheticInstance generate_instance(
    Eigen::Index n1, Eigen::Index n2, int r, int setting, double snr,
    std::uint64_t seed, SnrCalibration calibration = SnrCalibration::kAnalytic) {
  if (n1 < 1 || n2 < 1) throw InvalidInput("generate_instance: empty shape");
  if (r < 1 || r > std::min(n1, n2))
    throw InvalidInput("generate_instance: rank must lie in [1, min(n1, n2)]");
  if (setting < 1 || setting > 3)
    throw InvalidInput("generate_instance: setting must be 1, 2 or 3");
  if (!(snr > 0) || !std::isfinite(snr))
    throw InvalidInput("generate_instance: snr must be positive");

  RngStream rng{CounterRng(seed)};
  Matrix U(n1, r), V(n2, r);
  for (Eigen::Index i = 0; i < n1; ++i)
    for (int k = 0; k < r; ++k) U(i, k) = rng.uniform(0.0, 2.0);
  for (Eigen::Index i = 0; i < n2; ++i)
    for (int k = 0; k < r; ++k) V(i, k) = rng.uniform(0.0, 2.0);

  SyntheticInstance inst;
  inst.seed = seed;
  inst.setting = setting;
  inst.rank = r;
  inst.snr = snr;
  inst.A_star = U * V.transpose();
  inst.sigma_eps =
      calibration == SnrCalibration::kAnalytic
          ? std::sqrt(expected_entry_power(r)) / snr
          : inst.A_star.norm() /
                (snr * std::sqrt(static_cast<double>(n1 * n2)));

  inst.Y.resize(n1, n2);
  for (Eigen::Index i = 0; i < n1; ++i)
    for (Eigen::Index j = 0; j < n2; ++j)
      inst.Y(i, j) = inst.A_star(i, j) + inst.sigma_eps * rng.normal();

  inst.Pi = observation_probabilities(inst.A_star, setting);
  inst.T.resize(n1, n2);
  for (Eigen::Index i = 0; i < n1; ++i)
    for (Eigen::Index j = 0; j < n2; ++j)
      inst.T(i, j) = rng.uniform() < inst.Pi(i, j) ? 1.0 : 0.0;
  return inst;
}

/// Upper bound on ||A||_max from the balanced SVD factorization
/// (P sqrt(S), Q sqrt(S)).
inline double max_norm_upper_bound(const MatrixRef& A) {
  Eigen::BDCSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector s = svd.singularValues().cwiseSqrt();
  return max_row_norm(svd.matrixU() * s.asDiagonal()) *
         max_row_norm(svd.matrixV() * s.asDiagonal());
}

/// sqrt(2 sum 1/pi_ij), the weight-norm level at which inverse
/// probabilities become feasible with high probability.
inline double kappa_oracle(const MatrixRef& Pi) {
  require_finite(Pi, "kappa_oracle");
  if ((Pi.array() <= 0.0).any() || (Pi.array() > 1.0).any())
    throw InvalidInput("kappa_oracle: probabilities must lie in (0, 1]");
  return std::sqrt(2.0 * Pi.cwiseInverse().sum());
}

/// Holds out floor(frac * N) observed entries, chosen uniformly without
/// replacement. Returns (train, validation).
inline std::pair<Matrix, Matrix> split_validation(const MatrixRef& T,
                                                  double frac,
                                                  std::uint64_t seed) {
  validate_mask(T, false);
  if (!(frac > 0 && frac < 1))
    throw InvalidInput("split_validation: frac must lie in (0, 1)");
  const ObservedEntries obs = observed_entries(T);
  const std::size_t n = obs.size();
  if (n < 2)
    throw InvalidInput("split_validation: need at least 2 observed entries");
  const auto k = static_cast<std::size_t>(std::floor(frac * static_cast<double>(n)));

  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  RngStream rng{CounterRng(seed ^ 0x76616c69646174ULL)};
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  Matrix train = T;
  Matrix val = Matrix::Zero(T.rows(), T.cols());
  for (std::size_t i = 0; i < k; ++i) {
    train(obs.row[idx[i]], obs.col[idx[i]]) = 0.0;
    val(obs.row[idx[i]], obs.col[idx[i]]) = 1.0;
  }
  return {std::move(train), std::move(val)};
}

// ---------------------------------------------------------------------------
// Metrics

/// ||A_hat - A*||_F / sqrt(n1 n2)
inline double rmse(const MatrixRef& A_hat, const MatrixRef& A_star) {
  require_same_shape(A_hat, A_star, "rmse");
  return (A_hat - A_star).norm() / std::sqrt(static_cast<double>(A_hat.size()));
}

/// RMSE restricted to unobserved entries.
inline double test_error(const MatrixRef& A_hat, const MatrixRef& A_star,
                         const MatrixRef& T) {
  require_same_shape(A_hat, A_star, "test_error");
  require_same_shape(A_hat, T, "test_error");
  validate_mask(T, false);
  const double missing = static_cast<double>(T.size() - observed_count(T));
  if (missing <= 0) throw InvalidInput("test_error: mask is fully observed");
  const double ss =
      ((1.0 - T.array()) * (A_hat - A_star).array().square()).sum();
  return std::sqrt(ss / missing);
}

/// Unweighted RMSE of A_hat against Y over the entries selected by `mask`.
inline double masked_rmse(const MatrixRef& A_hat, const MatrixRef& Y,
                          const MatrixRef& mask) {
  const double n = mask.sum();
  if (!(n > 0)) throw InvalidInput("masked_rmse: empty mask");
  return std::sqrt((mask.array() * (A_hat - Y).array().square()).sum() / n);
}

struct Rating {
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  double value = 0.0;

  friend bool operator==(const Rating&, const Rating&) = default;
};

struct TestErrors {
  double trmse = 0.0;
  double tmae = 0.0;
};

inline TestErrors trmse_tmae(const MatrixRef& A_hat,
                             std::span<const Rating> eval) {
  if (eval.empty()) throw InvalidInput("trmse_tmae: empty evaluation set");
  double ss = 0.0, sa = 0.0;
  for (const Rating& e : eval) {
    if (e.row < 0 || e.row >= A_hat.rows() || e.col < 0 || e.col >= A_hat.cols())
      throw InvalidInput("trmse_tmae: rating index out of bounds");
    const double d = A_hat(e.row, e.col) - e.value;
    ss += d * d;
    sa += std::abs(d);
  }
  const double n = static_cast<double>(eval.size());
  return {std::sqrt(ss / n), sa / n};
}

// ---------------------------------------------------------------------------
// Tuning

enum class SolverKind { kAdmm, kPgd };
enum class Method {
  kProposed,  ///< balancing weights
  kUniform,   ///< W = 1 on observed entries
};

inline std::string to_string(Method m) {
  return m == Method::kProposed ? "proposed" : "uniform";
}
inline std::string to_string(SolverKind s) {
  return s == SolverKind::kAdmm ? "admm" : "pgd";
}

enum class MuScale {
  kAbsolute,
  /// mu = multiplier * (2 / n1 n2) * sigma * rms(T o W) * (sqrt n1 + sqrt n2),
  /// the level of the weighted noise's spectral norm in gradient units.
  kNoiseLevel,
};

struct TuningGrids {
  std::vector<double> beta;
  std::vector<double> mu;
  std::vector<double> balancing_pcts{1.0, 0.75, 0.5};
  MuScale mu_scale = MuScale::kAbsolute;
  double noise_sigma = 1.0;  ///< used by MuScale::kNoiseLevel
};

struct FitOptions {
  Method method = Method::kProposed;
  SolverKind solver = SolverKind::kPgd;
  AdmmConfig admm;  ///< beta and mu are overwritten per grid point
  PgdConfig pgd;    ///< beta and mu are overwritten per grid point
  WeightOptions weights;
  std::vector<double> kappa_grid;  ///< empty: default_kappa_grid
  double val_frac = 0.2;
  std::uint64_t split_seed = 0;
  double rank_tol = 1e-4;
};

struct ChosenParams {
  double beta = 0.0;
  double mu = 0.0;  ///< absolute mu used for the final fit
  double mu_multiplier = 0.0;
  std::optional<double> kappa_prime;
  std::optional<double> balancing_pct;
};

struct EvaluationReport {
  std::optional<double> rmse;
  std::optional<double> te;
  std::optional<double> trmse;
  std::optional<double> tmae;
  int est_rank = 0;
  ChosenParams chosen;
  std::uint64_t replicate_seed = 0;
};

struct GridScore {
  double beta = 0.0;
  double mu = 0.0;
  double mu_multiplier = 0.0;
  std::optional<double> kappa_prime;
  std::optional<double> balancing_pct;
  double val_rmse = 0.0;
};

struct FitProblem {
  Matrix Y;  ///< values; only observed entries are read
  Matrix T;  ///< observed entries available for fitting
  /// Explicit validation subset of T; split from T when absent.
  std::optional<Matrix> validation;
};

struct TuneResult {
  Matrix A_hat;
  Matrix weights;  ///< weights used in the final fit
  EvaluationReport report;
  std::vector<GridScore> scores;
  std::optional<BalancingProfile> profile;
};

inline double mu_reference(const MatrixRef& T, const MatrixRef& W,
                           double sigma) {
  const double n1 = static_cast<double>(T.rows());
  const double n2 = static_cast<double>(T.cols());
  const double rms = std::sqrt((T.array() * W.array().square()).sum() / (n1 * n2));
  return 2.0 / (n1 * n2) * sigma * rms * (std::sqrt(n1) + std::sqrt(n2));
}

namespace detail {

struct WeightCandidate {
  Matrix W;
  std::optional<double> kappa_prime;
  std::optional<double> pct;
};

struct SingleFit {
  Matrix A;
  /// The same fit would result for every larger beta (PGD whose projection
  /// never rescaled a row).
  bool beta_inactive = false;
};

/// Fits one (W, beta, mu) point. PGD starts from `init`'s spectral factors.
inline SingleFit fit_one(const MatrixRef& Y, const MatrixRef& T,
                         const MatrixRef& W, double beta, double mu,
                         const FitOptions& opts, const SpectralInit* init) {
  if (opts.solver == SolverKind::kAdmm) {
    AdmmConfig cfg = opts.admm;
    cfg.beta = beta;
    cfg.mu = mu;
    return {admm_solve(Y, T, W, cfg).A_hat, false};
  }
  PgdConfig cfg = opts.pgd;
  cfg.beta = beta;
  cfg.mu = mu;
  std::optional<FactorPair> start;
  if (init) start = init->factors(cfg.radius());
  PgdResult r = pgd_solve(Y, T, W, cfg, start);
  return {std::move(r.A_hat), !r.projection_active};
}

inline std::string grid_context(double beta, double mu,
                                const std::optional<double>& kp) {
  std::ostringstream os;
  os << "grid point (beta=" << beta << ", mu=" << mu;
  if (kp) os << ", kappa'=" << *kp;
  os << ")";
  return os.str();
}

}  // namespace detail

/// Grid search on a held-out part of the observed entries, then a refit on
/// all observed entries with the winning parameters. The winner minimizes
/// validation RMSE; ties go to smaller mu, then beta, then kappa'.
inline TuneResult tune_and_fit(const FitProblem& problem,
                               const TuningGrids& grids,
                               const FitOptions& opts) {
  if (grids.beta.empty() || grids.mu.empty())
    throw InvalidInput("tune_and_fit: beta and mu grids must be nonempty");
  if (opts.method == Method::kProposed && grids.balancing_pcts.empty())
    throw InvalidInput("tune_and_fit: balancing percentage grid is empty");
  require_same_shape(problem.Y, problem.T, "tune_and_fit");
  validate_mask(problem.T);

  Matrix train, val;
  if (problem.validation) {
    require_same_shape(problem.T, *problem.validation, "tune_and_fit");
    val = *problem.validation;
    if (((val.array() == 1.0) && (problem.T.array() != 1.0)).any())
      throw InvalidInput("tune_and_fit: validation entries must be observed");
    train = problem.T - val;
  } else {
    std::tie(train, val) = split_validation(problem.T, opts.val_frac, opts.split_seed);
  }
  validate_mask(train);
  if (observed_count(val) == 0)
    throw InvalidInput("tune_and_fit: empty validation set");

  TuneResult out;
  const auto kappa_grid = opts.kappa_grid.empty()
                              ? default_kappa_grid(train.rows(), train.cols())
                              : opts.kappa_grid;

  std::vector<detail::WeightCandidate> candidates;
  if (opts.method == Method::kUniform) {
    candidates.push_back({unit_weights(train), std::nullopt, std::nullopt});
  } else {
    std::vector<WeightSolution> sols;
    out.profile = balancing_profile(train, kappa_grid, opts.weights, &sols);
    // Several targets can select the same grid point; fit it once, labelled
    // with the first target that chose it.
    std::vector<std::size_t> seen;
    for (const auto& c : select_by_percentage(*out.profile, grids.balancing_pcts)) {
      if (std::find(seen.begin(), seen.end(), c.index) != seen.end()) continue;
      seen.push_back(c.index);
      candidates.push_back({sols[c.index].weights, c.kappa_prime, c.target});
    }
  }

  auto absolute_mu = [&](double m, const MatrixRef& T, const MatrixRef& W) {
    return grids.mu_scale == MuScale::kAbsolute
               ? m
               : m * mu_reference(T, W, grids.noise_sigma);
  };

  const GridScore* best = nullptr;
  auto better = [](const GridScore& a, const GridScore& b) {
    const double ka = a.kappa_prime.value_or(0.0);
    const double kb = b.kappa_prime.value_or(0.0);
    return std::tie(a.val_rmse, a.mu, a.beta, ka) <
           std::tie(b.val_rmse, b.mu, b.beta, kb);
  };
  std::vector<double> betas = grids.beta;
  std::sort(betas.begin(), betas.end());
  betas.erase(std::unique(betas.begin(), betas.end()), betas.end());
  out.scores.reserve(candidates.size() * betas.size() * grids.mu.size());
  for (const auto& cand : candidates) {
    std::optional<SpectralInit> init;
    if (opts.solver == SolverKind::kPgd)
      init.emplace(problem.Y, train, cand.W, opts.pgd.rank);
    for (double m : grids.mu) {
      const double mu = absolute_mu(m, train, cand.W);
      // Ascending beta: once a fit never touched the constraint, larger
      // radii reproduce it exactly.
      bool inactive = false;
      for (double beta : betas) {
        double score;
        if (inactive) {
          score = out.scores.back().val_rmse;
        } else {
          detail::SingleFit fit;
          try {
            fit = detail::fit_one(problem.Y, train, cand.W, beta, mu, opts,
                                  init ? &*init : nullptr);
          } catch (const std::exception& e) {
            throw NumericalFailure(
                detail::grid_context(beta, mu, cand.kappa_prime) + ": " + e.what());
          }
          score = masked_rmse(fit.A, problem.Y, val);
          inactive = fit.beta_inactive;
        }
        out.scores.push_back({beta, mu, m, cand.kappa_prime, cand.pct, score});
      }
    }
  }
  for (const auto& s : out.scores)
    if (best == nullptr || better(s, *best)) best = &s;

  // Refit on every observed entry.
  ChosenParams& chosen = out.report.chosen;
  chosen.beta = best->beta;
  chosen.mu_multiplier = best->mu_multiplier;
  chosen.kappa_prime = best->kappa_prime;
  chosen.balancing_pct = best->balancing_pct;
  out.weights = opts.method == Method::kUniform
                    ? unit_weights(problem.T)
                    : solve_weights(problem.T, *best->kappa_prime, opts.weights).weights;
  chosen.mu = absolute_mu(best->mu_multiplier, problem.T, out.weights);
  std::optional<SpectralInit> init;
  if (opts.solver == SolverKind::kPgd)
    init.emplace(problem.Y, problem.T, out.weights, opts.pgd.rank);
  try {
    out.A_hat = detail::fit_one(problem.Y, problem.T, out.weights, chosen.beta,
                                chosen.mu, opts, init ? &*init : nullptr)
                    .A;
  } catch (const std::exception& e) {
    throw NumericalFailure("refit " +
                           detail::grid_context(chosen.beta, chosen.mu,
                                                chosen.kappa_prime) +
                           ": " + e.what());
  }
  out.report.est_rank = estimate_rank(out.A_hat, opts.rank_tol);
  return out;
}

// ---------------------------------------------------------------------------
// Replications

/// Per-instance grid construction for simulations: beta values are
/// multiples of an upper bound on ||A*||_max, mu values are multiples of the
/// noise-level reference (using the instance's sigma).
struct GridRecipe {
  std::vector<double> beta_multipliers{0.8, 1.0, 1.25};
  std::vector<double> mu_multipliers{0.25, 0.5, 1.0, 2.0, 4.0};
  std::vector<double> balancing_pcts{1.0, 0.75, 0.5};

  TuningGrids grids_for(const SyntheticInstance& inst) const {
    TuningGrids g;
    const double b = max_norm_upper_bound(inst.A_star);
    for (double m : beta_multipliers) g.beta.push_back(m * b);
    g.mu = mu_multipliers;
    g.mu_scale = MuScale::kNoiseLevel;
    g.noise_sigma = inst.sigma_eps;
    g.balancing_pcts = balancing_pcts;
    return g;
  }
};

/// Solver settings used for the simulation tables: PGD with a rank budget of
/// 50, well above the rank the tuned convex estimator settles at, and steps
/// at three times the inverse Lipschitz bound.
inline FitOptions simulation_fit_options() {
  FitOptions f;
  f.solver = SolverKind::kPgd;
  f.pgd.rank = 50;
  f.pgd.step = 3.0;
  return f;
}

struct ReplicationSpec {
  int setting = 1;
  double snr = 5.0;
  Eigen::Index n1 = 200;
  Eigen::Index n2 = 200;
  int rank = 5;
  int n_reps = 1;
  std::uint64_t base_seed = 0;
  std::vector<Method> methods{Method::kProposed};
  GridRecipe recipe;
  FitOptions fit = simulation_fit_options();  ///< method set per entry of `methods`
  SnrCalibration calibration = SnrCalibration::kAnalytic;
  /// 0: BALANCED_MC_THREADS if set, else hardware concurrency.
  int threads = 0;
};

struct MetricSummary {
  double mean = 0.0;
  double se = 0.0;
};

inline MetricSummary summarize(std::span<const double> xs) {
  MetricSummary s;
  if (xs.empty()) return s;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) s.mean += x;
  s.mean /= n;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return s;
}

struct MethodSummary {
  Method method = Method::kProposed;
  MetricSummary rmse;
  MetricSummary te;
  MetricSummary rank;
  std::vector<EvaluationReport> replicates;  ///< ordered by seed
};

struct ReplicationSummary {
  int setting = 1;
  double snr = 0.0;
  std::vector<MethodSummary> methods;
};

inline int replicate_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("BALANCED_MC_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Generates, tunes and scores one instance for one method. The PGD rank is
/// capped at min(n1, n2).
inline EvaluationReport run_replicate(const ReplicationSpec& spec, Method method,
                                      std::uint64_t seed) {
  const SyntheticInstance inst = generate_instance(
      spec.n1, spec.n2, spec.rank, spec.setting, spec.snr, seed, spec.calibration);
  FitOptions fit = spec.fit;
  fit.method = method;
  fit.split_seed = seed;
  fit.pgd.rank = static_cast<int>(
      std::min<Eigen::Index>(fit.pgd.rank, std::min(spec.n1, spec.n2)));
  const TuneResult tr =
      tune_and_fit({inst.Y, inst.T, std::nullopt}, spec.recipe.grids_for(inst), fit);
  EvaluationReport rep = tr.report;
  rep.rmse = rmse(tr.A_hat, inst.A_star);
  rep.te = test_error(tr.A_hat, inst.A_star, inst.T);
  rep.replicate_seed = seed;
  return rep;
}

/// Replicate i uses seed base_seed + i. Replicates may run on several
/// threads; each result lands in its own slot, so the summary does not
/// depend on scheduling.
inline ReplicationSummary run_replications(const ReplicationSpec& spec) {
  if (spec.n_reps < 1) throw InvalidInput("run_replications: n_reps must be >= 1");
  if (spec.methods.empty()) throw InvalidInput("run_replications: no methods");
  const std::size_t n_methods = spec.methods.size();
  const std::size_t jobs = n_methods * static_cast<std::size_t>(spec.n_reps);
  std::vector<EvaluationReport> results(jobs);
  std::vector<std::exception_ptr> errors(jobs);

  auto work = [&](std::size_t job) {
    const std::size_t m = job / static_cast<std::size_t>(spec.n_reps);
    const std::size_t i = job % static_cast<std::size_t>(spec.n_reps);
    try {
      results[job] = run_replicate(spec, spec.methods[m], spec.base_seed + i);
    } catch (...) {
      errors[job] = std::current_exception();
    }
  };

  const auto threads = static_cast<std::size_t>(
      std::min<int>(replicate_threads(spec.threads), static_cast<int>(jobs)));
  if (threads <= 1) {
    for (std::size_t j = 0; j < jobs; ++j) work(j);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t j = t; j < jobs; j += threads) work(j);
      });
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  ReplicationSummary summary;
  summary.setting = spec.setting;
  summary.snr = spec.snr;
  for (std::size_t m = 0; m < n_methods; ++m) {
    MethodSummary ms;
    ms.method = spec.methods[m];
    std::vector<double> r, te, rk;
    for (int i = 0; i < spec.n_reps; ++i) {
      const auto& rep = results[m * static_cast<std::size_t>(spec.n_reps) +
                                static_cast<std::size_t>(i)];
      r.push_back(*rep.rmse);
      te.push_back(*rep.te);
      rk.push_back(rep.est_rank);
      ms.replicates.push_back(rep);
    }
    ms.rmse = summarize(r);
    ms.te = summarize(te);
    ms.rank = summarize(rk);
    summary.methods.push_back(std::move(ms));
  }
  return summary;
}

inline std::string summary_csv(const ReplicationSummary& s) {
  std::ostringstream os;
  os << "method,setting,snr,mean_rmse,se_rmse,mean_te,se_te,mean_rank,se_rank\n";
  os << std::fixed;
  for (const auto& m : s.methods) {
    os << to_string(m.method) << ',' << s.setting << ',' << std::setprecision(6)
       << s.snr << ',' << std::setprecision(6) << m.rmse.mean << ','
       << m.rmse.se << ',' << m.te.mean << ',' << m.te.se << ','
       << m.rank.mean << ',' << m.rank.se << '\n';
  }
  return os.str();
}

/// Aligned text layout: "Method  RMSE  TE  r" with standard errors in
/// parentheses.
inline std::string summary_table(const ReplicationSummary& s) {
  auto cell = [](const MetricSummary& m, int digits) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << m.mean << '('
       << std::setprecision(3) << m.se << ')';
    return os.str();
  };
  std::ostringstream os;
  os << "Setting " << s.setting << ", SNR = " << s.snr << '\n';
  os << std::left << std::setw(10) << "Method" << std::setw(16) << "RMSE"
     << std::setw(16) << "TE" << "r\n";
  for (const auto& m : s.methods)
    os << std::left << std::setw(10) << to_string(m.method) << std::setw(16)
       << cell(m.rmse, 3) << std::setw(16) << cell(m.te, 3)
       << cell(m.rank, 3) << '\n';
  return os.str();
}

}  // namespace bmc
