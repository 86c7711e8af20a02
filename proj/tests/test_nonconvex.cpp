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


#include <gtest/gtest.h>

#include <cmath>

#include "balanced_mc/convex_solver.hpp"
#include "balanced_mc/experiments.hpp"
#include "balanced_mc/nonconvex_solver.hpp"
#include "test_util.hpp"

namespace bmc {
namespace {

using testing::random_mask;
using testing::random_matrix;
using testing::rel_frobenius;

FactorPair random_factors(Eigen::Index n1, Eigen::Index n2, Eigen::Index r,
                          std::uint64_t seed) {
  return {random_matrix(n1, r, seed), random_matrix(n2, r, seed + 1)};
}

double scalar_factored(const FactorPair& P, const Matrix& Y, const Matrix& T,
                       const Matrix& W, double mu) {
  double fit = 0.0;
  for (Eigen::Index i = 0; i < Y.rows(); ++i) {
    for (Eigen::Index j = 0; j < Y.cols(); ++j) {
      double a = 0.0;
      for (Eigen::Index k = 0; k < P.L.cols(); ++k) a += P.L(i, k) * P.R(j, k);
      fit += T(i, j) * W(i, j) * (Y(i, j) - a) * (Y(i, j) - a);
    }
  }
  double reg = 0.0;
  for (Eigen::Index k = 0; k < P.L.size(); ++k) reg += P.L.data()[k] * P.L.data()[k];
  for (Eigen::Index k = 0; k < P.R.size(); ++k) reg += P.R.data()[k] * P.R.data()[k];
  return fit / static_cast<double>(Y.size()) + 0.5 * mu * reg;
}

TEST(FactoredObjective, ZeroFactors) {
  const Matrix Y = random_matrix(4, 5, 1);
  const Matrix T = random_mask(4, 5, 0.5, 2);
  const Matrix W = random_matrix(4, 5, 3, 1, 3);
  const FactorPair P{Matrix::Zero(4, 2), Matrix::Zero(5, 2)};
  EXPECT_NEAR(factored_objective(P, Y, T, W, 0.0),
              (T.array() * W.array() * Y.array().square()).sum() / 20.0, 1e-14);
}

TEST(FactoredObjective, ExactFactorsGiveZero) {
  const FactorPair P = random_factors(5, 4, 2, 4);
  const Matrix Y = P.product();
  const Matrix J = Matrix::Ones(5, 4);
  EXPECT_NEAR(factored_objective(P, Y, J, J, 0.0), 0.0, 1e-28);
}

TEST(FactoredObjective, MatchesScalarLoop) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const FactorPair P = random_factors(4, 4, 3, 10 + 2 * s);
    const Matrix Y = random_matrix(4, 4, 40 + s, -2, 2);
    const Matrix T = random_mask(4, 4, 0.6, 60 + s);
    const Matrix W = random_matrix(4, 4, 80 + s, 1, 4);
    EXPECT_NEAR(factored_objective(P, Y, T, W, 0.2), scalar_factored(P, Y, T, W, 0.2), 1e-12);
  }
}

TEST(FactoredObjective, RejectsShapeMismatch) {
  const Matrix Y = random_matrix(4, 5, 5);
  const Matrix T = Matrix::Ones(4, 5);
  EXPECT_THROW(factored_objective({Matrix::Zero(3, 2), Matrix::Zero(5, 2)}, Y, T, T, 0.0),
               InvalidInput);
  EXPECT_THROW(factored_objective({Matrix::Zero(4, 2), Matrix::Zero(5, 3)}, Y, T, T, 0.0),
               InvalidInput);
}

TEST(FactoredObjective, InvariantUnderCommonRotation) {
  const FactorPair P = random_factors(6, 5, 3, 7);
  const Matrix Y = random_matrix(6, 5, 9);
  const Matrix T = random_mask(6, 5, 0.5, 10);
  const Matrix W = random_matrix(6, 5, 11, 1, 2);
  const double base = factored_objective(P, Y, T, W, 0.3);
  for (std::uint64_t s = 0; s < 10; ++s) {
    Eigen::HouseholderQR<Matrix> qr(random_matrix(3, 3, 100 + s));
    const Matrix Q = qr.householderQ();
    const FactorPair rotated{P.L * Q, P.R * Q};
    EXPECT_NEAR(factored_objective(rotated, Y, T, W, 0.3), base, 1e-10);
  }
}

TEST(FactoredGradient, MatchesCentralDifferences) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const FactorPair P = random_factors(7, 6, 3, 200 + 2 * s);
    const Matrix Y = random_matrix(7, 6, 400 + s, -3, 3);
    const Matrix T = random_mask(7, 6, 0.5, 500 + s);
    const Matrix W = random_matrix(7, 6, 600 + s, 1, 4);
    EXPECT_LT(gradient_check(P, Y, T, W, 0.1, 1e-5, s), 1e-5) << s;
  }
}

TEST(FactoredGradient, ResidualFreePointLeavesPenaltyGradient) {
  const FactorPair P = random_factors(5, 4, 2, 12);
  const Matrix Y = P.product();
  const Matrix T = random_mask(5, 4, 0.7, 13);
  const FactorPair g = factored_gradient(P, Y, T, T, 0.4);
  EXPECT_LT((g.L - 0.4 * P.L).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((g.R - 0.4 * P.R).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(FactoredGradient, ZeroFactorsGiveZeroGradient) {
  const Matrix Y = random_matrix(5, 4, 14);
  const Matrix T = Matrix::Ones(5, 4);
  const FactorPair g =
      factored_gradient({Matrix::Zero(5, 2), Matrix::Zero(4, 2)}, Y, T, T, 0.0);
  EXPECT_EQ(g.L.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(g.R.cwiseAbs().maxCoeff(), 0.0);
}

TEST(FactoredGradient, RejectsBadEps) {
  const FactorPair P = random_factors(3, 3, 1, 15);
  const Matrix J = Matrix::Ones(3, 3);
  EXPECT_THROW(gradient_check(P, J, J, J, 0.0, 0.0), InvalidInput);
  EXPECT_THROW(gradient_check(P, J, J, J, 0.0, 1e-2), InvalidInput);
}

TEST(PgdSolve, RecoversRankOneFullObservation) {
  const Matrix u = random_matrix(12, 1, 16, 0.5, 2);
  const Matrix v = random_matrix(9, 1, 17, 0.5, 2);
  const Matrix Y = u * v.transpose();
  const Matrix J = Matrix::Ones(12, 9);
  PgdConfig cfg;
  cfg.beta = 1e3;
  cfg.rank = 1;
  cfg.tol = 1e-12;
  cfg.max_iter = 20000;
  const auto res = pgd_solve(Y, J, J, cfg);
  EXPECT_LT(rel_frobenius(res.A_hat, Y), 1e-3);
}

TEST(PgdSolve, FullRankInterpolatesNoiselessData) {
  const Matrix Y = random_matrix(6, 5, 18, -1, 1);
  const Matrix J = Matrix::Ones(6, 5);
  PgdConfig cfg;
  cfg.beta = 1e6;
  cfg.rank = 5;
  cfg.tol = 1e-14;
  cfg.max_iter = 50000;
  const auto res = pgd_solve(Y, J, J, cfg);
  EXPECT_LT(res.objective_trace.back(), 1e-8);
}

TEST(PgdSolve, FactorsRespectRowNormRadius) {
  const auto inst = generate_instance(30, 30, 5, 1, 5.0, 19);
  for (bool literal : {false, true}) {
    PgdConfig cfg;
    cfg.beta = 0.5 * max_norm_upper_bound(inst.A_star);
    cfg.mu = 0.6 * mu_reference(inst.T, inst.T, inst.sigma_eps);
    cfg.rank = 8;
    cfg.literal_radius = literal;
    const auto res = pgd_solve(inst.Y, inst.T, inst.T, cfg);
    EXPECT_LE(max_row_norm(res.factors.L), cfg.radius() + 1e-12);
    EXPECT_LE(max_row_norm(res.factors.R), cfg.radius() + 1e-12);
    EXPECT_TRUE(res.projection_active);
    if (!literal) EXPECT_LE(res.A_hat.cwiseAbs().maxCoeff(), cfg.beta + 1e-9);
  }
}

TEST(PgdSolve, ReturnsBestIterate) {
  const auto inst = generate_instance(20, 20, 3, 2, 5.0, 20);
  PgdConfig cfg;
  cfg.beta = max_norm_upper_bound(inst.A_star);
  cfg.mu = 0.5 * mu_reference(inst.T, inst.T, inst.sigma_eps);
  cfg.rank = 6;
  cfg.step = 3.0;
  const auto res = pgd_solve(inst.Y, inst.T, inst.T, cfg);
  double best = res.objective_trace.front();
  for (double f : res.objective_trace) best = std::min(best, f);
  EXPECT_NEAR(factored_objective(res.factors, inst.Y, inst.T, inst.T, cfg.mu), best,
              1e-12 * std::max(1.0, best));
  EXPECT_EQ(res.A_hat, res.factors.product());
}

TEST(PgdSolve, InactiveProjectionIsReported) {
  const Matrix Y = random_matrix(8, 7, 21, -0.1, 0.1);
  const Matrix J = Matrix::Ones(8, 7);
  PgdConfig cfg;
  cfg.beta = 1e6;
  cfg.rank = 2;
  EXPECT_FALSE(pgd_solve(Y, J, J, cfg).projection_active);
}

TEST(PgdSolve, DivergenceRaisesNumericalFailure) {
  const auto inst = generate_instance(20, 20, 3, 1, 5.0, 22);
  PgdConfig cfg;
  cfg.beta = 1e6;
  cfg.rank = 4;
  cfg.step = 500.0;
  try {
    pgd_solve(inst.Y, inst.T, inst.T, cfg);
    FAIL() << "expected NumericalFailure";
  } catch (const NumericalFailure& e) {
    EXPECT_GE(e.iteration(), 1);
  }
}

TEST(PgdSolve, RejectsInvalidConfig) {
  const Matrix Y = random_matrix(4, 3, 23);
  const Matrix J = Matrix::Ones(4, 3);
  PgdConfig cfg;
  cfg.rank = 4;
  EXPECT_THROW(pgd_solve(Y, J, J, cfg), InvalidInput);
  cfg = {};
  cfg.step = 0.0;
  EXPECT_THROW(pgd_solve(Y, J, J, cfg), InvalidInput);
  cfg = {};
  EXPECT_THROW(pgd_solve(Y, J, J, cfg, FactorPair{Matrix::Zero(4, 2), Matrix::Zero(3, 2)}),
               InvalidInput);
}

// At matched (W, beta, mu) the factored problem with enough rank reaches the
// convex optimum, and the convex solver is never worse.
TEST(PgdSolve, AgreesWithAdmmOnSmallInstance) {
  const auto inst = generate_instance(30, 30, 5, 1, 5.0, 24);
  const double beta = max_norm_upper_bound(inst.A_star);
  const double mu = 0.6 * mu_reference(inst.T, inst.T, inst.sigma_eps);
  AdmmConfig ac;
  ac.beta = beta;
  ac.mu = mu;
  ac.max_iter = 20000;
  ac.tol = 1e-9;
  const auto admm = admm_solve(inst.Y, inst.T, inst.T, ac);
  PgdConfig pc;
  pc.beta = beta;
  pc.mu = mu;
  pc.rank = 15;
  pc.step = 3.0;
  pc.tol = 1e-10;
  pc.max_iter = 50000;
  const auto pgd = pgd_solve(inst.Y, inst.T, inst.T, pc);
  const double f_admm = hybrid_objective(admm.A_hat, inst.Y, inst.T, inst.T, mu);
  const double f_pgd = factored_objective(pgd.factors, inst.Y, inst.T, inst.T, mu);
  EXPECT_LE(std::abs(f_admm - f_pgd), 5e-3);
  EXPECT_LE(f_admm, hybrid_objective(pgd.A_hat, inst.Y, inst.T, inst.T, mu) + 1e-3);
}

}  // namespace
}  // namespace bmc
