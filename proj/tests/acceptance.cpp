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


// Acceptance gate: runs every criterion at its stated tolerance and prints
// one PASS/FAIL line per criterion. Arguments select a subset by number.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "balanced_mc.hpp"
#include "balanced_mc/cli.hpp"
#include "test_util.hpp"
#include "weight_oracle.hpp"

namespace {

using namespace bmc;
using testing::random_mask;
using testing::random_matrix;

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [violated]");
  }
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

bool within(double x, double lo, double hi) { return x >= lo && x <= hi; }

std::string bracket(const char* name, double x, double lo, double hi) {
  return std::string(name) + "=" + fmt("%.4f", x) + " in [" + fmt("%.3f", lo) + ", " +
         fmt("%.3f", hi) + "]";
}

// ---------------------------------------------------------------------------
// Simulation tables (criteria 1-4). Each (setting, snr) row is run once and
// shared between criteria.

constexpr int kReps = 20;
constexpr std::uint64_t kTableSeed = 1;

struct TableRow {
  double proposed = 0.0, proposed_te = 0.0, uniform = 0.0;
  bool have_uniform = false;
};

TableRow run_row(int setting, double snr, bool with_uniform) {
  ReplicationSpec spec;
  spec.setting = setting;
  spec.snr = snr;
  spec.n1 = spec.n2 = 200;
  spec.rank = 5;
  spec.n_reps = kReps;
  spec.base_seed = kTableSeed;
  spec.methods = {Method::kProposed};
  if (with_uniform) spec.methods.push_back(Method::kUniform);
  const auto t0 = std::chrono::steady_clock::now();
  const ReplicationSummary s = run_replications(spec);
  std::fprintf(stderr, "%s(%.0f s)\n", summary_table(s).c_str(),
               std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  TableRow row;
  row.proposed = s.methods[0].rmse.mean;
  row.proposed_te = s.methods[0].te.mean;
  if (with_uniform) {
    row.uniform = s.methods[1].rmse.mean;
    row.have_uniform = true;
  }
  return row;
}

class Tables {
 public:
  const TableRow& get(int setting, double snr, bool with_uniform) {
    for (auto& [key, row] : rows_)
      if (key.first == setting && key.second == snr && (row.have_uniform || !with_uniform))
        return row;
    rows_.push_back({{setting, snr}, run_row(setting, snr, with_uniform)});
    return rows_.back().second;
  }

 private:
  std::vector<std::pair<std::pair<int, double>, TableRow>> rows_;
};

Outcome criterion1(Tables& t) {
  const auto& r = t.get(1, 5.0, true);
  Outcome o;
  o.check(within(r.proposed, 0.63, 0.73), bracket("mean RMSE", r.proposed, 0.63, 0.73));
  o.check(within(r.proposed_te, 0.65, 0.75), bracket("mean TE", r.proposed_te, 0.65, 0.75));
  return o;
}

Outcome criterion2(Tables& t) {
  Outcome o;
  const auto& s2 = t.get(2, 5.0, true);
  o.check(within(s2.proposed, 0.624 - 0.07, 0.624 + 0.07),
          bracket("setting 2 RMSE", s2.proposed, 0.624 - 0.07, 0.624 + 0.07));
  const auto& s3 = t.get(3, 5.0, true);
  o.check(within(s3.proposed, 0.925 - 0.09, 0.925 + 0.09),
          bracket("setting 3 RMSE", s3.proposed, 0.925 - 0.09, 0.925 + 0.09));
  return o;
}

Outcome criterion3(Tables& t) {
  Outcome o;
  const double target[3] = {0.682, 0.628, 1.026};
  for (int s = 1; s <= 3; ++s) {
    const auto& r = t.get(s, 5.0, true);
    const std::string name = "setting " + std::to_string(s) + " uniform RMSE";
    o.check(within(r.uniform, target[s - 1] - 0.07, target[s - 1] + 0.07),
            bracket(name.c_str(), r.uniform, target[s - 1] - 0.07, target[s - 1] + 0.07));
  }
  return o;
}

Outcome criterion4(Tables& t) {
  const auto& r = t.get(3, 10.0, false);
  Outcome o;
  o.check(within(r.proposed, 0.627 - 0.08, 0.627 + 0.08),
          bracket("setting 3 SNR 10 RMSE", r.proposed, 0.627 - 0.08, 0.627 + 0.08));
  return o;
}

// ---------------------------------------------------------------------------

Matrix mask(Eigen::Index r, Eigen::Index c, std::initializer_list<double> v) {
  Matrix M(r, c);
  auto it = v.begin();
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) M(i, j) = *it++;
  return M;
}

Outcome criterion5() {
  const std::vector<Matrix> masks{
      mask(2, 2, {1, 1, 1, 0}),       mask(2, 2, {1, 0, 0, 1}),
      mask(2, 2, {0, 1, 1, 1}),       mask(2, 2, {1, 0, 1, 0}),
      mask(2, 2, {0, 0, 0, 1}),       mask(2, 3, {1, 1, 1, 0, 0, 0}),
      mask(2, 3, {1, 0, 0, 0, 1, 0}), mask(2, 3, {1, 0, 1, 0, 1, 0}),
      mask(2, 3, {0, 1, 0, 1, 0, 1}), mask(2, 3, {0, 0, 1, 0, 0, 0}),
  };
  Outcome o;
  double worst = 0.0;
  int cases = 0;
  for (const Matrix& T : masks) {
    for (double kp : {0.0, 0.01, 0.1}) {
      const double oracle = testing::weight_grid_oracle(T, kp).objective;
      const double got = solve_weights(T, kp).objective;
      worst = std::max(worst, std::abs(got - oracle));
      ++cases;
    }
  }
  o.check(worst <= 5e-3, std::to_string(cases) + " cases, max |objective - grid oracle| = " +
                             fmt("%.2e", worst) + " <= 5e-3");
  return o;
}

Outcome criterion6() {
  int violations = 0;
  for (std::uint64_t k = 0; k < 1000; ++k) {
    const Eigen::Index n1 = 2 + k % 9, n2 = 2 + (k / 9) % 7, r = 1 + k % 4;
    const Matrix C = random_matrix(n1, n2, 900000 + 3 * k, -3, 3);
    const Matrix L = random_matrix(n1, r, 900001 + 3 * k);
    const Matrix R = random_matrix(n2, r, 900002 + 3 * k);
    const Matrix B = L * R.transpose();
    const double lhs = std::abs(C.cwiseProduct(B).cwiseProduct(B).sum());
    const double bmax = max_row_norm(L) * max_row_norm(R);
    const double c = spectral_norm(C);
    const double mid = c * bmax * nuclear_norm(B);
    const double rhs = std::sqrt(static_cast<double>(n1 * n2)) * c * bmax * bmax;
    if (lhs > mid + 1e-10) ++violations;
    if (mid > rhs + 1e-10) ++violations;
  }
  Outcome o;
  o.check(violations == 0,
          "1000 draws, " + std::to_string(violations) + " violations of the two-inequality chain");
  return o;
}

Outcome criterion7() {
  Outcome o;
  {
    const Matrix Y = random_matrix(6, 5, 31, -2, 2);
    const Matrix J = Matrix::Ones(6, 5);
    const Vector s = singular_values(Y);
    const double theta = 0.5 * (s[1] + s[2]);
    AdmmConfig cfg;
    cfg.mu = 2.0 * theta / 30.0;
    cfg.beta = 1e6;
    cfg.max_iter = 20000;
    cfg.tol = 1e-12;
    const double err = testing::rel_frobenius(admm_solve(Y, J, J, cfg).A_hat, svt(Y, theta));
    o.check(err <= 1e-2, "SVT oracle relative error " + fmt("%.2e", err) + " <= 1e-2");
  }
  {
    const auto inst = generate_instance(30, 30, 5, 1, 5.0, 4);
    AdmmConfig cfg;
    cfg.beta = 0.8 * max_norm_upper_bound(inst.A_star);
    cfg.mu = 0.5 * mu_reference(inst.T, inst.T, inst.sigma_eps);
    cfg.max_iter = 2000;
    int iterates = 0, bad = 0;
    admm_solve(inst.Y, inst.T, inst.T, cfg, [&](const AdmmState& st) {
      ++iterates;
      Eigen::SelfAdjointEigenSolver<Matrix> eig(st.X, Eigen::EigenvaluesOnly);
      const bool psd = eig.eigenvalues().minCoeff() >= -1e-8;
      const bool box = st.Z.cwiseAbs().maxCoeff() <= cfg.beta + 1e-10 &&
                       st.Z.diagonal().minCoeff() >= 0.0;
      if (!psd || !box) ++bad;
    });
    o.check(bad == 0, std::to_string(iterates) + " logged 30x30 iterates, " +
                          std::to_string(bad) + " with X not PSD or Z outside P_beta");
  }
  return o;
}

Outcome criterion8() {
  Outcome o;
  double worst_gap = 0.0, worst_excess = -1e300;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto inst = generate_instance(30, 30, 5, 1, 5.0, seed);
    const auto prof_grid = default_kappa_grid(30, 30);
    std::vector<WeightSolution> sols;
    const auto prof = balancing_profile(inst.T, prof_grid, {}, &sols);
    const Matrix W = sols[select_by_percentage(prof, {1.0}).front().index].weights;
    const double beta = max_norm_upper_bound(inst.A_star);
    const double mu = 0.5 * mu_reference(inst.T, W, inst.sigma_eps);

    AdmmConfig ac;
    ac.beta = beta;
    ac.mu = mu;
    ac.max_iter = 20000;
    ac.tol = 1e-9;
    const auto admm = admm_solve(inst.Y, inst.T, W, ac);
    PgdConfig pc;
    pc.beta = beta;
    pc.mu = mu;
    pc.rank = 15;
    pc.step = 3.0;
    pc.tol = 1e-10;
    pc.max_iter = 50000;
    const auto pgd = pgd_solve(inst.Y, inst.T, W, pc);

    const double f_admm = hybrid_objective(admm.A_hat, inst.Y, inst.T, W, mu);
    const double f_pgd = factored_objective(pgd.factors, inst.Y, inst.T, W, mu);
    const double f_pgd_hybrid = hybrid_objective(pgd.A_hat, inst.Y, inst.T, W, mu);
    worst_gap = std::max(worst_gap, std::abs(f_admm - f_pgd));
    worst_excess = std::max(worst_excess, f_admm - f_pgd_hybrid);
  }
  o.check(worst_gap <= 5e-3, "max |f_admm - f_pgd| = " + fmt("%.2e", worst_gap) + " <= 5e-3");
  o.check(worst_excess <= 1e-3,
          "max (f_admm - f_pgd) = " + fmt("%.2e", worst_excess) + " <= 1e-3");
  return o;
}

Outcome criterion9() {
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Eigen::Index n1 = 4 + s % 7, n2 = 3 + s % 5, r = 1 + s % 4;
    const FactorPair P{random_matrix(n1, r, 7000 + 4 * s), random_matrix(n2, r, 7001 + 4 * s)};
    const Matrix Y = random_matrix(n1, n2, 7002 + 4 * s, -3, 3);
    const Matrix T = random_mask(n1, n2, 0.5, 7003 + 4 * s);
    const Matrix W = random_matrix(n1, n2, 8000 + s, 1, 4);
    worst = std::max(worst, gradient_check(P, Y, T, W, 0.05 * (s % 3), 1e-5, s));
  }
  Outcome o;
  o.check(worst < 1e-5, "50 points, max relative deviation " + fmt("%.2e", worst) + " < 1e-5");
  return o;
}

Outcome criterion10() {
  std::vector<double> means;
  std::string detail;
  for (Eigen::Index n : {50, 100, 200}) {
    double acc = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto inst = generate_instance(n, n, 5, 1, 5.0, 500 + seed);
      std::vector<WeightSolution> sols;
      const auto prof = balancing_profile(inst.T, default_kappa_grid(n, n), {}, &sols);
      const auto idx = select_by_percentage(prof, {1.0}).front().index;
      acc += prof.points[idx].h_value / static_cast<double>(n);
    }
    means.push_back(acc / 10.0);
    detail += (detail.empty() ? "" : ", ") + std::string("n=") + std::to_string(n) + ": " +
              fmt("%.4f", means.back());
  }
  Outcome o;
  o.check(means[1] <= means[0] && means[2] <= means[1],
          "mean ||T o W - J|| / sqrt(n1 n2) non-increasing (" + detail + ")");
  return o;
}

Outcome criterion11() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "bmc_acceptance_determinism";
  fs::remove_all(dir);
  auto run = [&](const std::string& name) {
    const std::string out = (dir / name).string();
    const std::vector<std::string> args{"balanced_mc", "reproduce-table", "--setting", "1",
                                        "--snr", "5", "--reps", "3", "--seed", "7",
                                        "--n", "40", "--out", out};
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream sink;
    const int code = cli::cli_main(static_cast<int>(argv.size()), argv.data(), sink, sink);
    std::ifstream in(out, std::ios::binary);
    return std::make_pair(code, std::string(std::istreambuf_iterator<char>(in), {}));
  };
  const auto a = run("first.csv");
  const auto b = run("second.csv");
  fs::remove_all(dir);
  Outcome o;
  o.check(a.first == 0 && b.first == 0, "both runs exit 0");
  o.check(!a.second.empty() && a.second == b.second,
          "CSV outputs byte-identical (" + std::to_string(a.second.size()) + " bytes)");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  Tables tables;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"table regression, setting 1", [&] { return criterion1(tables); }},
      {"table regression, settings 2 and 3", [&] { return criterion2(tables); }},
      {"uniform-weight baseline", [&] { return criterion3(tables); }},
      {"setting 3 at SNR 10", [&] { return criterion4(tables); }},
      {"weight solver vs grid oracle", criterion5},
      {"balancing-error inequality chain", criterion6},
      {"ADMM correctness", criterion7},
      {"cross-solver agreement", criterion8},
      {"gradient check", criterion9},
      {"balancing shrinkage", criterion10},
      {"reproduce-table determinism", criterion11},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k + 1);
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id,
                criteria[k].first, o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
