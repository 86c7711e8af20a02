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

// Command-line front end. Exit codes: 0 success, 2 usage error, 1 runtime
// error. Every subcommand accepts `--config FILE` with flat key=value lines
// whose keys are long flag names without dashes; flags given on the command
// line take precedence over the file.

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "balanced_mc/errors.hpp"
#include "balanced_mc/experiments.hpp"
#include "balanced_mc/io.hpp"
#include "balanced_mc/weights.hpp"

namespace bmc::cli {

namespace fs = std::filesystem;
using io::Json;

namespace detail {

/// Reads flat key=value files for whichever subcommand was selected.
class FlatConfig : public CLI::Config {
 public:
  explicit FlatConfig(const CLI::App* app) : app_(app) {}

  std::string to_config(const CLI::App* app, bool default_also, bool,
                        std::string) const override {
    std::ostringstream os;
    for (const CLI::Option* opt : app->get_options()) {
      if (opt->get_lnames().empty() || opt->get_configurable() == false) continue;
      std::string v;
      if (opt->count() > 0)
        v = CLI::detail::join(opt->results(), ",");
      else if (default_also)
        v = opt->get_default_str();
      else
        continue;
      os << opt->get_lnames().front() << '=' << v << '\n';
    }
    return os.str();
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& is) const override {
    std::vector<io::ConfigEntry> entries;
    try {
      entries = io::parse_flat_config(is);
    } catch (const ParseError& e) {
      throw CLI::ConfigError(std::string("config ") + e.what());
    }
    std::vector<std::string> parents;
    const auto subs = app_->get_subcommands();
    if (!subs.empty()) parents.push_back(subs.front()->get_name());
    std::vector<CLI::ConfigItem> items;
    for (const auto& e : entries) {
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = e.key;
      std::stringstream ss(e.value);
      for (std::string tok; std::getline(ss, tok, ',');) {
        const auto t = io::detail::trim(tok);
        if (!t.empty()) item.inputs.emplace_back(t);
      }
      if (item.inputs.empty()) item.inputs.emplace_back("");
      items.push_back(std::move(item));
    }
    return items;
  }

 private:
  const CLI::App* app_;
};

/// Effective options of a subcommand (given or default), for provenance.
inline Json config_json(const CLI::App& sub) {
  Json j;
  j["command"] = sub.get_name();
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string& key = opt->get_lnames().front();
    if (key == "help" || key == "config") continue;
    if (opt->get_type_size() == 0) {
      j[key] = opt->count() > 0;
    } else if (opt->count() > 0) {
      const auto& r = opt->results();
      if (r.size() == 1)
        j[key] = r.front();
      else
        j[key] = r;
    } else {
      j[key] = opt->get_default_str();
    }
  }
  return j;
}

inline char parse_delimiter(const std::string& s) {
  if (s == "," || s == "comma") return ',';
  if (s == "tab" || s == "\\t") return '\t';
  if (s == ";" || s == "semicolon") return ';';
  if (s == "space" || s == "whitespace") return '\0';
  throw InvalidInput("unknown delimiter '" + s + "' (use comma, tab, semicolon or whitespace)");
}

inline const std::map<std::string, SolverKind> kSolvers{{"pgd", SolverKind::kPgd},
                                                       {"admm", SolverKind::kAdmm}};
inline const std::map<std::string, Method> kMethods{{"proposed", Method::kProposed},
                                                    {"uniform", Method::kUniform}};
inline const std::map<std::string, SnrCalibration> kCalibrations{
    {"analytic", SnrCalibration::kAnalytic}, {"realized", SnrCalibration::kRealized}};
inline const std::map<std::string, MuScale> kMuScales{{"absolute", MuScale::kAbsolute},
                                                      {"noise", MuScale::kNoiseLevel}};

struct SolverFlags {
  std::string solver = "pgd";
  int rank = 50;
  double step = 3.0;
  int max_iter = 0;  // 0: solver default
  double tol = 0.0;  // 0: solver default
  double rho = 0.1;
  double tau = 1.618;
  bool literal_radius = false;

  void add_to(CLI::App* sub) {
    sub->add_option("--solver", solver, "pgd or admm")
        ->transform(CLI::IsMember(kSolvers))
        ->capture_default_str();
    sub->add_option("--rank", rank, "PGD factor rank (capped at min(n1, n2))")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--step", step, "PGD step as a multiple of 1/Lipschitz")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--max-iter", max_iter, "iteration cap (0 keeps the solver default)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    sub->add_option("--tol", tol, "stopping tolerance (0 keeps the solver default)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    sub->add_option("--rho", rho, "ADMM penalty")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--tau", tau, "ADMM dual step")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_flag("--literal-radius", literal_radius,
                  "PGD row-norm radius beta instead of sqrt(beta)");
  }

  void apply(FitOptions& f, Eigen::Index n1, Eigen::Index n2) const {
    f.solver = kSolvers.at(solver);
    f.pgd.rank = static_cast<int>(std::min<Eigen::Index>(rank, std::min(n1, n2)));
    f.pgd.step = step;
    f.pgd.literal_radius = literal_radius;
    f.admm.rho = rho;
    f.admm.tau = tau;
    if (max_iter > 0) f.pgd.max_iter = f.admm.max_iter = max_iter;
    if (tol > 0) f.pgd.tol = f.admm.tol = tol;
  }
};

}  // namespace detail

// ---------------------------------------------------------------------------

/// Parses argv and runs one subcommand.
inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  CLI::App app{"Matrix completion with balancing weights", "balanced_mc"};
  app.fallthrough();
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<detail::FlatConfig>(&app));
  app.set_config("--config", "", "flat key=value file; command-line flags win");

  // simulate
  struct {
    Eigen::Index n1 = 200, n2 = 200;
    int rank = 5, setting = 1;
    double snr = 5.0;
    std::uint64_t seed = 0;
    std::string calibration = "analytic";
    std::string out;
  } sim;
  auto* simulate = app.add_subcommand("simulate", "generate a synthetic instance");
  simulate->add_option("--n1", sim.n1, "rows")->check(CLI::PositiveNumber)->capture_default_str();
  simulate->add_option("--n2", sim.n2, "columns")->check(CLI::PositiveNumber)->capture_default_str();
  simulate->add_option("--rank", sim.rank, "true rank")->check(CLI::PositiveNumber)->capture_default_str();
  simulate->add_option("--setting", sim.setting, "missingness setting")
      ->check(CLI::Range(1, 3))
      ->capture_default_str();
  simulate->add_option("--snr", sim.snr, "signal-to-noise ratio")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  simulate->add_option("--seed", sim.seed, "instance seed")->capture_default_str();
  simulate->add_option("--calibration", sim.calibration, "analytic or realized")
      ->check(CLI::IsMember(detail::kCalibrations))
      ->capture_default_str();
  simulate->add_option("--out", sim.out, "output directory")->required();

  // weights
  struct {
    std::string mask, out;
    int grid_points = 8;
    std::vector<double> kappa;
    double pct = 1.0;
    int max_iter = 0;
  } wt;
  auto* weights = app.add_subcommand("weights", "balancing weights and profile for a mask");
  weights->add_option("--mask", wt.mask, "0/1 mask CSV")->required()->check(CLI::ExistingFile);
  weights->add_option("--grid-points", wt.grid_points, "points in the default kappa' grid")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  weights->add_option("--kappa", wt.kappa, "explicit ascending kappa' grid")->delimiter(',');
  weights->add_option("--pct", wt.pct, "balancing percentage of the weights written")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  weights->add_option("--max-iter", wt.max_iter, "weight solver iteration cap (0: default)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  weights->add_option("--out", wt.out, "output directory")->required();

  // fit
  struct {
    std::string y, mask, validation, out, method = "proposed", mu_scale = "absolute";
    std::vector<double> beta, mu, pcts{1.0, 0.75, 0.5};
    double sigma = 1.0, val_frac = 0.2;
    int grid_points = 8;
    std::uint64_t seed = 0;
    detail::SolverFlags solver;
  } ft;
  auto* fit = app.add_subcommand("fit", "tune on a validation split and fit");
  fit->add_option("--Y", ft.y, "observed values CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--mask", ft.mask, "0/1 mask CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--validation", ft.validation, "explicit validation mask (subset of --mask)")
      ->check(CLI::ExistingFile);
  fit->add_option("--method", ft.method, "proposed or uniform")
      ->check(CLI::IsMember(detail::kMethods))
      ->capture_default_str();
  fit->add_option("--beta", ft.beta, "max-norm bound grid")->required()->delimiter(',');
  fit->add_option("--mu", ft.mu, "regularization grid")->required()->delimiter(',');
  fit->add_option("--mu-scale", ft.mu_scale, "absolute, or noise (multiples of the noise level)")
      ->check(CLI::IsMember(detail::kMuScales))
      ->capture_default_str();
  fit->add_option("--sigma", ft.sigma, "noise level for --mu-scale noise")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  fit->add_option("--pcts", ft.pcts, "balancing percentages")->delimiter(',')->capture_default_str();
  fit->add_option("--grid-points", ft.grid_points, "points in the kappa' grid")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  fit->add_option("--val-frac", ft.val_frac, "validation fraction when no --validation")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  fit->add_option("--seed", ft.seed, "validation split seed")->capture_default_str();
  ft.solver.add_to(fit);
  fit->add_option("--out", ft.out, "output directory")->required();

  // evaluate
  struct {
    std::string fit, truth, mask, ratings, delimiter = ",", out;
    bool one_indexed = false, header = false;
    double rank_tol = 1e-4;
  } ev;
  auto* evaluate = app.add_subcommand("evaluate", "score a fitted matrix");
  evaluate->add_option("--fit", ev.fit, "estimate CSV")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--truth", ev.truth, "ground-truth CSV (RMSE; TE with --mask)")
      ->check(CLI::ExistingFile);
  evaluate->add_option("--mask", ev.mask, "observation mask CSV for TE")->check(CLI::ExistingFile);
  evaluate->add_option("--ratings", ev.ratings, "held-out rating triplets (TRMSE, TMAE)")
      ->check(CLI::ExistingFile);
  evaluate->add_option("--delimiter", ev.delimiter, "triplet delimiter")->capture_default_str();
  evaluate->add_flag("--one-indexed", ev.one_indexed, "triplet indices start at 1");
  evaluate->add_flag("--header", ev.header, "skip the first triplet line");
  evaluate->add_option("--rank-tol", ev.rank_tol, "relative singular value cutoff")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  evaluate->add_option("--out", ev.out, "report JSON (stdout when absent)");

  // reproduce-table
  struct {
    int setting = 1, reps = 20, rank = 5, threads = 0, grid_points = 8;
    double snr = 5.0;
    Eigen::Index n = 200;
    std::uint64_t seed = 0;
    std::vector<std::string> methods{"proposed", "uniform"};
    GridRecipe recipe;
    std::string calibration = "analytic", out, table;
    detail::SolverFlags solver;
  } rt;
  auto* reproduce = app.add_subcommand("reproduce-table", "replicate a simulation table row");
  reproduce->add_option("--setting", rt.setting, "missingness setting")
      ->check(CLI::Range(1, 3))
      ->capture_default_str();
  reproduce->add_option("--snr", rt.snr, "signal-to-noise ratio")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  reproduce->add_option("--reps", rt.reps, "replicates")->check(CLI::PositiveNumber)->capture_default_str();
  reproduce->add_option("--seed", rt.seed, "base seed; replicate i uses seed + i")->capture_default_str();
  reproduce->add_option("--n", rt.n, "matrix side")->check(CLI::PositiveNumber)->capture_default_str();
  reproduce->add_option("--true-rank", rt.rank, "rank of A*")->check(CLI::PositiveNumber)->capture_default_str();
  reproduce->add_option("--methods", rt.methods, "proposed and/or uniform")
      ->delimiter(',')
      ->check(CLI::IsMember(detail::kMethods))
      ->capture_default_str();
  reproduce->add_option("--beta-mult", rt.recipe.beta_multipliers,
                        "beta grid as multiples of the max-norm bound of A*")
      ->delimiter(',')
      ->capture_default_str();
  reproduce->add_option("--mu-mult", rt.recipe.mu_multipliers, "mu grid as multiples of the noise level")
      ->delimiter(',')
      ->capture_default_str();
  reproduce->add_option("--pcts", rt.recipe.balancing_pcts, "balancing percentages")
      ->delimiter(',')
      ->capture_default_str();
  reproduce->add_option("--grid-points", rt.grid_points, "points in the kappa' grid")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  reproduce->add_option("--calibration", rt.calibration, "analytic or realized")
      ->check(CLI::IsMember(detail::kCalibrations))
      ->capture_default_str();
  reproduce->add_option("--threads", rt.threads, "worker threads (0: BALANCED_MC_THREADS or all cores)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  rt.solver.add_to(reproduce);
  reproduce->add_option("--out", rt.out, "summary CSV (stdout when absent)");
  reproduce->add_option("--table", rt.table, "aligned text table");

  // convert
  struct {
    std::string train, validation, evaluation, delimiter = ",", out;
    bool one_indexed = false, header = false;
    Eigen::Index n_rows = 0, n_cols = 0;
  } cv;
  auto* convert = app.add_subcommand("convert", "rating triplets to dense files");
  convert->add_option("--train", cv.train, "training triplets")->required()->check(CLI::ExistingFile);
  convert->add_option("--validation", cv.validation, "validation triplets")->check(CLI::ExistingFile);
  convert->add_option("--evaluation", cv.evaluation, "evaluation triplets")->check(CLI::ExistingFile);
  convert->add_option("--delimiter", cv.delimiter, "comma, tab, semicolon or whitespace")
      ->capture_default_str();
  convert->add_flag("--one-indexed", cv.one_indexed, "indices start at 1");
  convert->add_flag("--header", cv.header, "skip the first line of each file");
  convert->add_option("--n-rows", cv.n_rows, "rows (0: infer)")->check(CLI::NonNegativeNumber);
  convert->add_option("--n-cols", cv.n_cols, "columns (0: infer)")->check(CLI::NonNegativeNumber);
  convert->add_option("--out", cv.out, "output directory")->required();

  if (argc <= 1) {
    err << app.help();
    return 2;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    CLI::App* target = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    out << target->help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    err << "run with --help for usage\n";
    return 2;
  }

  try {
    if (simulate->parsed()) {
      const auto inst = generate_instance(sim.n1, sim.n2, sim.rank, sim.setting, sim.snr,
                                          sim.seed, detail::kCalibrations.at(sim.calibration));
      io::write_instance(sim.out, inst, detail::config_json(*simulate));
      out << "wrote instance to " << sim.out << "\n";
    } else if (weights->parsed()) {
      const Matrix T = io::read_mask_csv(wt.mask);
      std::vector<double> grid = wt.kappa.empty()
                                     ? default_kappa_grid(T.rows(), T.cols(), wt.grid_points)
                                     : wt.kappa;
      WeightOptions opts;
      if (wt.max_iter > 0) opts.max_iter = wt.max_iter;
      std::vector<WeightSolution> sols;
      const auto profile = balancing_profile(T, grid, opts, &sols);
      const auto choice = select_by_percentage(profile, {wt.pct}).front();
      const fs::path dir(wt.out);
      fs::create_directories(dir);
      {
        auto csv = io::detail::open_out(dir / "profile.csv");
        io::write_profile_csv(csv, profile, sols);
      }
      io::write_matrix_csv(dir / "weights.csv", sols[choice.index].weights);
      Json j;
      j["config"] = detail::config_json(*weights);
      j["profile"] = io::to_json(profile);
      j["selected"] = {{"target", choice.target},
                       {"kappa_prime", choice.kappa_prime},
                       {"percentage", profile.percentage(choice.index)},
                       {"h", profile.points[choice.index].h_value}};
      j["files"] = {"profile.csv", "weights.csv"};
      io::write_json(dir / "profile.json", j);
      out << "wrote profile (" << profile.points.size() << " points) to " << wt.out << "\n";
    } else if (fit->parsed()) {
      FitProblem problem;
      problem.Y = io::read_matrix_csv(ft.y);
      problem.T = io::read_mask_csv(ft.mask);
      require_same_shape(problem.Y, problem.T, "fit");
      if (!ft.validation.empty()) problem.validation = io::read_mask_csv(ft.validation);
      TuningGrids grids;
      grids.beta = ft.beta;
      grids.mu = ft.mu;
      grids.balancing_pcts = ft.pcts;
      grids.mu_scale = detail::kMuScales.at(ft.mu_scale);
      grids.noise_sigma = ft.sigma;
      FitOptions opts;
      opts.method = detail::kMethods.at(ft.method);
      ft.solver.apply(opts, problem.T.rows(), problem.T.cols());
      opts.val_frac = ft.val_frac;
      opts.split_seed = ft.seed;
      opts.kappa_grid = default_kappa_grid(problem.T.rows(), problem.T.cols(), ft.grid_points);
      const TuneResult res = tune_and_fit(problem, grids, opts);
      const fs::path dir(ft.out);
      fs::create_directories(dir);
      io::write_matrix_csv(dir / "A_hat.csv", res.A_hat);
      io::write_matrix_csv(dir / "weights.csv", res.weights);
      Json j;
      j["config"] = detail::config_json(*fit);
      j["report"] = io::to_json(res.report);
      Json scores = Json::array();
      for (const auto& s : res.scores) scores.push_back(io::to_json(s));
      j["scores"] = scores;
      j["profile"] = res.profile ? io::to_json(*res.profile) : Json(nullptr);
      j["files"] = {"A_hat.csv", "weights.csv"};
      io::write_json(dir / "report.json", j);
      out << "wrote fit to " << ft.out << "\n";
    } else if (evaluate->parsed()) {
      const Matrix A = io::read_matrix_csv(ev.fit);
      EvaluationReport rep;
      rep.est_rank = estimate_rank(A, ev.rank_tol);
      if (!ev.truth.empty()) {
        const Matrix truth = io::read_matrix_csv(ev.truth);
        rep.rmse = rmse(A, truth);
        if (!ev.mask.empty()) rep.te = test_error(A, truth, io::read_mask_csv(ev.mask, false));
      } else if (!ev.mask.empty()) {
        throw InvalidInput("evaluate: --mask needs --truth");
      }
      if (!ev.ratings.empty()) {
        const auto ratings = io::load_triplets(
            ev.ratings, {detail::parse_delimiter(ev.delimiter), ev.one_indexed, ev.header});
        const auto t = trmse_tmae(A, ratings);
        rep.trmse = t.trmse;
        rep.tmae = t.tmae;
      }
      Json j = io::to_json(rep);
      j.erase("chosen");
      j.erase("replicate_seed");
      Json doc;
      doc["config"] = detail::config_json(*evaluate);
      doc.update(j);
      if (ev.out.empty())
        out << doc.dump(2) << "\n";
      else
        io::write_json(ev.out, doc);
    } else if (reproduce->parsed()) {
      ReplicationSpec spec;
      spec.setting = rt.setting;
      spec.snr = rt.snr;
      spec.n1 = spec.n2 = rt.n;
      spec.rank = rt.rank;
      spec.n_reps = rt.reps;
      spec.base_seed = rt.seed;
      spec.methods.clear();
      for (const auto& m : rt.methods) spec.methods.push_back(detail::kMethods.at(m));
      spec.recipe = rt.recipe;
      rt.solver.apply(spec.fit, rt.n, rt.n);
      spec.fit.kappa_grid = default_kappa_grid(rt.n, rt.n, rt.grid_points);
      spec.calibration = detail::kCalibrations.at(rt.calibration);
      spec.threads = rt.threads;
      const auto summary = run_replications(spec);
      const std::string csv = summary_csv(summary);
      if (rt.out.empty()) {
        out << csv;
      } else {
        io::write_text(rt.out, csv);
        Json j;
        j["config"] = detail::config_json(*reproduce);
        j["seed"] = rt.seed;
        Json reps = Json::array();
        for (const auto& m : summary.methods)
          for (const auto& r : m.replicates) {
            Json x = io::to_json(r);
            x["method"] = to_string(m.method);
            reps.push_back(x);
          }
        j["replicates"] = reps;
        io::write_json(rt.out + ".json", j);
      }
      if (!rt.table.empty()) io::write_text(rt.table, summary_table(summary));
    } else if (convert->parsed()) {
      const io::TripletSchema schema{detail::parse_delimiter(cv.delimiter), cv.one_indexed,
                                     cv.header};
      io::TripletDataset d;
      d.train = io::load_triplets(cv.train, schema);
      if (!cv.validation.empty()) d.validation = io::load_triplets(cv.validation, schema);
      if (!cv.evaluation.empty()) d.evaluation = io::load_triplets(cv.evaluation, schema);
      const auto [r, c] = io::infer_shape({&d.train, &d.validation, &d.evaluation});
      d.n_rows = cv.n_rows > 0 ? cv.n_rows : r;
      d.n_cols = cv.n_cols > 0 ? cv.n_cols : c;
      io::validate_dataset(d);
      std::vector<Rating> fitting = d.train;
      fitting.insert(fitting.end(), d.validation.begin(), d.validation.end());
      const auto [Y, T] = io::to_dense(fitting, d.n_rows, d.n_cols);
      const fs::path dir(cv.out);
      fs::create_directories(dir);
      io::write_matrix_csv(dir / "Y.csv", Y);
      io::write_matrix_csv(dir / "T.csv", T);
      Json files = {"Y.csv", "T.csv"};
      if (!d.validation.empty()) {
        io::write_matrix_csv(dir / "V.csv", io::to_dense(d.validation, d.n_rows, d.n_cols).second);
        files.push_back("V.csv");
      }
      if (!d.evaluation.empty()) {
        std::ostringstream os;
        for (const auto& e : d.evaluation)
          os << e.row << ',' << e.col << ',' << io::format_double(e.value) << '\n';
        io::write_text(dir / "eval.csv", os.str());
        files.push_back("eval.csv");
      }
      Json j;
      j["config"] = detail::config_json(*convert);
      j["n_rows"] = d.n_rows;
      j["n_cols"] = d.n_cols;
      j["n_train"] = d.train.size();
      j["n_validation"] = d.validation.size();
      j["n_evaluation"] = d.evaluation.size();
      j["files"] = files;
      io::write_json(dir / "dataset.json", j);
      out << "wrote " << d.n_rows << "x" << d.n_cols << " dataset to " << cv.out << "\n";
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace bmc::cli
