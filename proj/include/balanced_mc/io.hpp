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
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "balanced_mc/errors.hpp"
#include "balanced_mc/experiments.hpp"
#include "balanced_mc/linalg.hpp"
#include "balanced_mc/weights.hpp"

namespace bmc::io {

using Json = nlohmann::ordered_json;

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

inline std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  if (delim == '\0') {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
      if (i == line.size()) break;
      const std::size_t j = line.find_first_of(" \t", i);
      out.push_back(line.substr(i, j == std::string_view::npos ? j : j - i));
      i = j == std::string_view::npos ? line.size() : j;
    }
    return out;
  }
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(delim, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string() + " for reading");
  return in;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + p.string() + " for writing");
  return out;
}

}  // namespace detail

/// Shortest decimal text that parses back to exactly `x`.
inline std::string format_double(double x) {
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

// ---------------------------------------------------------------------------
// Dense CSV

inline void write_matrix_csv(std::ostream& os, const MatrixRef& M) {
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (j) os << ',';
      os << format_double(M(i, j));
    }
    os << '\n';
  }
}

inline void write_matrix_csv(const std::filesystem::path& p, const MatrixRef& M) {
  auto out = detail::open_out(p);
  write_matrix_csv(out, M);
}

/// One row per line, comma separated, no header. Ragged rows, non-numeric
/// cells and empty input are parse errors.
inline Matrix read_matrix_csv(std::istream& is) {
  std::vector<double> values;
  Eigen::Index cols = -1, rows = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto body = detail::trim(line);
    if (body.empty()) continue;
    const auto cells = detail::split(body, ',');
    if (cols < 0) cols = static_cast<Eigen::Index>(cells.size());
    if (static_cast<Eigen::Index>(cells.size()) != cols)
      throw ParseError("expected " + std::to_string(cols) + " columns, found " +
                           std::to_string(cells.size()),
                       lineno);
    for (auto c : cells) {
      double v;
      if (!detail::parse_number(c, v))
        throw ParseError("not a number: '" + std::string(c) + "'", lineno);
      values.push_back(v);
    }
    ++rows;
  }
  if (rows == 0) throw ParseError("no data rows", lineno + 1);
  Matrix M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      M(i, j) = values[static_cast<std::size_t>(i * cols + j)];
  return M;
}

inline Matrix read_matrix_csv(const std::filesystem::path& p) {
  auto in = detail::open_in(p);
  try {
    return read_matrix_csv(in);
  } catch (const ParseError& e) {
    throw ParseError(p.string() + ": " + e.message(), e.line());
  }
}

/// Reads a 0/1 CSV and checks it is a valid mask.
inline Matrix read_mask_csv(const std::filesystem::path& p,
                            bool require_observed = true) {
  Matrix T = read_matrix_csv(p);
  validate_mask(T, require_observed);
  return T;
}

// ---------------------------------------------------------------------------
// Triplet ratings

struct TripletSchema {
  char delimiter = ',';  ///< '\0' splits on runs of spaces and tabs
  bool one_indexed = false;
  bool header = false;
};

/// Parses "(row, col, rating)" lines; blank lines and lines starting with
/// '#' are skipped. Indices are returned 0-based.
inline std::vector<Rating> load_triplets(std::istream& is, const TripletSchema& schema) {
  std::vector<Rating> out;
  std::string line;
  std::size_t lineno = 0;
  bool header_pending = schema.header;
  while (std::getline(is, line)) {
    ++lineno;
    const auto body = detail::trim(line);
    if (body.empty() || body.front() == '#') continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    const auto cells = detail::split(body, schema.delimiter);
    if (cells.size() != 3)
      throw ParseError("expected 3 fields, found " + std::to_string(cells.size()), lineno);
    long long r, c;
    double v;
    if (!detail::parse_number(cells[0], r) || !detail::parse_number(cells[1], c))
      throw ParseError("row and column must be integers", lineno);
    if (!detail::parse_number(cells[2], v))
      throw ParseError("rating must be a number", lineno);
    if (schema.one_indexed) {
      --r;
      --c;
    }
    if (r < 0 || c < 0)
      throw ValidationError("line " + std::to_string(lineno) + ": negative index");
    out.push_back({static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c), v});
  }
  return out;
}

inline std::vector<Rating> load_triplets(const std::filesystem::path& p,
                                         const TripletSchema& schema) {
  auto in = detail::open_in(p);
  try {
    return load_triplets(in, schema);
  } catch (const ParseError& e) {
    throw ParseError(p.string() + ": " + e.message(), e.line());
  }
}

struct TripletDataset {
  Eigen::Index n_rows = 0;
  Eigen::Index n_cols = 0;
  std::vector<Rating> train;
  std::vector<Rating> validation;
  std::vector<Rating> evaluation;
};

/// Checks bounds, duplicates within a split and disjointness across splits.
inline void validate_dataset(const TripletDataset& d) {
  if (d.n_rows <= 0 || d.n_cols <= 0)
    throw ValidationError("dataset: dimensions must be positive");
  std::set<std::pair<Eigen::Index, Eigen::Index>> all;
  const std::pair<const char*, const std::vector<Rating>*> splits[] = {
      {"train", &d.train}, {"validation", &d.validation}, {"evaluation", &d.evaluation}};
  for (const auto& [name, ratings] : splits) {
    std::set<std::pair<Eigen::Index, Eigen::Index>> mine;
    for (const auto& e : *ratings) {
      if (e.row < 0 || e.row >= d.n_rows || e.col < 0 || e.col >= d.n_cols)
        throw ValidationError(std::string("dataset: ") + name + " entry (" +
                              std::to_string(e.row) + ", " + std::to_string(e.col) +
                              ") out of range");
      if (!mine.insert({e.row, e.col}).second)
        throw ValidationError(std::string("dataset: duplicate entry in ") + name);
      if (all.count({e.row, e.col}))
        throw ValidationError(std::string("dataset: ") + name +
                              " overlaps an earlier split");
    }
    all.insert(mine.begin(), mine.end());
  }
}

/// Smallest dimensions that contain every rating.
inline std::pair<Eigen::Index, Eigen::Index> infer_shape(
    std::initializer_list<const std::vector<Rating>*> splits) {
  Eigen::Index r = 0, c = 0;
  for (const auto* s : splits)
    for (const auto& e : *s) {
      r = std::max(r, e.row + 1);
      c = std::max(c, e.col + 1);
    }
  return {r, c};
}

/// Scatters ratings into dense values and a mask (unlisted entries are 0).
inline std::pair<Matrix, Matrix> to_dense(const std::vector<Rating>& ratings,
                                          Eigen::Index n_rows, Eigen::Index n_cols) {
  Matrix Y = Matrix::Zero(n_rows, n_cols);
  Matrix T = Matrix::Zero(n_rows, n_cols);
  for (const auto& e : ratings) {
    if (e.row < 0 || e.row >= n_rows || e.col < 0 || e.col >= n_cols)
      throw ValidationError("to_dense: rating index out of range");
    Y(e.row, e.col) = e.value;
    T(e.row, e.col) = 1.0;
  }
  return {Y, T};
}

// ---------------------------------------------------------------------------
// Flat key=value configuration

struct ConfigEntry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

/// "key = value" per line; '#' starts a comment line. Keys must be unique.
inline std::vector<ConfigEntry> parse_flat_config(std::istream& is) {
  std::vector<ConfigEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto body = detail::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key=value", lineno);
    const auto key = detail::trim(body.substr(0, eq));
    const auto value = detail::trim(body.substr(eq + 1));
    if (key.empty()) throw ParseError("empty key", lineno);
    for (const auto& e : out)
      if (e.key == key) throw ParseError("duplicate key '" + std::string(key) + "'", lineno);
    out.push_back({std::string(key), std::string(value), lineno});
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON reports

inline Json to_json(const ChosenParams& c) {
  Json j;
  j["beta"] = c.beta;
  j["mu"] = c.mu;
  j["mu_multiplier"] = c.mu_multiplier;
  j["kappa_prime"] = c.kappa_prime ? Json(*c.kappa_prime) : Json(nullptr);
  j["balancing_pct"] = c.balancing_pct ? Json(*c.balancing_pct) : Json(nullptr);
  return j;
}

inline Json to_json(const EvaluationReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
  Json j;
  j["rmse"] = opt(r.rmse);
  j["te"] = opt(r.te);
  j["trmse"] = opt(r.trmse);
  j["tmae"] = opt(r.tmae);
  j["est_rank"] = r.est_rank;
  j["chosen"] = to_json(r.chosen);
  j["replicate_seed"] = r.replicate_seed;
  return j;
}

inline Json to_json(const GridScore& s) {
  Json j;
  j["beta"] = s.beta;
  j["mu"] = s.mu;
  j["mu_multiplier"] = s.mu_multiplier;
  j["kappa_prime"] = s.kappa_prime ? Json(*s.kappa_prime) : Json(nullptr);
  j["balancing_pct"] = s.balancing_pct ? Json(*s.balancing_pct) : Json(nullptr);
  j["val_rmse"] = s.val_rmse;
  return j;
}

inline Json to_json(const BalancingProfile& p) {
  Json j;
  j["h_max"] = p.h_max;
  j["h_min"] = p.h_min;
  Json pts = Json::array();
  for (std::size_t i = 0; i < p.points.size(); ++i) {
    Json q;
    q["kappa_prime"] = p.points[i].kappa_prime;
    q["h"] = p.points[i].h_value;
    q["percentage"] = p.percentage(i);
    pts.push_back(q);
  }
  j["points"] = pts;
  return j;
}

/// Profile table: one row per grid point after a header line.
inline void write_profile_csv(std::ostream& os, const BalancingProfile& p,
                              const std::vector<WeightSolution>& sols) {
  os << "kappa_prime,h,percentage,frob_tw,objective,iterations,converged\n";
  for (std::size_t i = 0; i < p.points.size(); ++i) {
    const auto& s = sols.at(i);
    os << format_double(p.points[i].kappa_prime) << ',' << format_double(p.points[i].h_value)
       << ',' << format_double(p.percentage(i)) << ',' << format_double(s.frob_tw) << ','
       << format_double(s.objective) << ',' << s.iterations << ','
       << (s.converged ? 1 : 0) << '\n';
  }
}

inline void write_json(const std::filesystem::path& p, const Json& j) {
  auto out = detail::open_out(p);
  out << j.dump(2) << '\n';
}

inline Json read_json(const std::filesystem::path& p) {
  auto in = detail::open_in(p);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(p.string() + ": " + e.what());
  }
}

inline void write_text(const std::filesystem::path& p, std::string_view text) {
  auto out = detail::open_out(p);
  out << text;
}

// ---------------------------------------------------------------------------
// Synthetic instances on disk

/// Writes A_star.csv, Pi.csv, Y.csv, T.csv and instance.json into `dir`.
/// `config` is embedded in instance.json for provenance.
inline void write_instance(const std::filesystem::path& dir, const SyntheticInstance& inst,
                           const Json& config = Json::object()) {
  std::filesystem::create_directories(dir);
  write_matrix_csv(dir / "A_star.csv", inst.A_star);
  write_matrix_csv(dir / "Pi.csv", inst.Pi);
  write_matrix_csv(dir / "Y.csv", inst.Y);
  write_matrix_csv(dir / "T.csv", inst.T);
  Json j;
  j["config"] = config;
  j["seed"] = inst.seed;
  j["setting"] = inst.setting;
  j["rank"] = inst.rank;
  j["snr"] = inst.snr;
  j["sigma_eps"] = inst.sigma_eps;
  j["n1"] = inst.A_star.rows();
  j["n2"] = inst.A_star.cols();
  j["files"] = {"A_star.csv", "Pi.csv", "Y.csv", "T.csv"};
  write_json(dir / "instance.json", j);
}

inline SyntheticInstance read_instance(const std::filesystem::path& dir) {
  const Json j = read_json(dir / "instance.json");
  SyntheticInstance inst;
  try {
    inst.seed = j.at("seed").get<std::uint64_t>();
    inst.setting = j.at("setting").get<int>();
    inst.rank = j.at("rank").get<int>();
    inst.snr = j.at("snr").get<double>();
    inst.sigma_eps = j.at("sigma_eps").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError((dir / "instance.json").string() + ": " + e.what());
  }
  inst.A_star = read_matrix_csv(dir / "A_star.csv");
  inst.Pi = read_matrix_csv(dir / "Pi.csv");
  inst.Y = read_matrix_csv(dir / "Y.csv");
  inst.T = read_matrix_csv(dir / "T.csv");
  require_same_shape(inst.A_star, inst.Pi, "read_instance");
  require_same_shape(inst.A_star, inst.Y, "read_instance");
  require_same_shape(inst.A_star, inst.T, "read_instance");
  return inst;
}

}  // namespace bmc::io
