#pragma once

#include <Eigen/Dense>
#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fic/common.hpp"

namespace fic {

// Column-role declaration for tabular input: one response, disjoint protected
// and uncertain column lists, optional nonnegative weights.
struct Roles {
  std::string response;
  std::vector<std::string> protected_cols;
  std::vector<std::string> uncertain_cols;
  std::optional<std::string> weight;
};

// Regression data: y (n), protected design X (n x p), uncertain design U
// (n x q), weights w (n, all ones unless declared), baseline gamma0 (q).
struct Dataset {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  Eigen::MatrixXd U;
  Eigen::VectorXd w;
  Eigen::VectorXd gamma0;

  int n() const { return static_cast<int>(y.size()); }
  int p() const { return static_cast<int>(X.cols()); }
  int q() const { return static_cast<int>(U.cols()); }
  bool unit_weights() const { return (w.array() == 1.0).all(); }
};

inline Dataset make_dataset(Eigen::VectorXd y, Eigen::MatrixXd X, Eigen::MatrixXd U,
                            std::optional<Eigen::VectorXd> w = std::nullopt,
                            std::optional<Eigen::VectorXd> gamma0 = std::nullopt) {
  Dataset d;
  d.y = std::move(y);
  d.X = std::move(X);
  d.U = std::move(U);
  const int n = d.n();
  if (d.X.rows() != n || d.U.rows() != n)
    throw validation_error("dataset: row counts of y, X, U differ");
  if (n <= d.p() + d.q())
    throw validation_error("insufficient rows: need n > p + q, got n = " + std::to_string(n) +
                           ", p + q = " + std::to_string(d.p() + d.q()));
  d.w = w ? std::move(*w) : Eigen::VectorXd::Ones(n).eval();
  if (d.w.size() != n) throw validation_error("dataset: weight length differs from n");
  if ((d.w.array() < 0.0).any()) throw validation_error("negative weight");
  if (d.w.sum() <= 0.0) throw validation_error("weights must not be all zero");
  d.gamma0 = gamma0 ? std::move(*gamma0) : Eigen::VectorXd::Zero(d.q()).eval();
  if (d.gamma0.size() != d.q()) throw validation_error("dataset: gamma0 length differs from q");
  return d;
}

// Raw tabular records: header plus string cells. Only role-named columns are
// required to be numeric, so unrelated columns may hold anything.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_cell(const std::string& cell, const std::string& col, std::size_t row) {
  const std::string t = trim(cell);
  double value = 0.0;
  const char* begin = t.data();
  const char* end = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end)
    throw validation_error("non-numeric cell '" + cell + "' in column '" + col + "', data row " +
                           std::to_string(row + 1));
  return value;
}

inline int find_column(const Table& t, const std::string& name) {
  for (std::size_t i = 0; i < t.header.size(); ++i)
    if (t.header[i] == name) return static_cast<int>(i);
  throw validation_error("missing column '" + name + "'");
}

}  // namespace detail

// CSV with a header row; cells split on commas, surrounding whitespace ignored.
inline Table read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open data file '" + path + "'");
  Table t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && in.eof()) break;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(detail::trim(cell));
    if (line.empty() || line.back() == ',') cells.emplace_back();
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      if (cells.size() != t.header.size())
        throw validation_error("row " + std::to_string(t.rows.size() + 1) + " has " +
                               std::to_string(cells.size()) + " cells, header has " +
                               std::to_string(t.header.size()));
      t.rows.push_back(std::move(cells));
    }
  }
  if (first) throw validation_error("data file '" + path + "' is empty");
  return t;
}

// Validated dataset from tabular records; row order is preserved.
inline Dataset load_dataset(const Table& t, const Roles& roles,
                            std::optional<Eigen::VectorXd> gamma0 = std::nullopt) {
  for (const auto& c : roles.protected_cols)
    for (const auto& u : roles.uncertain_cols)
      if (c == u) throw validation_error("column '" + c + "' declared both protected and uncertain");

  const int n = static_cast<int>(t.rows.size());
  const int p = static_cast<int>(roles.protected_cols.size());
  const int q = static_cast<int>(roles.uncertain_cols.size());

  const int yc = detail::find_column(t, roles.response);
  std::vector<int> xc(static_cast<std::size_t>(p)), uc(static_cast<std::size_t>(q));
  for (int j = 0; j < p; ++j) xc[j] = detail::find_column(t, roles.protected_cols[j]);
  for (int j = 0; j < q; ++j) uc[j] = detail::find_column(t, roles.uncertain_cols[j]);
  std::optional<int> wc;
  if (roles.weight) wc = detail::find_column(t, *roles.weight);

  Eigen::VectorXd y(n), w = Eigen::VectorXd::Ones(n);
  Eigen::MatrixXd X(n, p), U(n, q);
  for (int i = 0; i < n; ++i) {
    const auto& row = t.rows[static_cast<std::size_t>(i)];
    y(i) = detail::parse_cell(row[yc], roles.response, i);
    for (int j = 0; j < p; ++j) X(i, j) = detail::parse_cell(row[xc[j]], roles.protected_cols[j], i);
    for (int j = 0; j < q; ++j) U(i, j) = detail::parse_cell(row[uc[j]], roles.uncertain_cols[j], i);
    if (wc) w(i) = detail::parse_cell(row[*wc], *roles.weight, i);
  }
  return make_dataset(std::move(y), std::move(X), std::move(U), std::move(w), std::move(gamma0));
}

}  // namespace fic
