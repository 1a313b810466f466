#pragma once

#include <Eigen/Dense>
#include <string>

#include "fic/dataset.hpp"
#include "fic/linalg.hpp"
#include "fic/moments.hpp"
#include "fic/subset.hpp"

namespace fic {

// Least-squares fit of the S-submodel together with the full-model quantities
// every criterion needs. sigma2, D and phi always come from the full model:
//   sigma2 = RSS_full / (n - p - q),  D = sqrt(n)(gamma_full - gamma0),
//   phi = L_n^{-1/2}(gamma_full - gamma0).
struct SubsetFit {
  SubsetId S;
  Eigen::VectorXd beta;        // length p
  Eigen::VectorXd gamma;       // length |S|
  double sigma2 = 0.0;
  Eigen::VectorXd gamma_full;  // length q
  Eigen::VectorXd D;           // length q
  Eigen::VectorXd phi;         // length q
  int n = 0;
};

namespace detail {

// Solves the normal equations of y ~ [X U_sel(cols)] and returns the stacked
// coefficient vector. sel holds 0-based U column indices.
inline Eigen::VectorXd solve_ls(const Dataset& d, const std::vector<int>& sel,
                                const Eigen::VectorXd& y, const std::string& what) {
  const int n = d.n(), p = d.p();
  const int k = p + static_cast<int>(sel.size());
  Eigen::MatrixXd Z(n, k);
  if (p > 0) Z.leftCols(p) = d.X;
  for (std::size_t j = 0; j < sel.size(); ++j) Z.col(p + static_cast<int>(j)) = d.U.col(sel[j]);
  if (k == 0) return Eigen::VectorXd(0);
  const Eigen::MatrixXd gram = (Z.transpose() * Z) / static_cast<double>(n);
  linalg::require_full_rank(gram, what);
  return gram.llt().solve(Z.transpose() * y / static_cast<double>(n));
}

}  // namespace detail

inline SubsetFit fit_subset(const Dataset& d, const SubsetId& S, const MomentMatrices& m) {
  const int n = d.n(), p = d.p(), q = d.q();
  S.validate_within(q);
  if (n - p - q <= 0) throw numerical_error("fit_subset: no residual degrees of freedom");

  SubsetFit fit;
  fit.S = S;
  fit.n = n;

  // Full model on the raw response; the gamma0 shift drops out of residuals.
  std::vector<int> all_cols(static_cast<std::size_t>(q));
  for (int j = 0; j < q; ++j) all_cols[static_cast<std::size_t>(j)] = j;
  const Eigen::VectorXd theta_full = detail::solve_ls(d, all_cols, d.y, "full-model moments");
  fit.gamma_full = theta_full.tail(q);
  Eigen::VectorXd resid = d.y;
  if (p > 0) resid -= d.X * theta_full.head(p);
  if (q > 0) resid -= d.U * fit.gamma_full;
  fit.sigma2 = resid.squaredNorm() / static_cast<double>(n - p - q);
  const Eigen::VectorXd centered = fit.gamma_full - d.gamma0;
  fit.D = std::sqrt(static_cast<double>(n)) * centered;
  fit.phi = q > 0 ? (linalg::spd_inv_sqrt(m.L, "L_n") * centered).eval() : Eigen::VectorXd(0);

  // Submodel: gamma_{S^c} frozen at gamma0, so regress the adjusted response
  // y - U_{S^c} gamma0_{S^c} on [X U_S].
  Eigen::VectorXd y_adj = d.y;
  for (int j = 1; j <= q; ++j)
    if (!S.contains(j)) y_adj -= d.gamma0(j - 1) * d.U.col(j - 1);
  std::vector<int> sel;
  sel.reserve(static_cast<std::size_t>(S.size()));
  for (int j : S.indices()) sel.push_back(j - 1);
  const Eigen::VectorXd theta_S = detail::solve_ls(d, sel, y_adj, "submodel moments");
  fit.beta = theta_S.head(p);
  fit.gamma = theta_S.tail(S.size());
  return fit;
}

inline SubsetFit fit_subset(const Dataset& d, const SubsetId& S) {
  return fit_subset(d, S, compute_moments(d));
}

}  // namespace fic
