#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "fic/common.hpp"

namespace fic::linalg {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Smallest/largest eigenvalue magnitude of a symmetric matrix; 0 for empty.
inline double sym_eigen_ratio(const MatrixXd& m) {
  if (m.rows() == 0) return 1.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
  const VectorXd ev = es.eigenvalues().cwiseAbs();
  const double largest = ev.maxCoeff();
  if (largest == 0.0) return 0.0;
  return ev.minCoeff() / largest;
}

inline void require_full_rank(const MatrixXd& sym, const std::string& what) {
  if (sym_eigen_ratio(sym) < kRankTol)
    throw numerical_error(what + ": rank deficient (eigenvalue ratio below 1e-10)");
}

inline bool is_spd(const MatrixXd& m, double tol = kRankTol) {
  if (m.rows() != m.cols()) return false;
  if (m.rows() == 0) return true;
  if (!m.isApprox(m.transpose(), 1e-10)) return false;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
  const double largest = es.eigenvalues().cwiseAbs().maxCoeff();
  return es.eigenvalues().minCoeff() > tol * std::max(largest, 1.0);
}

// Symmetric (spectral) positive-definite matrix root: V diag(lambda^pow) V^t.
inline MatrixXd spd_power(const MatrixXd& m, double pow, const std::string& what) {
  if (m.rows() == 0) return m;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  const VectorXd ev = es.eigenvalues();
  if (ev.minCoeff() <= 0.0 || ev.minCoeff() < kRankTol * ev.maxCoeff())
    throw numerical_error(what + ": matrix is not positive definite");
  return es.eigenvectors() * ev.array().pow(pow).matrix().asDiagonal() *
         es.eigenvectors().transpose();
}

inline MatrixXd spd_sqrt(const MatrixXd& m, const std::string& what = "spd_sqrt") {
  return spd_power(m, 0.5, what);
}

inline MatrixXd spd_inv_sqrt(const MatrixXd& m, const std::string& what = "spd_inv_sqrt") {
  return spd_power(m, -0.5, what);
}

inline MatrixXd spd_inverse(const MatrixXd& m, const std::string& what = "spd_inverse") {
  return spd_power(m, -1.0, what);
}

// Lower Cholesky factor, for Gaussian sampling.
inline MatrixXd chol_lower(const MatrixXd& spd, const std::string& what = "chol") {
  if (spd.rows() == 0) return spd;
  Eigen::LLT<MatrixXd> llt(spd);
  if (llt.info() != Eigen::Success)
    throw numerical_error(what + ": Cholesky factorization failed (matrix not SPD)");
  return llt.matrixL();
}

// Deterministic n x k design whose exact sample moment matrix D^t D / n equals
// the given SPD matrix: orthonormalized polynomial columns scaled by sqrt(n),
// then rotated by the symmetric root of the target moments. The first column
// of the orthonormal basis is constant, which keeps an intercept available.
inline MatrixXd orthonormal_columns(int n, int k) {
  if (k > n) throw validation_error("orthonormal_columns: need n >= k");
  MatrixXd raw(n, k);
  for (int i = 0; i < n; ++i) {
    const double t = 2.0 * (i + 0.5) / n - 1.0;  // in (-1, 1)
    double tj = 1.0;
    for (int j = 0; j < k; ++j) {
      raw(i, j) = tj;
      tj *= t;
    }
  }
  Eigen::HouseholderQR<MatrixXd> qr(raw);
  MatrixXd q = qr.householderQ() * MatrixXd::Identity(n, k);
  // fix the QR sign ambiguity so the construction is reproducible by content
  for (int j = 0; j < k; ++j)
    if (q(0, j) < 0.0) q.col(j) = -q.col(j);
  return std::sqrt(static_cast<double>(n)) * q;
}

inline MatrixXd design_with_moments(int n, const MatrixXd& moments) {
  const int k = static_cast<int>(moments.rows());
  if (k == 0) return MatrixXd(n, 0);
  return orthonormal_columns(n, k) * spd_sqrt(moments, "design_with_moments");
}

}  // namespace fic::linalg
