#pragma once

#include <Eigen/Dense>

#include "fic/dataset.hpp"
#include "fic/linalg.hpp"
#include "fic/subset.hpp"

namespace fic {

// Moment matrices of the stacked design [X U]:
//   Sigma = n^{-1} sum_i (x_i, u_i)(x_i, u_i)^t, with blocks
//   [ Sigma00  Sigma01 ]
//   [ Sigma10  Sigma11 ],
//   Omega the w-weighted analogue, and L the (uncertain, uncertain) block of
//   Sigma^{-1}, equal to the Schur-complement inverse
//   (Sigma11 - Sigma10 Sigma00^{-1} Sigma01)^{-1}.
struct MomentMatrices {
  Eigen::MatrixXd sigma;   // (p+q) x (p+q)
  Eigen::MatrixXd omega;   // (p+q) x (p+q)
  Eigen::MatrixXd L;       // q x q
  int p = 0;
  int q = 0;
  bool weighted = false;   // built with use_weights and non-unit weights

  Eigen::Block<const Eigen::MatrixXd> sigma00() const { return sigma.block(0, 0, p, p); }
  Eigen::Block<const Eigen::MatrixXd> sigma01() const { return sigma.block(0, p, p, q); }
  Eigen::Block<const Eigen::MatrixXd> sigma10() const { return sigma.block(p, 0, q, p); }
  Eigen::Block<const Eigen::MatrixXd> sigma11() const { return sigma.block(p, p, q, q); }
};

// L = (Sigma11 - Sigma10 Sigma00^{-1} Sigma01)^{-1} from a stacked moment matrix.
inline Eigen::MatrixXd schur_uncertain_block(const Eigen::MatrixXd& sigma, int p, int q) {
  if (q == 0) return Eigen::MatrixXd(0, 0);
  const Eigen::MatrixXd s00 = sigma.block(0, 0, p, p);
  const Eigen::MatrixXd s01 = sigma.block(0, p, p, q);
  const Eigen::MatrixXd s11 = sigma.block(p, p, q, q);
  Eigen::MatrixXd schur = s11;
  if (p > 0) {
    linalg::require_full_rank(s00, "protected moment block");
    schur -= s01.transpose() * s00.llt().solve(s01);
  }
  return linalg::spd_inverse(schur, "uncertain-block Schur complement");
}

inline MomentMatrices compute_moments(const Dataset& d, bool use_weights = false) {
  const int n = d.n(), p = d.p(), q = d.q();
  Eigen::MatrixXd Z(n, p + q);
  Z << d.X, d.U;
  MomentMatrices m;
  m.p = p;
  m.q = q;
  m.sigma = (Z.transpose() * Z) / static_cast<double>(n);
  if (use_weights && !d.unit_weights()) {
    m.omega = (Z.transpose() * d.w.asDiagonal() * Z) / static_cast<double>(n);
    m.weighted = true;
  } else {
    m.omega = m.sigma;
  }
  linalg::require_full_rank(m.sigma, "moment matrix Sigma_n");
  m.L = schur_uncertain_block(m.sigma, p, q);
  return m;
}

// Per-subset blocks: L_S = (pi_S L^{-1} pi_S^t)^{-1} and the rank-|S| projector
// H_S = L^{-1/2} pi_S^t L_S pi_S L^{-1/2} (symmetric spectral root throughout).
struct SubsetBlocks {
  Eigen::MatrixXd L_S;  // |S| x |S|
  Eigen::MatrixXd H_S;  // q x q, symmetric idempotent with trace |S|
};

inline SubsetBlocks subset_blocks(const Eigen::MatrixXd& L, const SubsetId& S) {
  const int q = static_cast<int>(L.rows());
  S.validate_within(q);
  SubsetBlocks out;
  if (S.is_empty()) {
    out.L_S = Eigen::MatrixXd(0, 0);
    out.H_S = Eigen::MatrixXd::Zero(q, q);
    return out;
  }
  const Eigen::MatrixXd Linv = linalg::spd_inverse(L, "L_n");
  out.L_S = linalg::spd_inverse(S.pick_square(Linv), "pi_S L^{-1} pi_S^t");
  const Eigen::MatrixXd Lmhalf = linalg::spd_inv_sqrt(L, "L_n");
  const Eigen::MatrixXd pi = S.projection(q);
  out.H_S = Lmhalf * pi.transpose() * out.L_S * pi * Lmhalf;
  return out;
}

inline SubsetBlocks subset_blocks(const MomentMatrices& m, const SubsetId& S) {
  return subset_blocks(m.L, S);
}

}  // namespace fic
