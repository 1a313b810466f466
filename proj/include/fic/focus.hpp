#pragma once

#include <Eigen/Dense>
#include <string>

#include "fic/common.hpp"
#include "fic/moments.hpp"

namespace fic {

// The scalar estimand driving selection. Every kind here is a linear
// functional a_x^t beta + a_u^t gamma of the regression surface:
//   gamma_coef j      : mu = gamma_j                  (a = (0, e_j))
//   beta_contrast j   : mu = E(Y|x+e_j,u) - E(Y|x,u)  (a = (e_j, 0))
//   point_prediction  : mu = x0^t beta + u0^t gamma   (a = (x0, u0))
//   custom            : omega given directly, read as the gamma-functional
//                       mu = -omega^t gamma.
struct FocusSpec {
  enum class Kind { gamma_coef, beta_contrast, point_prediction, custom };
  Kind kind = Kind::custom;
  int j = 0;  // 1-based, for the coefficient kinds
  Eigen::VectorXd x0, u0;
  Eigen::VectorXd omega_custom;

  static FocusSpec gamma_coef(int j) {
    FocusSpec f;
    f.kind = Kind::gamma_coef;
    f.j = j;
    return f;
  }
  static FocusSpec beta_contrast(int j) {
    FocusSpec f;
    f.kind = Kind::beta_contrast;
    f.j = j;
    return f;
  }
  static FocusSpec point_prediction(Eigen::VectorXd x0, Eigen::VectorXd u0) {
    FocusSpec f;
    f.kind = Kind::point_prediction;
    f.x0 = std::move(x0);
    f.u0 = std::move(u0);
    return f;
  }
  static FocusSpec custom(Eigen::VectorXd omega) {
    FocusSpec f;
    f.kind = Kind::custom;
    f.omega_custom = std::move(omega);
    return f;
  }
};

// Loading vector (a_x, a_u) with limit estimation error Lambda_S = a^t v_S,
// v_S the stacked submodel error in natural (x, u) coordinates.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> focus_loading(const FocusSpec& f, int p, int q) {
  using Eigen::VectorXd;
  switch (f.kind) {
    case FocusSpec::Kind::gamma_coef: {
      if (f.j < 1 || f.j > q) throw validation_error("focus gamma_j: j out of 1..q");
      VectorXd au = VectorXd::Zero(q);
      au(f.j - 1) = 1.0;
      return {VectorXd::Zero(p), au};
    }
    case FocusSpec::Kind::beta_contrast: {
      if (f.j < 1 || f.j > p) throw validation_error("focus beta_j: j out of 1..p");
      VectorXd ax = VectorXd::Zero(p);
      ax(f.j - 1) = 1.0;
      return {ax, VectorXd::Zero(q)};
    }
    case FocusSpec::Kind::point_prediction: {
      if (f.x0.size() != p || f.u0.size() != q)
        throw validation_error("point-prediction focus needs (x0, u0) of lengths (p, q)");
      if (!f.x0.allFinite() || !f.u0.allFinite())
        throw validation_error("point-prediction focus: non-finite point");
      return {f.x0, f.u0};
    }
    case FocusSpec::Kind::custom: {
      if (f.omega_custom.size() != q) throw validation_error("custom focus omega must have length q");
      return {VectorXd::Zero(p), (-f.omega_custom).eval()};
    }
  }
  throw validation_error("unknown focus kind");
}

// Focus vector omega from the moment blocks:
//   omega = Sigma10 Sigma00^{-1} a_x - a_u,
// which reduces to -e_j for the gamma_j focus and to
// Sigma10 Sigma00^{-1} x0 - u0 for point prediction.
inline Eigen::VectorXd focus_omega(const FocusSpec& f, const Eigen::MatrixXd& sigma, int p, int q) {
  if (f.kind == FocusSpec::Kind::custom) {
    if (f.omega_custom.size() != q) throw validation_error("custom focus omega must have length q");
    return f.omega_custom;
  }
  if (f.kind == FocusSpec::Kind::point_prediction && (f.x0.size() == 0 && f.u0.size() == 0))
    throw validation_error("point-prediction focus: missing evaluation point");
  auto [ax, au] = focus_loading(f, p, q);
  Eigen::VectorXd omega = -au;
  if (p > 0 && q > 0) {
    const Eigen::MatrixXd s00 = sigma.block(0, 0, p, p);
    const Eigen::MatrixXd s10 = sigma.block(p, 0, q, p);
    linalg::require_full_rank(s00, "Sigma00");
    omega += s10 * s00.llt().solve(ax);
  }
  if (!omega.allFinite()) throw numerical_error("focus omega is not finite");
  return omega;
}

inline Eigen::VectorXd focus_omega(const FocusSpec& f, const MomentMatrices& m) {
  return focus_omega(f, m.sigma, m.p, m.q);
}

// Narrow-model limit variance tau0^2 = sigma^2 a_x^t Sigma00^{-1} a_x.
inline double tau0_sq(const FocusSpec& f, const Eigen::MatrixXd& sigma, int p, int q,
                      double sigma_err) {
  auto [ax, au] = focus_loading(f, p, q);
  (void)au;
  if (p == 0) return 0.0;
  const Eigen::MatrixXd s00 = sigma.block(0, 0, p, p);
  return sigma_err * sigma_err * ax.dot(s00.llt().solve(ax));
}

}  // namespace fic
