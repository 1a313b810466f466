#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <utility>

#include "fic/common.hpp"
#include "fic/focus.hpp"
#include "fic/limit.hpp"
#include "fic/subset.hpp"

namespace fic {

// Derivatives of the focus mu at the narrow point (theta0, gamma0), in the
// S-model parametrization: gradient dmu/dphi_S, second derivatives mu11_S in
// the (p+|S|) S-model parameters, mu22 in the full gamma, and the S-model
// information matrix J_S.
struct FocusDerivatives {
  Eigen::VectorXd dmu_dphi_S;  // length p + |S|
  Eigen::MatrixXd mu11_S;      // (p+|S|) x (p+|S|)
  Eigen::MatrixXd mu22;        // q x q
  Eigen::MatrixXd J_S;         // (p+|S|) x (p+|S|), SPD
};

// The O(1/sqrt(n)) mean-expansion coefficient m_S(delta) of the S-model
// estimator. Identically zero for unbiased-estimator models (least squares);
// anything else is a user-supplied component.
struct BiasModel {
  std::function<Eigen::VectorXd(const SubsetId&, const Eigen::VectorXd&)> m_S;
  bool zero_bias = true;

  static BiasModel zero() { return BiasModel{}; }
  static BiasModel user(std::function<Eigen::VectorXd(const SubsetId&, const Eigen::VectorXd&)> fn) {
    BiasModel b;
    b.m_S = std::move(fn);
    b.zero_bias = false;
    return b;
  }
};

// First-order bias/variance plus the second-order bias coefficient, with the
// leading risk B1^2 + V1 and its sqrt(n)-corrected version.
struct RiskExpansion {
  double B1 = 0.0;
  double V1 = 0.0;
  double B2 = 0.0;

  double leading() const { return B1 * B1 + V1; }
  double correction(std::int64_t n) const { return 2.0 * B1 * B2 / std::sqrt(static_cast<double>(n)); }
  double corrected(std::int64_t n) const { return leading() + correction(n); }
};

// B1 = E Lambda_S and V1 = Var Lambda_S for a linear focus, computed from the
// stacked submodel limit law. B1^2 + V1 equals the rank-one-Omega limit risk.
inline std::pair<double, double> b1_v1_from_limit(const LimitSpec& spec, const SubsetId& S,
                                                  const FocusSpec& focus) {
  auto [ax, au] = focus_loading(focus, spec.p, spec.q);
  Eigen::VectorXd a(spec.dim());
  a << ax, au;
  const StackedErrorLaw law = stacked_error_law(spec, S);
  return {a.dot(law.mean), a.dot(law.cov * a)};
}

// Second-order bias coefficient
//   B2(S, delta) = (dmu/dphi_S)^t m_S(delta) + Tr(mu11_S J_S^{-1}) / 2
//                  - delta^t mu22 delta / 2.
inline double b2_term(const FocusDerivatives& fd, const BiasModel& bm, const SubsetId& S,
                      const Eigen::VectorXd& delta) {
  const auto dim_S = fd.dmu_dphi_S.size();
  if (fd.mu11_S.rows() != dim_S || fd.mu11_S.cols() != dim_S)
    throw validation_error("b2_term: mu11_S dimension differs from dmu/dphi_S");
  if (fd.J_S.rows() != dim_S || fd.J_S.cols() != dim_S)
    throw validation_error("b2_term: J_S dimension differs from dmu/dphi_S");
  if (fd.mu22.rows() != delta.size() || fd.mu22.cols() != delta.size())
    throw validation_error("b2_term: mu22 must be q x q");
  if (!linalg::is_spd(fd.J_S)) throw numerical_error("b2_term: J_S is not SPD");

  double out = 0.0;
  if (!bm.zero_bias) {
    const Eigen::VectorXd m = bm.m_S(S, delta);
    if (m.size() != dim_S) throw validation_error("b2_term: m_S(delta) has the wrong length");
    if (!m.allFinite()) throw numerical_error("b2_term: m_S(delta) is not finite");
    out += fd.dmu_dphi_S.dot(m);
  }
  if (dim_S > 0) out += 0.5 * fd.J_S.llt().solve(fd.mu11_S).trace();
  out -= 0.5 * delta.dot(fd.mu22 * delta);
  return out;
}

struct CorrectedRisk {
  double leading = 0.0;
  double correction = 0.0;
  double value = 0.0;
};

// risk_n(S, delta) = E Lambda_S^2 + 2 B1 B2 / sqrt(n); both terms reported so
// callers can see the correction magnitude.
inline CorrectedRisk corrected_risk(const RiskExpansion& expansion, std::int64_t n) {
  if (n < 1) throw validation_error("corrected_risk: n must be >= 1");
  CorrectedRisk out;
  out.leading = expansion.leading();
  out.correction = expansion.correction(n);
  out.value = out.leading + out.correction;
  return out;
}

// Central finite differences of a focus mu(theta, gamma), with steps scaled
// relative to the coordinate magnitude.
struct FiniteDiffResult {
  Eigen::VectorXd dtheta;           // length p
  Eigen::VectorXd dgamma;           // length q
  Eigen::MatrixXd d2_theta_theta;   // p x p
  Eigen::MatrixXd d2_theta_gamma;   // p x q
  Eigen::MatrixXd d2_gamma_gamma;   // q x q
};

inline FiniteDiffResult finite_difference_derivatives(
    const std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>& mu,
    const Eigen::VectorXd& theta0, const Eigen::VectorXd& gamma0, double h = 1e-4) {
  if (!(h > 0.0)) throw validation_error("finite differences: step must be positive");
  const int p = static_cast<int>(theta0.size());
  const int q = static_cast<int>(gamma0.size());
  Eigen::VectorXd x(p + q);
  x << theta0, gamma0;
  Eigen::VectorXd step(p + q);
  for (int i = 0; i < p + q; ++i) step(i) = h * std::max(1.0, std::abs(x(i)));

  auto eval = [&](const Eigen::VectorXd& point) {
    const double v = mu(point.head(p), point.tail(q));
    if (!std::isfinite(v)) throw numerical_error("finite differences: focus evaluation not finite");
    return v;
  };

  const double f0 = eval(x);
  Eigen::VectorXd grad(p + q);
  Eigen::MatrixXd hess(p + q, p + q);
  for (int i = 0; i < p + q; ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += step(i);
    xm(i) -= step(i);
    const double fp = eval(xp), fm = eval(xm);
    grad(i) = (fp - fm) / (2.0 * step(i));
    hess(i, i) = (fp - 2.0 * f0 + fm) / (step(i) * step(i));
  }
  for (int i = 0; i < p + q; ++i) {
    for (int j = i + 1; j < p + q; ++j) {
      Eigen::VectorXd xpp = x, xpm = x, xmp = x, xmm = x;
      xpp(i) += step(i); xpp(j) += step(j);
      xpm(i) += step(i); xpm(j) -= step(j);
      xmp(i) -= step(i); xmp(j) += step(j);
      xmm(i) -= step(i); xmm(j) -= step(j);
      hess(i, j) = (eval(xpp) - eval(xpm) - eval(xmp) + eval(xmm)) / (4.0 * step(i) * step(j));
      hess(j, i) = hess(i, j);
    }
  }
  if (!grad.allFinite() || !hess.allFinite())
    throw numerical_error("finite differences: non-finite derivative detected");

  FiniteDiffResult out;
  out.dtheta = grad.head(p);
  out.dgamma = grad.tail(q);
  out.d2_theta_theta = hess.block(0, 0, p, p);
  out.d2_theta_gamma = hess.block(0, p, p, q);
  out.d2_gamma_gamma = hess.block(p, p, q, q);
  return out;
}

// Assembles FocusDerivatives for the S-model from full-model derivative blocks:
// dmu/dphi_S = (dtheta ; pi_S dgamma) and mu11_S is the matching sub-block of
// the full Hessian.
inline FocusDerivatives focus_derivatives_for_subset(const FiniteDiffResult& fd, const SubsetId& S,
                                                     Eigen::MatrixXd J_S) {
  const int p = static_cast<int>(fd.dtheta.size());
  const int q = static_cast<int>(fd.dgamma.size());
  S.validate_within(q);
  const int m = p + S.size();
  FocusDerivatives out;
  out.dmu_dphi_S.resize(m);
  out.dmu_dphi_S.head(p) = fd.dtheta;
  out.dmu_dphi_S.tail(S.size()) = S.pick(fd.dgamma);
  out.mu11_S.resize(m, m);
  out.mu11_S.block(0, 0, p, p) = fd.d2_theta_theta;
  const Eigen::MatrixXd pi = S.projection(q);
  out.mu11_S.block(0, p, p, S.size()) = fd.d2_theta_gamma * pi.transpose();
  out.mu11_S.block(p, 0, S.size(), p) = out.mu11_S.block(0, p, p, S.size()).transpose();
  out.mu11_S.block(p, p, S.size(), S.size()) = S.pick_square(fd.d2_gamma_gamma);
  out.mu22 = fd.d2_gamma_gamma;
  out.J_S = std::move(J_S);
  return out;
}

}  // namespace fic
