#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "fic/fit.hpp"
#include "fic/focus.hpp"
#include "fic/moments.hpp"
#include "fic/subset.hpp"

namespace fic {

// Scores for one candidate subset. risk_hat and ave_fic differ by the
// constant (q - p) sigma2 across S; the unbiased risk estimate can go
// negative, which negative_risk flags rather than hides.
struct SubsetScore {
  SubsetId S;
  double risk_hat = 0.0;
  double ave_fic = 0.0;
  std::optional<double> fic_star;
  std::optional<double> cost_adjusted;
  bool negative_risk = false;
};

struct CostModel {
  double alpha = 0.0;
  std::function<double(const SubsetId&)> k;
};

// Unbiased estimate of the limiting (n-scaled, design-averaged) risk:
//   (p - q + 2|S|) sigma2 + D^t L^{-1} D - D^t L^{-1/2} H_S L^{-1/2} D.
// Only defined for unweighted moments; weighted input is refused.
inline double risk_estimate(const SubsetFit& fit, const MomentMatrices& m, const SubsetId& S) {
  if (m.weighted)
    throw validation_error("risk_estimate: unbiasedness holds for unit weights only; "
                           "refusing weighted moments");
  S.validate_within(m.q);
  const double base = (m.p - m.q + 2 * S.size()) * fit.sigma2;
  if (m.q == 0) return base;
  const Eigen::MatrixXd Lmhalf = linalg::spd_inv_sqrt(m.L, "L_n");
  const Eigen::VectorXd t = Lmhalf * fit.D;
  const SubsetBlocks blocks = subset_blocks(m, S);
  return base + t.squaredNorm() - t.dot(blocks.H_S * t);
}

// ave-FIC(S) = sigma2 * 2|S| + n phi^t (I - H_S) phi; smaller is better.
inline double ave_fic(const SubsetFit& fit, const MomentMatrices& m, const SubsetId& S, int n) {
  if (m.weighted)
    throw validation_error("ave_fic: unbiasedness holds for unit weights only; "
                           "refusing weighted moments");
  S.validate_within(m.q);
  double out = 2.0 * S.size() * fit.sigma2;
  if (m.q > 0) {
    const SubsetBlocks blocks = subset_blocks(m, S);
    const Eigen::VectorXd r = (Eigen::MatrixXd::Identity(m.q, m.q) - blocks.H_S) * fit.phi;
    out += static_cast<double>(n) * fit.phi.dot(r);
  }
  return out;
}

// Focused criterion for subset S, on the raw n * mse scale:
//   {omega^t (I - G_S) D}^2 + 2 sigma2 omega_S^t L_S omega_S,
// with G_S = pi_S^t L_S pi_S L^{-1} (so G_empty = 0 and G_full = I). The
// endpoints are the narrow statistic n{omega^t(gamma_full - gamma0)}^2 and
// twice the full-model variance omega^t K omega.
inline double fic_raw(const SubsetFit& fit, const MomentMatrices& m, const SubsetId& S,
                      const Eigen::VectorXd& omega_hat) {
  S.validate_within(m.q);
  if (omega_hat.size() != m.q) throw validation_error("fic_raw: omega length differs from q");
  Eigen::VectorXd proj = Eigen::VectorXd::Zero(m.q);  // G_S^t omega
  double penalty = 0.0;
  if (!S.is_empty()) {
    const SubsetBlocks blocks = subset_blocks(m, S);
    const Eigen::MatrixXd pi = S.projection(m.q);
    const Eigen::MatrixXd Linv = linalg::spd_inverse(m.L, "L_n");
    proj = Linv * pi.transpose() * blocks.L_S * pi * omega_hat;
    const Eigen::VectorXd omega_S = S.pick(omega_hat);
    penalty = 2.0 * fit.sigma2 * omega_S.dot(blocks.L_S * omega_S);
  }
  const double bias = (omega_hat - proj).dot(fit.D);
  return bias * bias + penalty;
}

enum class FicStarMode { general, narrow, full_model };

// Scale-free normalization FIC*(S) = FIC(S) / omega^t K omega. The full model
// is pinned to 2 exactly; the narrow model is n{omega^t(gamma_full-gamma0)}^2
// over the same divisor.
inline double fic_star(double raw_fic, const Eigen::VectorXd& omega_hat,
                       const Eigen::MatrixXd& K_hat, FicStarMode mode, const SubsetFit& fit,
                       int n) {
  (void)n;  // D already carries the sqrt(n) scaling
  if (mode == FicStarMode::full_model) return 2.0;
  const double divisor = omega_hat.dot(K_hat * omega_hat);
  if (!(divisor > 0.0))
    throw numerical_error("fic_star: omega^t K omega <= 0 (degenerate focus)");
  if (mode == FicStarMode::narrow) {
    const double num = omega_hat.dot(fit.D);  // sqrt(n) omega^t (gamma_full - gamma0)
    return num * num / divisor;
  }
  return raw_fic / divisor;
}

inline double cost_adjusted(double score, const CostModel& cm, const SubsetId& S) {
  if (!std::isfinite(score)) throw validation_error("cost_adjusted: score not finite");
  if (cm.alpha < 0.0) throw validation_error("cost_adjusted: alpha must be nonnegative");
  const double cost = cm.k ? cm.k(S) : 0.0;
  if (cost < 0.0) throw validation_error("cost_adjusted: negative cost k(S)");
  return score + cm.alpha * cost;
}

// Goodness-of-fit statistic n(gamma_full - gamma0)^t K^{-1} (gamma_full - gamma0);
// chi^2_q(delta^t K^{-1} delta) in the limit. Returns (statistic, dof).
inline std::pair<double, int> gof_statistic(const SubsetFit& fit, const Eigen::MatrixXd& K_hat,
                                            int /*n*/) {
  const int q = static_cast<int>(fit.D.size());
  if (K_hat.rows() != q || K_hat.cols() != q)
    throw validation_error("gof_statistic: K must be q x q");
  if (!linalg::is_spd(K_hat)) throw numerical_error("gof_statistic: K is singular or not SPD");
  return {fit.D.dot(K_hat.llt().solve(fit.D)), q};
}

enum class ScoreKey { risk, ave_fic, fic_star, cost_adjusted };

inline double score_value(const SubsetScore& s, ScoreKey key) {
  switch (key) {
    case ScoreKey::risk: return s.risk_hat;
    case ScoreKey::ave_fic: return s.ave_fic;
    case ScoreKey::fic_star:
      if (!s.fic_star) throw validation_error("ranking by fic_star but no focus was supplied");
      return *s.fic_star;
    case ScoreKey::cost_adjusted:
      if (!s.cost_adjusted) throw validation_error("ranking by cost_adjusted but no cost model");
      return *s.cost_adjusted;
  }
  throw validation_error("unknown score key");
}

// Ascending by the chosen score; ties go to the smaller subset, then
// lexicographic order; truncated to the m most promising models.
inline std::vector<SubsetScore> rank_and_shortlist(std::vector<SubsetScore> scores, int m,
                                                   ScoreKey key = ScoreKey::risk) {
  if (scores.empty()) throw validation_error("rank_and_shortlist: no scores");
  if (m < 1) throw validation_error("rank_and_shortlist: shortlist size must be >= 1");
  std::stable_sort(scores.begin(), scores.end(), [&](const SubsetScore& a, const SubsetScore& b) {
    const double va = score_value(a, key), vb = score_value(b, key);
    if (va != vb) return va < vb;
    return subset_parsimony_less(a.S, b.S);
  });
  if (static_cast<int>(scores.size()) > m) scores.resize(static_cast<std::size_t>(m));
  return scores;
}

}  // namespace fic
