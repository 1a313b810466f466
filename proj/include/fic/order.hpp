#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "fic/common.hpp"
#include "fic/limit.hpp"
#include "fic/linalg.hpp"
#include "fic/parallel.hpp"
#include "fic/rng.hpp"
#include "fic/stats.hpp"

namespace fic {

inline constexpr double kInfiniteShift = std::numeric_limits<double>::infinity();

// Nested-model order problem. shifts holds delta_k / sigma_k: finite values in
// the local regime, +inf markers for k <= k0 in the fixed regime, and zero for
// k >= k0 + 1 in both. corr is the correlation matrix of the limit variables
// Z_1..Z_K (inherited from the design: the standardized inverse moment matrix).
struct OrderSpec {
  enum class Regime { fixed_coefficients, local_shift };
  int K = 0;
  int k0 = 0;
  Eigen::VectorXd shifts;
  Eigen::MatrixXd corr;
  Eigen::VectorXd alphas;
  Regime regime = Regime::local_shift;
};

inline OrderSpec make_order_spec(int K, int k0, Eigen::VectorXd shifts, Eigen::MatrixXd corr,
                                 Eigen::VectorXd alphas, OrderSpec::Regime regime) {
  if (K < 1) throw validation_error("order spec: K must be >= 1");
  if (k0 < 0 || k0 > K) throw validation_error("order spec: need 0 <= k0 <= K");
  if (shifts.size() != K) throw validation_error("order spec: shifts must have length K");
  if (alphas.size() != K) throw validation_error("order spec: alphas must have length K");
  for (int k = 0; k < K; ++k)
    if (!(alphas(k) > 0.0 && alphas(k) < 1.0))
      throw validation_error("order spec: alphas must lie in (0, 1)");
  if (corr.rows() != K || corr.cols() != K) throw validation_error("order spec: corr must be K x K");
  if (!corr.isApprox(corr.transpose(), 1e-10)) throw validation_error("order spec: corr not symmetric");
  for (int k = 0; k < K; ++k)
    if (std::abs(corr(k, k) - 1.0) > 1e-10)
      throw validation_error("order spec: corr must have unit diagonal");
  for (int k = k0; k < K; ++k)
    if (shifts(k) != 0.0)
      throw validation_error("order spec: shifts must be zero for k >= k0 + 1");
  for (int k = 0; k < k0; ++k) {
    const bool finite = std::isfinite(shifts(k));
    if (regime == OrderSpec::Regime::local_shift && !finite)
      throw validation_error("order spec: infinite shift in local regime");
    if (regime == OrderSpec::Regime::fixed_coefficients && finite)
      throw validation_error("order spec: fixed regime marks k <= k0 with infinite shifts");
  }
  OrderSpec spec;
  spec.K = K;
  spec.k0 = k0;
  spec.shifts = std::move(shifts);
  spec.corr = std::move(corr);
  spec.alphas = std::move(alphas);
  spec.regime = regime;
  return spec;
}

// Backward order estimate: the largest index whose test rejects, 0 if none.
// Equivalently, scan from K downward past acceptances to the first rejection.
inline int estimate_order_backward(const Eigen::VectorXd& z_stats, const Eigen::VectorXd& alphas) {
  const int K = static_cast<int>(z_stats.size());
  if (alphas.size() != K) throw validation_error("order estimate: alphas length mismatch");
  for (int k = K; k >= 1; --k)
    if (std::abs(z_stats(k - 1)) >= two_sided_threshold(alphas(k - 1))) return k;
  return 0;
}

// Forward order estimate: scan k = 1..K and stop at the first acceptance,
// returning k - 1; K if every test rejects.
inline int estimate_order_forward(const Eigen::VectorXd& z_stats, const Eigen::VectorXd& alphas) {
  const int K = static_cast<int>(z_stats.size());
  if (alphas.size() != K) throw validation_error("order estimate: alphas length mismatch");
  for (int k = 1; k <= K; ++k)
    if (std::abs(z_stats(k - 1)) < two_sided_threshold(alphas(k - 1))) return k - 1;
  return K;
}

enum class OrderEstimator { backward, forward };

// Distribution of an order estimate over k = 0..K. se is zero on the
// closed-form path and the per-cell binomial standard error on the MC path.
struct OrderDistribution {
  Eigen::VectorXd probs;
  Eigen::VectorXd se;
  OrderSpec::Regime regime = OrderSpec::Regime::local_shift;
  std::int64_t draws = 0;  // 0 when closed form
  std::uint64_t seed = 0;
};

namespace detail {

inline bool is_identity_corr(const Eigen::MatrixXd& corr) {
  return (corr - Eigen::MatrixXd::Identity(corr.rows(), corr.cols())).cwiseAbs().maxCoeff() < 1e-12;
}

// Acceptance probability of |shift + Z| < z_{alpha/2} for standard normal Z.
inline double acceptance_prob(double shift, double alpha) {
  if (!std::isfinite(shift)) return 0.0;
  const double c = two_sided_threshold(alpha);
  return norm_cdf(c - shift) - norm_cdf(-c - shift);
}

}  // namespace detail

// Limit distribution of the backward or forward order estimate. Independent
// Z's (corr = I) are evaluated in closed form as products of normal-interval
// probabilities; correlated Z's by Monte Carlo with per-cell standard errors.
// force_mc routes an independent spec through the MC path anyway.
inline OrderDistribution limit_distribution(const OrderSpec& spec, OrderEstimator which,
                                            std::int64_t R = 100000, std::uint64_t seed = 0,
                                            int threads = 1, bool force_mc = false) {
  const int K = spec.K;
  OrderDistribution out;
  out.regime = spec.regime;
  out.seed = seed;
  out.probs = Eigen::VectorXd::Zero(K + 1);
  out.se = Eigen::VectorXd::Zero(K + 1);

  if (!force_mc && detail::is_identity_corr(spec.corr)) {
    Eigen::VectorXd a(K), r(K);
    for (int k = 0; k < K; ++k) {
      a(k) = detail::acceptance_prob(spec.shifts(k), spec.alphas(k));
      r(k) = 1.0 - a(k);
    }
    if (which == OrderEstimator::backward) {
      double tail = 1.0;  // prod of a_j for j > k
      for (int k = K; k >= 1; --k) {
        out.probs(k) = r(k - 1) * tail;
        tail *= a(k - 1);
      }
      out.probs(0) = tail;
    } else {
      double head = 1.0;  // prod of r_j for j <= k
      for (int k = 0; k <= K - 1; ++k) {
        out.probs(k) = head * a(k);
        head *= r(k);
      }
      out.probs(K) = head;
    }
    return out;
  }

  if (R < 10000) throw validation_error("limit_distribution: MC path needs R >= 10000");
  const Eigen::MatrixXd A = linalg::chol_lower(spec.corr, "order correlation matrix");
  const std::int64_t n_chunks = (R + kDefaultChunk - 1) / kDefaultChunk;
  std::vector<std::vector<std::int64_t>> counts(
      static_cast<std::size_t>(n_chunks), std::vector<std::int64_t>(static_cast<std::size_t>(K) + 1, 0));
  for_each_chunk(R, kDefaultChunk, threads, [&](std::int64_t c, std::int64_t b, std::int64_t e) {
    auto& local = counts[static_cast<std::size_t>(c)];
    Eigen::VectorXd z(K), shifted(K);
    for (std::int64_t i = b; i < e; ++i) {
      NormalStream ns(seed, static_cast<std::uint64_t>(i));
      for (int k = 0; k < K; ++k) z(k) = ns();
      shifted = spec.shifts + A * z;
      const int k_hat = which == OrderEstimator::backward
                            ? estimate_order_backward(shifted, spec.alphas)
                            : estimate_order_forward(shifted, spec.alphas);
      ++local[static_cast<std::size_t>(k_hat)];
    }
  });
  Eigen::VectorXd total = Eigen::VectorXd::Zero(K + 1);
  for (const auto& local : counts)
    for (int k = 0; k <= K; ++k) total(k) += static_cast<double>(local[static_cast<std::size_t>(k)]);
  out.draws = R;
  out.probs = total / static_cast<double>(R);
  for (int k = 0; k <= K; ++k)
    out.se(k) = std::sqrt(out.probs(k) * (1.0 - out.probs(k)) / static_cast<double>(R));
  return out;
}

inline double total_variation(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size()) throw validation_error("total_variation: length mismatch");
  return 0.5 * (p - q).cwiseAbs().sum();
}

// Correlation of the limit Z's implied by design moments Q: the standardized
// Q^{-1}, since sqrt(n)(beta_hat - beta) has covariance sigma^2 Q^{-1}.
inline Eigen::MatrixXd z_correlation_from_moments(const Eigen::MatrixXd& Q) {
  const Eigen::MatrixXd Qinv = linalg::spd_inverse(Q, "design moments");
  const Eigen::VectorXd d = Qinv.diagonal().cwiseSqrt();
  Eigen::MatrixXd corr = Qinv;
  for (Eigen::Index r = 0; r < corr.rows(); ++r)
    for (Eigen::Index c = 0; c < corr.cols(); ++c) corr(r, c) /= d(r) * d(c);
  // clean the diagonal exactly
  for (Eigen::Index r = 0; r < corr.rows(); ++r) corr(r, r) = 1.0;
  return corr;
}

// Per-coefficient limit scale sigma_k = sigma ((Q^{-1})_{kk})^{1/2}.
inline Eigen::VectorXd sigma_k_from_moments(const Eigen::MatrixXd& Q, double sigma) {
  return sigma * linalg::spd_inverse(Q, "design moments").diagonal().cwiseSqrt();
}

// Generator for the nested regression model: a deterministic n x K design with
// exact moment matrix Q, and noise scale sigma.
struct NestedDesign {
  Eigen::MatrixXd Q;
  double sigma = 1.0;

  static NestedDesign orthonormal(int K, double sigma = 1.0) {
    return NestedDesign{Eigen::MatrixXd::Identity(K, K), sigma};
  }
  Eigen::MatrixXd materialize(int n) const { return linalg::design_with_moments(n, Q); }
};

struct FiniteSampleResult {
  OrderDistribution backward;
  OrderDistribution forward;
  double tv_backward = 0.0;  // total-variation distance to the limit law
  double tv_forward = 0.0;
};

// Simulates the finite-n nested regression y = sum_{k<=k0} beta_k u_k + noise
// with beta_k = shifts_k sigma_k / sqrt(n), forms studentized statistics
// Z_{k,n} = sqrt(n) betahat_k / sigmahat_k, applies both order estimators and
// tabulates, reporting TV distance to the limit distributions.
inline FiniteSampleResult finite_sample_distribution(const NestedDesign& design,
                                                     const OrderSpec& spec, int n, std::int64_t R,
                                                     std::uint64_t seed, int threads = 1) {
  const int K = spec.K;
  if (design.Q.rows() != K) throw validation_error("finite sample: design dimension differs from K");
  if (!spec.shifts.allFinite())
    throw validation_error("finite sample: shifts must be finite (use large local shifts "
                           "to emulate fixed coefficients)");
  if (n <= K) throw validation_error("finite sample: need n > K");
  if (R < 1) throw validation_error("finite sample: R must be >= 1");
  if (!spec.corr.isApprox(z_correlation_from_moments(design.Q), 1e-6))
    throw validation_error("finite sample: spec.corr is not the standardized inverse of design.Q");

  const Eigen::MatrixXd U = design.materialize(n);
  const Eigen::MatrixXd Qn = (U.transpose() * U) / static_cast<double>(n);
  const Eigen::LLT<Eigen::MatrixXd> llt(Qn);
  const Eigen::VectorXd qinv_diag =
      llt.solve(Eigen::MatrixXd::Identity(K, K)).diagonal();
  const double root_n = std::sqrt(static_cast<double>(n));
  const Eigen::VectorXd sigma_k = sigma_k_from_moments(Qn, design.sigma);
  const Eigen::VectorXd beta = (spec.shifts.array() * sigma_k.array() / root_n).matrix();
  const Eigen::VectorXd mu = U * beta;
  const Eigen::VectorXd Ut_mu = U.transpose() * mu;
  const double mu_sq = mu.squaredNorm();

  const std::int64_t n_chunks = (R + kDefaultChunk - 1) / kDefaultChunk;
  std::vector<std::vector<std::int64_t>> counts_b(
      static_cast<std::size_t>(n_chunks), std::vector<std::int64_t>(static_cast<std::size_t>(K) + 1, 0));
  auto counts_f = counts_b;
  for_each_chunk(R, kDefaultChunk, threads, [&](std::int64_t c, std::int64_t b, std::int64_t e) {
    auto& local_b = counts_b[static_cast<std::size_t>(c)];
    auto& local_f = counts_f[static_cast<std::size_t>(c)];
    Eigen::VectorXd eps(n), Ut_y(K), beta_hat(K), z(K);
    for (std::int64_t i = b; i < e; ++i) {
      NormalStream ns(seed, static_cast<std::uint64_t>(i));
      for (int r = 0; r < n; ++r) eps(r) = design.sigma * ns();
      Ut_y = Ut_mu + U.transpose() * eps;
      beta_hat = llt.solve(Ut_y / static_cast<double>(n));
      const double y_sq = mu_sq + 2.0 * mu.dot(eps) + eps.squaredNorm();
      const double rss = y_sq - beta_hat.dot(Ut_y);
      const double sigma_hat = std::sqrt(rss / static_cast<double>(n - K));
      for (int k = 0; k < K; ++k)
        z(k) = root_n * beta_hat(k) / (sigma_hat * std::sqrt(qinv_diag(k)));
      ++local_b[static_cast<std::size_t>(estimate_order_backward(z, spec.alphas))];
      ++local_f[static_cast<std::size_t>(estimate_order_forward(z, spec.alphas))];
    }
  });

  auto tabulate = [&](const std::vector<std::vector<std::int64_t>>& counts) {
    OrderDistribution d;
    d.regime = spec.regime;
    d.seed = seed;
    d.draws = R;
    d.probs = Eigen::VectorXd::Zero(K + 1);
    d.se = Eigen::VectorXd::Zero(K + 1);
    for (const auto& local : counts)
      for (int k = 0; k <= K; ++k) d.probs(k) += static_cast<double>(local[static_cast<std::size_t>(k)]);
    d.probs /= static_cast<double>(R);
    for (int k = 0; k <= K; ++k)
      d.se(k) = std::sqrt(d.probs(k) * (1.0 - d.probs(k)) / static_cast<double>(R));
    return d;
  };

  FiniteSampleResult out;
  out.backward = tabulate(counts_b);
  out.forward = tabulate(counts_f);
  const std::uint64_t limit_seed = mix_seed(seed, 0x4c494d49544dull);  // distinct stream family
  const OrderDistribution lim_b =
      limit_distribution(spec, OrderEstimator::backward, std::max<std::int64_t>(R, 10000), limit_seed, threads);
  const OrderDistribution lim_f =
      limit_distribution(spec, OrderEstimator::forward, std::max<std::int64_t>(R, 10000), limit_seed, threads);
  out.tv_backward = total_variation(out.backward.probs, lim_b.probs);
  out.tv_forward = total_variation(out.forward.probs, lim_f.probs);
  return out;
}

// ---------------------------------------------------------------------------
// Backward/forward selection as weight schemes on the limit experiment. For a
// pure nested problem (p = 0, q = K) the limit statistics are
// Z_k = D_k / K_{kk}^{1/2}, and the selected model is {1..k_hat}.

namespace detail {

inline WeightScheme nested_selection_scheme(const LimitSpec& spec, Eigen::VectorXd alphas,
                                            OrderEstimator which, std::string name) {
  if (spec.p != 0)
    throw validation_error("nested selection scheme expects a pure nested problem (p = 0)");
  if (alphas.size() != spec.q) throw validation_error("nested scheme: alphas length mismatch");
  const Eigen::VectorXd scale = spec.K.diagonal().cwiseSqrt();
  auto pick = [scale, alphas, which](const Eigen::VectorXd& D) {
    const Eigen::VectorXd z = (D.array() / scale.array()).matrix();
    return which == OrderEstimator::backward ? estimate_order_backward(z, alphas)
                                             : estimate_order_forward(z, alphas);
  };
  return WeightScheme::post_selection(subset_family(SubsetFamily::nested, spec.q), pick,
                                      std::move(name));
}

}  // namespace detail

inline WeightScheme scheme_backward_nested(const LimitSpec& spec, Eigen::VectorXd alphas) {
  return detail::nested_selection_scheme(spec, std::move(alphas), OrderEstimator::backward,
                                         "backward");
}

inline WeightScheme scheme_forward_nested(const LimitSpec& spec, Eigen::VectorXd alphas) {
  return detail::nested_selection_scheme(spec, std::move(alphas), OrderEstimator::forward,
                                         "forward");
}

struct PredictorRiskRow {
  std::string method;
  double delta_scale = 1.0;
  McEstimate risk;
};

// Limit risks of the backward/forward predictors at a covariate point,
// together with the AIC analogue and every fixed nested subset. One row per
// (method, delta scale); all methods share draws at a given scale, so the
// comparisons are coupled. No verdict is emitted: the table is the output.
inline std::vector<PredictorRiskRow> predictor_risk_compare(
    const Eigen::VectorXd& x_point, const OrderSpec& spec, const Eigen::MatrixXd& Q, double sigma,
    std::int64_t R, std::uint64_t seed, const std::vector<double>& delta_scales = {1.0},
    int threads = 1) {
  const int K = spec.K;
  if (x_point.size() != K) throw validation_error("predictor_risk_compare: x_point length != K");
  if (Q.rows() != K) throw validation_error("predictor_risk_compare: Q dimension != K");
  if (!spec.shifts.allFinite())
    throw validation_error("predictor_risk_compare: needs finite shifts (local regime)");
  if (!spec.corr.isApprox(z_correlation_from_moments(Q), 1e-6))
    throw validation_error("predictor_risk_compare: spec.corr inconsistent with Q");

  const Eigen::VectorXd sigma_k = sigma_k_from_moments(Q, sigma);
  const Eigen::VectorXd delta_base = (spec.shifts.array() * sigma_k.array()).matrix();
  const RiskTarget target = RiskTarget::scalar(
      FocusSpec::point_prediction(Eigen::VectorXd(0), x_point));

  std::vector<PredictorRiskRow> rows;
  for (double scale : delta_scales) {
    const LimitSpec lspec = make_limit_spec(0, K, sigma, Q, (scale * delta_base).eval());
    std::vector<std::pair<std::string, WeightScheme>> schemes;
    schemes.emplace_back("backward", scheme_backward_nested(lspec, spec.alphas));
    schemes.emplace_back("forward", scheme_forward_nested(lspec, spec.alphas));
    schemes.emplace_back("aic", scheme_aic_nested(lspec));
    for (const auto& S : subset_family(SubsetFamily::nested, K))
      schemes.emplace_back("subset " + S.to_string(), WeightScheme::single(S));
    for (auto& [name, scheme] : schemes) {
      PredictorRiskRow row;
      row.method = name;
      row.delta_scale = scale;
      row.risk = limit_risk_mc(lspec, scheme, target, Loss::squared, R, seed, threads);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace fic
