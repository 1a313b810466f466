#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fic/common.hpp"
#include "fic/focus.hpp"
#include "fic/linalg.hpp"
#include "fic/moments.hpp"
#include "fic/parallel.hpp"
#include "fic/rng.hpp"
#include "fic/subset.hpp"

namespace fic {

// The canonical limit experiment: observe D ~ N_q(delta, K) with K = sigma^2 L,
// L the (uncertain, uncertain) block of Sigma^{-1}. Every selection and
// averaging scheme becomes a function of D, and submodel estimators have the
// joint Gaussian limit law built from one underlying (M, N) ~ N(0, sigma^2 Sigma).
struct LimitSpec {
  int p = 0;
  int q = 0;
  double sigma = 1.0;
  Eigen::MatrixXd Sigma;  // (p+q) x (p+q), SPD
  Eigen::MatrixXd Omega;  // loss weight matrix, defaults to Sigma
  Eigen::VectorXd delta;  // length q
  Eigen::MatrixXd L;      // derived: Sigma^{11}
  Eigen::MatrixXd K;      // derived: sigma^2 L

  int dim() const { return p + q; }
};

inline LimitSpec make_limit_spec(int p, int q, double sigma, Eigen::MatrixXd Sigma,
                                 Eigen::VectorXd delta,
                                 std::optional<Eigen::MatrixXd> Omega = std::nullopt) {
  if (p < 0 || q < 0 || p + q < 1) throw validation_error("limit spec: need p, q >= 0, p + q >= 1");
  if (!(sigma > 0.0)) throw validation_error("limit spec: sigma must be positive");
  if (Sigma.rows() != p + q || Sigma.cols() != p + q)
    throw validation_error("limit spec: Sigma must be (p+q) x (p+q)");
  if (!linalg::is_spd(Sigma)) throw numerical_error("limit spec: Sigma is not SPD");
  if (delta.size() != q) throw validation_error("limit spec: delta must have length q");
  LimitSpec s;
  s.p = p;
  s.q = q;
  s.sigma = sigma;
  s.Sigma = std::move(Sigma);
  s.delta = std::move(delta);
  s.Omega = Omega ? std::move(*Omega) : s.Sigma;
  if (s.Omega.rows() != p + q || s.Omega.cols() != p + q)
    throw validation_error("limit spec: Omega dimension mismatch with the stacked vector");
  s.L = schur_uncertain_block(s.Sigma, p, q);
  s.K = s.sigma * s.sigma * s.L;
  return s;
}

namespace detail {

// Stacked coordinate indices of (protected block, selected uncertain block).
inline std::vector<int> stacked_indices(int p, const SubsetId& S) {
  std::vector<int> idx(static_cast<std::size_t>(p));
  std::iota(idx.begin(), idx.end(), 0);
  for (int j : S.indices()) idx.push_back(p + j - 1);
  return idx;
}

inline Eigen::MatrixXd select_square(const Eigen::MatrixXd& m, const std::vector<int>& idx) {
  Eigen::MatrixXd out(idx.size(), idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r)
    for (std::size_t c = 0; c < idx.size(); ++c) out(r, c) = m(idx[r], idx[c]);
  return out;
}

inline Eigen::MatrixXd select_rows(const Eigen::MatrixXd& m, const std::vector<int>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = m.row(idx[r]);
  return out;
}

}  // namespace detail

// Limit law of sqrt(n)((beta_S - beta); gamma_S):
//   (C_S, D_S) = Sigma_S^{-1} (Sigma01 delta + M ; pi_S Sigma11 delta + N_S),
// so mean = Sigma_S^{-1}(Sigma01 delta ; pi_S Sigma11 delta) and
// cov = sigma^2 Sigma_S^{-1}. tail carries the frozen block -delta_{S^c}.
struct SubmodelLimitLaw {
  SubsetId S;
  Eigen::VectorXd mean;  // length p + |S|
  Eigen::MatrixXd cov;   // (p+|S|) x (p+|S|)
  Eigen::VectorXd tail;  // length q - |S|
};

inline SubmodelLimitLaw submodel_limit_law(const LimitSpec& spec, const SubsetId& S) {
  S.validate_within(spec.q);
  const auto idx = detail::stacked_indices(spec.p, S);
  const Eigen::MatrixXd sigma_S = detail::select_square(spec.Sigma, idx);
  linalg::require_full_rank(sigma_S, "Sigma_S");
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(idx.size()));
  if (spec.p > 0) rhs.head(spec.p) = spec.Sigma.block(0, spec.p, spec.p, spec.q) * spec.delta;
  if (S.size() > 0)
    rhs.tail(S.size()) = S.pick(spec.Sigma.block(spec.p, spec.p, spec.q, spec.q) * spec.delta);
  SubmodelLimitLaw law;
  law.S = S;
  const Eigen::LLT<Eigen::MatrixXd> llt(sigma_S);
  law.mean = llt.solve(rhs);
  law.cov = spec.sigma * spec.sigma *
            llt.solve(Eigen::MatrixXd::Identity(rhs.size(), rhs.size()));
  law.tail = -S.complement(spec.q).pick(spec.delta);
  return law;
}

// Mean and covariance of the stacked error vector
//   v_S = (C_S ; D_S - delta_S ; -delta_{S^c})
// laid out in natural (x, u) coordinates, so quadratic forms against Omega can
// be taken directly.
struct StackedErrorLaw {
  Eigen::VectorXd mean;  // length p + q
  Eigen::MatrixXd cov;   // (p+q) x (p+q); zero rows/cols for the frozen block
};

inline StackedErrorLaw stacked_error_law(const LimitSpec& spec, const SubsetId& S) {
  const SubmodelLimitLaw law = submodel_limit_law(spec, S);
  const auto idx = detail::stacked_indices(spec.p, S);
  StackedErrorLaw out;
  out.mean = Eigen::VectorXd::Zero(spec.dim());
  out.cov = Eigen::MatrixXd::Zero(spec.dim(), spec.dim());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    out.mean(idx[r]) = law.mean(static_cast<Eigen::Index>(r));
    for (std::size_t c = 0; c < idx.size(); ++c)
      out.cov(idx[r], idx[c]) = law.cov(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  }
  for (int j = 1; j <= spec.q; ++j) out.mean(spec.p + j - 1) -= spec.delta(j - 1);
  return out;
}

// E(script E) for subset S: trace(Omega cov) + mean^t Omega mean. With
// Omega = Sigma this reduces to (p+|S|) sigma^2 + delta^t L^{-1/2}(I-H_S)L^{-1/2} delta.
inline double limit_risk_closed_form(const LimitSpec& spec, const SubsetId& S) {
  if (spec.Omega.rows() != spec.dim())
    throw validation_error("limit risk: Omega dimension mismatch with the stacked vector");
  const StackedErrorLaw law = stacked_error_law(spec, S);
  return (spec.Omega * law.cov).trace() + law.mean.dot(spec.Omega * law.mean);
}

// Scalar-focus limit risk: the rank-one-Omega case a a^t done directly,
// E Lambda_S^2 = (a^t mean)^2 + a^t cov a.
inline double limit_risk_closed_form(const LimitSpec& spec, const SubsetId& S,
                                     const FocusSpec& focus) {
  auto [ax, au] = focus_loading(focus, spec.p, spec.q);
  Eigen::VectorXd a(spec.dim());
  a << ax, au;
  const StackedErrorLaw law = stacked_error_law(spec, S);
  const double b = a.dot(law.mean);
  return b * b + a.dot(law.cov * a);
}

// ---------------------------------------------------------------------------
// Weight schemes c(S | D)

class WeightScheme {
 public:
  enum class Kind { single_subset, fixed, smooth };

  static WeightScheme single(SubsetId S, std::string name = "") {
    WeightScheme s;
    s.kind_ = Kind::single_subset;
    s.name_ = name.empty() ? "subset " + S.to_string() : std::move(name);
    s.support_.push_back(std::move(S));
    s.pick_ = [](const Eigen::VectorXd&) { return 0; };
    return s;
  }

  // Post-selection by a criterion: pick(D) returns the index into support.
  static WeightScheme post_selection(std::vector<SubsetId> support,
                                     std::function<int(const Eigen::VectorXd&)> pick,
                                     std::string name) {
    if (support.empty()) throw validation_error("weight scheme: empty support");
    WeightScheme s;
    s.kind_ = Kind::single_subset;
    s.support_ = std::move(support);
    s.pick_ = std::move(pick);
    s.name_ = std::move(name);
    return s;
  }

  // Fixed convex weights: nonnegative, summing to one.
  static WeightScheme fixed_weights(std::vector<SubsetId> support, Eigen::VectorXd w,
                                    std::string name = "fixed") {
    if (support.empty()) throw validation_error("weight scheme: empty support");
    if (w.size() != static_cast<Eigen::Index>(support.size()))
      throw validation_error("weight scheme: weight count differs from support size");
    if ((w.array() < 0.0).any()) throw validation_error("fixed convex weights must be nonnegative");
    if (std::abs(w.sum() - 1.0) > 1e-10)
      throw validation_error("fixed weights must sum to 1 within 1e-10");
    WeightScheme s;
    s.kind_ = Kind::fixed;
    s.support_ = std::move(support);
    s.fixed_ = std::move(w);
    s.name_ = std::move(name);
    return s;
  }

  // Smooth data-dependent map D -> c(S | D); must sum to one at every D.
  static WeightScheme smooth(std::vector<SubsetId> support,
                             std::function<Eigen::VectorXd(const Eigen::VectorXd&)> fn,
                             std::string name = "smooth") {
    if (support.empty()) throw validation_error("weight scheme: empty support");
    WeightScheme s;
    s.kind_ = Kind::smooth;
    s.support_ = std::move(support);
    s.smooth_ = std::move(fn);
    s.name_ = std::move(name);
    return s;
  }

  Eigen::VectorXd weights(const Eigen::VectorXd& D) const {
    const auto m = static_cast<Eigen::Index>(support_.size());
    switch (kind_) {
      case Kind::fixed:
        return fixed_;
      case Kind::single_subset: {
        const int k = pick_(D);
        if (k < 0 || k >= m) throw numerical_error("weight scheme: selector index out of range");
        Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
        w(k) = 1.0;
        return w;
      }
      case Kind::smooth: {
        Eigen::VectorXd w = smooth_(D);
        if (w.size() != m) throw numerical_error("weight scheme: wrong weight count");
        if (!w.allFinite()) throw numerical_error("weight scheme: non-finite weights");
        if (std::abs(w.sum() - 1.0) > 1e-10)
          throw numerical_error("weight scheme: weights do not sum to 1 within 1e-10");
        return w;
      }
    }
    throw numerical_error("weight scheme: unknown kind");
  }

  const std::vector<SubsetId>& support() const { return support_; }
  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }

 private:
  Kind kind_ = Kind::fixed;
  std::vector<SubsetId> support_;
  Eigen::VectorXd fixed_;
  std::function<int(const Eigen::VectorXd&)> pick_;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> smooth_;
  std::string name_;
};

// Model-average estimate sum_S c(S|D) est(S). For a gamma_j focus, terms whose
// subset does not touch j are zero and are forced to zero here.
inline double model_average_estimate(const Eigen::VectorXd& D, const WeightScheme& scheme,
                                     const std::vector<double>& per_subset,
                                     std::optional<int> gamma_focus_j = std::nullopt) {
  if (per_subset.size() != scheme.support().size())
    throw validation_error("model_average_estimate: estimate count differs from support");
  const Eigen::VectorXd w = scheme.weights(D);
  double out = 0.0;
  for (std::size_t i = 0; i < per_subset.size(); ++i) {
    double est = per_subset[i];
    if (gamma_focus_j && !scheme.support()[i].contains(*gamma_focus_j)) est = 0.0;
    out += w(static_cast<Eigen::Index>(i)) * est;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Monte Carlo limit risks

enum class Loss { squared, absolute };

struct McEstimate {
  double value = 0.0;
  double se = 0.0;
  std::int64_t draws = 0;
  std::uint64_t seed = 0;
};

// What the loss is measured on: a scalar focus, or the Omega-weighted average
// prediction error (the quadratic form of the stacked error vector).
struct RiskTarget {
  enum class Kind { scalar_focus, omega_average };
  Kind kind = Kind::omega_average;
  FocusSpec focus;

  static RiskTarget scalar(FocusSpec f) {
    RiskTarget t;
    t.kind = Kind::scalar_focus;
    t.focus = std::move(f);
    return t;
  }
  static RiskTarget average() { return RiskTarget{}; }
};

namespace detail {

// Affine representation v_S = mean + B z with z ~ N(0, I_{p+q}); all subsets
// and the selector statistic D are driven by the same z, which realizes the
// joint coupling of (C_S, D_S) across S and D through one underlying (M, N).
struct SubsetTransform {
  Eigen::VectorXd mean;
  Eigen::MatrixXd B;
};

inline SubsetTransform subset_transform(const LimitSpec& spec, const SubsetId& S,
                                        const Eigen::MatrixXd& chol_sigma) {
  const auto idx = stacked_indices(spec.p, S);
  SubsetTransform t;
  t.mean = stacked_error_law(spec, S).mean;
  t.B = Eigen::MatrixXd::Zero(spec.dim(), spec.dim());
  if (!idx.empty()) {
    const Eigen::MatrixXd sigma_S = select_square(spec.Sigma, idx);
    const Eigen::MatrixXd rows = select_rows(chol_sigma, idx);  // R_S A
    const Eigen::MatrixXd local = spec.sigma * sigma_S.llt().solve(rows);
    for (std::size_t r = 0; r < idx.size(); ++r)
      t.B.row(idx[r]) = local.row(static_cast<Eigen::Index>(r));
  }
  return t;
}

// D = delta + G z where G = sigma A^{-t} restricted to the uncertain rows.
inline Eigen::MatrixXd d_transform(const LimitSpec& spec, const Eigen::MatrixXd& chol_sigma) {
  const Eigen::MatrixXd ainv_t = chol_sigma.transpose()
                                     .triangularView<Eigen::Upper>()
                                     .solve(Eigen::MatrixXd::Identity(spec.dim(), spec.dim()));
  return spec.sigma * ainv_t.bottomRows(spec.q);
}

}  // namespace detail

// Monte Carlo limit risk of a weight scheme for the given target and loss.
// Draws are replicate-keyed by (seed, i), so the estimate is reproducible and
// independent of threading.
inline McEstimate limit_risk_mc(const LimitSpec& spec, const WeightScheme& scheme,
                                const RiskTarget& target, Loss loss, std::int64_t R,
                                std::uint64_t seed, int threads = 1) {
  if (R < 1000) throw validation_error("limit_risk_mc: need at least 1000 draws");
  if (target.kind == RiskTarget::Kind::omega_average && loss == Loss::absolute)
    throw validation_error("absolute loss applies to scalar foci only");
  if (spec.Omega.rows() != spec.dim())
    throw validation_error("limit risk: Omega dimension mismatch with the stacked vector");

  const Eigen::MatrixXd A = linalg::chol_lower(spec.Sigma, "Sigma");
  const Eigen::MatrixXd G = detail::d_transform(spec, A);
  const auto& support = scheme.support();
  std::vector<detail::SubsetTransform> transforms;
  transforms.reserve(support.size());
  for (const auto& S : support) transforms.push_back(detail::subset_transform(spec, S, A));

  const bool scalar = target.kind == RiskTarget::Kind::scalar_focus;
  Eigen::VectorXd a;  // focus loading in natural coordinates
  std::vector<double> alpha(support.size());
  std::vector<Eigen::VectorXd> b(support.size());
  if (scalar) {
    auto [ax, au] = focus_loading(target.focus, spec.p, spec.q);
    a.resize(spec.dim());
    a << ax, au;
    for (std::size_t i = 0; i < support.size(); ++i) {
      alpha[i] = a.dot(transforms[i].mean);
      b[i] = transforms[i].B.transpose() * a;
    }
  }

  const std::int64_t n_chunks = (R + kDefaultChunk - 1) / kDefaultChunk;
  std::vector<MomentAccumulator> partial(static_cast<std::size_t>(n_chunks));
  for_each_chunk(R, kDefaultChunk, threads, [&](std::int64_t c, std::int64_t b0, std::int64_t e0) {
    MomentAccumulator acc;
    Eigen::VectorXd z(spec.dim()), D(spec.q), v(spec.dim());
    for (std::int64_t i = b0; i < e0; ++i) {
      NormalStream ns(seed, static_cast<std::uint64_t>(i));
      for (int k = 0; k < spec.dim(); ++k) z(k) = ns();
      D = spec.delta + G * z;
      const Eigen::VectorXd w = scheme.weights(D);
      double value;
      if (scalar) {
        double lambda = 0.0;
        for (std::size_t s = 0; s < alpha.size(); ++s)
          lambda += w(static_cast<Eigen::Index>(s)) * (alpha[s] + b[s].dot(z));
        value = loss == Loss::squared ? lambda * lambda : std::abs(lambda);
      } else {
        v.setZero();
        for (std::size_t s = 0; s < transforms.size(); ++s) {
          const double ws = w(static_cast<Eigen::Index>(s));
          if (ws != 0.0) v.noalias() += ws * (transforms[s].mean + transforms[s].B * z);
        }
        value = v.dot(spec.Omega * v);
      }
      if (!std::isfinite(value)) throw numerical_error("limit_risk_mc: non-finite loss");
      acc.add(value);
    }
    partial[static_cast<std::size_t>(c)] = acc;
  });

  MomentAccumulator total;
  for (const auto& acc : partial) total.merge(acc);
  McEstimate out;
  out.value = total.mean();
  out.se = total.se_of_mean();
  out.draws = R;
  out.seed = seed;
  return out;
}

// ---------------------------------------------------------------------------
// Built-in post-selection schemes on the limit experiment

// Smallest limit-scale unbiased risk score (p - q + 2|S|) sigma^2 + D^t M_S D,
// M_S = L^{-1} - L^{-1/2} H_S L^{-1/2}; ties go to the more parsimonious set.
inline WeightScheme scheme_risk_min(const LimitSpec& spec, std::vector<SubsetId> family,
                                    std::string name = "risk-min") {
  struct Entry {
    double constant;
    Eigen::MatrixXd M;
  };
  auto entries = std::make_shared<std::vector<Entry>>();
  const Eigen::MatrixXd Linv = linalg::spd_inverse(spec.L, "L");
  const Eigen::MatrixXd Lmh = linalg::spd_inv_sqrt(spec.L, "L");
  for (const auto& S : family) {
    Entry e;
    e.constant = (spec.p - spec.q + 2 * S.size()) * spec.sigma * spec.sigma;
    e.M = Linv - Lmh * subset_blocks(spec.L, S).H_S * Lmh;
    entries->push_back(std::move(e));
  }
  auto fam = std::make_shared<std::vector<SubsetId>>(family);
  auto pick = [entries, fam](const Eigen::VectorXd& D) {
    int best = 0;
    double best_score = 0.0;
    for (std::size_t i = 0; i < entries->size(); ++i) {
      const double score = (*entries)[i].constant + D.dot((*entries)[i].M * D);
      if (i == 0 || score < best_score ||
          (score == best_score && subset_parsimony_less((*fam)[i], (*fam)[static_cast<std::size_t>(best)]))) {
        best = static_cast<int>(i);
        best_score = score;
      }
    }
    return best;
  };
  return WeightScheme::post_selection(std::move(family), pick, std::move(name));
}

// Smallest focused score {omega^t (I - G_S) D}^2 + 2 sigma^2 omega_S^t L_S omega_S.
inline WeightScheme scheme_fic_min(const LimitSpec& spec, std::vector<SubsetId> family,
                                   const Eigen::VectorXd& omega, std::string name = "fic-min") {
  if (omega.size() != spec.q) throw validation_error("scheme_fic_min: omega must have length q");
  struct Entry {
    Eigen::VectorXd r;  // (I - G_S)^t omega
    double penalty;
  };
  auto entries = std::make_shared<std::vector<Entry>>();
  const Eigen::MatrixXd Linv = linalg::spd_inverse(spec.L, "L");
  for (const auto& S : family) {
    Entry e;
    e.r = omega;
    e.penalty = 0.0;
    if (!S.is_empty()) {
      const SubsetBlocks blocks = subset_blocks(spec.L, S);
      const Eigen::MatrixXd pi = S.projection(spec.q);
      e.r -= Linv * pi.transpose() * blocks.L_S * pi * omega;
      const Eigen::VectorXd omega_S = S.pick(omega);
      e.penalty = 2.0 * spec.sigma * spec.sigma * omega_S.dot(blocks.L_S * omega_S);
    }
    entries->push_back(std::move(e));
  }
  auto fam = std::make_shared<std::vector<SubsetId>>(family);
  auto pick = [entries, fam](const Eigen::VectorXd& D) {
    int best = 0;
    double best_score = 0.0;
    for (std::size_t i = 0; i < entries->size(); ++i) {
      const double bias = (*entries)[i].r.dot(D);
      const double score = bias * bias + (*entries)[i].penalty;
      if (i == 0 || score < best_score ||
          (score == best_score && subset_parsimony_less((*fam)[i], (*fam)[static_cast<std::size_t>(best)]))) {
        best = static_cast<int>(i);
        best_score = score;
      }
    }
    return best;
  };
  return WeightScheme::post_selection(std::move(family), pick, std::move(name));
}

// AIC analogue over the nested family: maximize the limit likelihood-ratio
// gain D^t L^{-1/2} H_S L^{-1/2} D / sigma^2 - 2|S|.
inline WeightScheme scheme_aic_nested(const LimitSpec& spec, std::string name = "aic") {
  std::vector<SubsetId> family = subset_family(SubsetFamily::nested, spec.q);
  auto mats = std::make_shared<std::vector<Eigen::MatrixXd>>();
  const Eigen::MatrixXd Lmh = linalg::spd_inv_sqrt(spec.L, "L");
  for (const auto& S : family) mats->push_back(Lmh * subset_blocks(spec.L, S).H_S * Lmh);
  const double inv_s2 = 1.0 / (spec.sigma * spec.sigma);
  auto pick = [mats, inv_s2](const Eigen::VectorXd& D) {
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < mats->size(); ++i) {
      const double score = D.dot((*mats)[i] * D) * inv_s2 - 2.0 * static_cast<double>(i);
      if (score > best_score) {  // parsimony wins ties: keep the first (smaller) set
        best = static_cast<int>(i);
        best_score = score;
      }
    }
    return best;
  };
  return WeightScheme::post_selection(std::move(family), pick, std::move(name));
}

// ---------------------------------------------------------------------------
// Tolerance regions

struct ToleranceSpec {
  Eigen::VectorXd omega;
  Eigen::MatrixXd K;
  std::int64_t n = 0;
};

struct ToleranceResult {
  bool inside = false;
  double lhs = 0.0;
  double rhs = 0.0;
};

// Can the narrow model tolerate the offsets? Inside iff
//   sqrt(n) |omega^t (gamma - gamma0)| <= (omega^t K omega)^{1/2},
// a closed inequality. With diagonal K this is the textbook two-term display.
inline ToleranceResult tolerance_check(const ToleranceSpec& t, const Eigen::VectorXd& gamma_offsets) {
  if (t.omega.size() != gamma_offsets.size() || t.K.rows() != t.omega.size())
    throw validation_error("tolerance_check: dimension mismatch");
  if (t.n < 1) throw validation_error("tolerance_check: n must be >= 1");
  ToleranceResult r;
  r.lhs = std::sqrt(static_cast<double>(t.n)) * std::abs(t.omega.dot(gamma_offsets));
  const double quad = t.omega.dot(t.K * t.omega);
  if (quad < 0.0) throw numerical_error("tolerance_check: omega^t K omega < 0");
  r.rhs = std::sqrt(quad);
  r.inside = r.lhs <= r.rhs;
  return r;
}

// All-foci ellipse: (gamma - gamma0)^t K^{-1} (gamma - gamma0) <= 1/n. When it
// holds, tolerance_check passes for every omega (Cauchy-Schwarz).
inline bool tolerance_ellipse_predicate(const Eigen::MatrixXd& K,
                                        const Eigen::VectorXd& gamma_offsets, std::int64_t n) {
  if (K.rows() != gamma_offsets.size()) throw validation_error("tolerance ellipse: dimension mismatch");
  if (n < 1) throw validation_error("tolerance ellipse: n must be >= 1");
  if (!linalg::is_spd(K)) throw numerical_error("tolerance ellipse: K is singular or not SPD");
  return gamma_offsets.dot(K.llt().solve(gamma_offsets)) <= 1.0 / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// The Weibull-quantile focus with omega(alpha) = (nu/theta){log nu - (1 - r)},
// nu = -log(1 - alpha); r is the Euler-Mascheroni constant, which places the
// root at alpha = 0.7826.
struct WeibullQuantileExample {
  double alpha = 0.5;
  double theta = 1.0;
  double r = 0.5772157;

  double nu() const { return -std::log1p(-alpha); }
};

inline double weibull_omega(const WeibullQuantileExample& ex) {
  if (!(ex.alpha > 0.0 && ex.alpha < 1.0))
    throw validation_error("weibull_omega: alpha must lie in (0, 1)");
  if (!(ex.theta > 0.0)) throw validation_error("weibull_omega: theta must be positive");
  const double nu = ex.nu();
  return (nu / ex.theta) * (std::log(nu) - (1.0 - ex.r));
}

// ---------------------------------------------------------------------------
// R draws of D ~ N_q(delta, K), one counter-keyed stream per row.
inline Eigen::MatrixXd simulate_limit_D(const Eigen::VectorXd& delta, const Eigen::MatrixXd& K,
                                        std::int64_t R, std::uint64_t seed) {
  const int q = static_cast<int>(delta.size());
  if (K.rows() != q || K.cols() != q) throw validation_error("simulate_limit_D: K must be q x q");
  if (!linalg::is_spd(K)) throw numerical_error("simulate_limit_D: K is not SPD");
  if (R < 1) throw validation_error("simulate_limit_D: R must be >= 1");
  const Eigen::MatrixXd A = linalg::chol_lower(K, "K");
  Eigen::MatrixXd out(R, q);
  Eigen::VectorXd z(q);
  for (std::int64_t i = 0; i < R; ++i) {
    NormalStream ns(seed, static_cast<std::uint64_t>(i));
    for (int k = 0; k < q; ++k) z(k) = ns();
    out.row(i) = (delta + A * z).transpose();
  }
  return out;
}

}  // namespace fic
