#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "fic/config.hpp"
#include "fic/criteria.hpp"
#include "fic/dataset.hpp"
#include "fic/fit.hpp"
#include "fic/focus.hpp"
#include "fic/limit.hpp"
#include "fic/moments.hpp"
#include "fic/order.hpp"
#include "fic/parallel.hpp"
#include "fic/report.hpp"
#include "fic/rng.hpp"

namespace fic {

namespace detail {

inline json subset_json(const SubsetId& S) {
  json out = json::array();
  for (int j : S.indices()) out.push_back(j);
  return out;
}

inline json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline json mc_json(const McEstimate& e) {
  return json{{"estimate", e.value}, {"se", e.se}, {"draws", e.draws}, {"seed", e.seed}};
}

inline json order_dist_json(const OrderDistribution& d) {
  json out;
  out["probs"] = vector_json(d.probs);
  out["se"] = vector_json(d.se);
  out["closed_form"] = d.draws == 0;
  out["draws"] = d.draws;
  out["seed"] = d.seed;
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// fic / avefic: score every subset in the family, rank, shortlist.

inline json cmd_fic(const RunConfig& c, ScoreKey ranking) {
  if (c.data_path.empty()) throw validation_error("fic: no data file given (config 'data' or --data)");
  const Dataset d = load_dataset(read_csv(c.data_path), c.roles, c.gamma0);
  const MomentMatrices m = compute_moments(d);
  json warnings = json::array();
  const double ratio = linalg::sym_eigen_ratio(m.sigma);
  if (ratio < kNearSingularTol)
    warnings.push_back("near-singular moment matrix (eigenvalue ratio " + std::to_string(ratio) + ")");

  const int q = d.q();
  const auto family = subset_family(c.family, q, c.explicit_subsets);

  Eigen::VectorXd omega_hat;
  Eigen::MatrixXd K_hat;
  const bool with_focus = c.focus.has_value() && q > 0;
  std::vector<SubsetScore> scores;
  scores.reserve(family.size());
  for (const auto& S : family) {
    const SubsetFit fit = fit_subset(d, S, m);
    SubsetScore sc;
    sc.S = S;
    sc.risk_hat = risk_estimate(fit, m, S);
    sc.ave_fic = ave_fic(fit, m, S, d.n());
    sc.negative_risk = sc.risk_hat < 0.0;
    if (sc.negative_risk)
      warnings.push_back("negative risk estimate for subset " + S.to_string());
    if (with_focus) {
      if (omega_hat.size() == 0) {
        omega_hat = focus_omega(*c.focus, m);
        K_hat = fit.sigma2 * m.L;
      }
      const FicStarMode mode = S.size() == q  ? FicStarMode::full_model
                               : S.is_empty() ? FicStarMode::narrow
                                              : FicStarMode::general;
      sc.fic_star = fic_star(fic_raw(fit, m, S, omega_hat), omega_hat, K_hat, mode, fit, d.n());
    }
    if (c.cost) sc.cost_adjusted = cost_adjusted(sc.risk_hat, c.cost->model(), S);
    scores.push_back(std::move(sc));
  }
  const auto ranked = rank_and_shortlist(std::move(scores), c.shortlist, ranking);

  json rows = json::array();
  for (const auto& sc : ranked) {
    json row;
    row["S"] = detail::subset_json(sc.S);
    row["size"] = sc.S.size();
    row["risk_hat"] = sc.risk_hat;
    row["ave_fic"] = sc.ave_fic;
    if (sc.fic_star) row["fic_star"] = *sc.fic_star;
    if (sc.cost_adjusted) row["cost_adjusted"] = *sc.cost_adjusted;
    row["negative_risk"] = sc.negative_risk;
    rows.push_back(std::move(row));
  }

  json payload;
  payload["n"] = d.n();
  payload["p"] = d.p();
  payload["q"] = q;
  payload["family_size"] = family.size();
  payload["ranking"] = ranking == ScoreKey::risk ? "risk_hat" : "ave_fic";
  payload["shortlist"] = c.shortlist;
  payload["scores"] = std::move(rows);
  if (with_focus && omega_hat.size() > 0) payload["omega_hat"] = detail::vector_json(omega_hat);
  {
    const SubsetFit fit0 = fit_subset(d, SubsetId::full(q), m);
    payload["sigma2"] = fit0.sigma2;
  }
  payload["warnings"] = std::move(warnings);
  return payload;
}

// ---------------------------------------------------------------------------
// gof: the chi-square goodness-of-fit statistic of the uncertain block.

inline json cmd_gof(const RunConfig& c) {
  if (c.data_path.empty()) throw validation_error("gof: no data file given (config 'data' or --data)");
  const Dataset d = load_dataset(read_csv(c.data_path), c.roles, c.gamma0);
  if (d.q() == 0) throw validation_error("gof: needs at least one uncertain covariate");
  const MomentMatrices m = compute_moments(d);
  const SubsetFit fit = fit_subset(d, SubsetId::full(d.q()), m);
  const Eigen::MatrixXd K_hat = fit.sigma2 * m.L;
  const auto [stat, dof] = gof_statistic(fit, K_hat, d.n());
  json payload;
  payload["n"] = d.n();
  payload["p"] = d.p();
  payload["q"] = d.q();
  payload["sigma2"] = fit.sigma2;
  payload["statistic"] = stat;
  payload["dof"] = dof;
  payload["limit_law"] = "chi2_q(delta^t K^{-1} delta)";
  payload["warnings"] = json::array();
  return payload;
}

// ---------------------------------------------------------------------------
// order: limit and optional finite-sample order-estimate distributions.

inline json cmd_order(const RunConfig& c) {
  const OrderSpec& spec = *c.order_spec;
  json payload;
  payload["K"] = spec.K;
  payload["k0"] = spec.k0;
  payload["regime"] = spec.regime == OrderSpec::Regime::fixed_coefficients ? "fixed" : "local";
  payload["alphas"] = detail::vector_json(spec.alphas);
  const bool want_b = c.order_which == "backward" || c.order_which == "both";
  const bool want_f = c.order_which == "forward" || c.order_which == "both";
  if (want_b)
    payload["backward"] = detail::order_dist_json(
        limit_distribution(spec, OrderEstimator::backward, c.reps, c.seed, c.threads));
  if (want_f)
    payload["forward"] = detail::order_dist_json(
        limit_distribution(spec, OrderEstimator::forward, c.reps, c.seed, c.threads));
  if (c.finite_sample) {
    NestedDesign design;
    design.Q = c.finite_sample->Q ? *c.finite_sample->Q
                                  : Eigen::MatrixXd::Identity(spec.K, spec.K).eval();
    design.sigma = c.finite_sample->sigma;
    const FiniteSampleResult res =
        finite_sample_distribution(design, spec, c.finite_sample->n, c.reps, c.seed, c.threads);
    json fs;
    fs["n"] = c.finite_sample->n;
    fs["backward"] = detail::order_dist_json(res.backward);
    fs["forward"] = detail::order_dist_json(res.forward);
    fs["tv_backward"] = res.tv_backward;
    fs["tv_forward"] = res.tv_forward;
    payload["finite_sample"] = std::move(fs);
  }
  payload["warnings"] = json::array();
  return payload;
}

// ---------------------------------------------------------------------------
// limit-risk: delta-grid risk tables for selection and averaging schemes.

namespace detail {

inline WeightScheme resolve_scheme(const SchemeDecl& d, const LimitSpec& spec,
                                   const std::optional<FocusSpec>& target_focus) {
  switch (d.type) {
    case SchemeDecl::Type::subset:
      d.S.validate_within(spec.q);
      return WeightScheme::single(d.S);
    case SchemeDecl::Type::fixed:
      return WeightScheme::fixed_weights(d.support, d.weights);
    case SchemeDecl::Type::risk_min:
      return scheme_risk_min(spec, subset_family(d.family, spec.q));
    case SchemeDecl::Type::fic_min: {
      if (!target_focus)
        throw validation_error("fic_min scheme needs a scalar focus target");
      return scheme_fic_min(spec, subset_family(d.family, spec.q),
                            focus_omega(*target_focus, spec.Sigma, spec.p, spec.q));
    }
    case SchemeDecl::Type::aic:
      return scheme_aic_nested(spec);
    case SchemeDecl::Type::backward:
      return scheme_backward_nested(spec, d.alphas);
    case SchemeDecl::Type::forward:
      return scheme_forward_nested(spec, d.alphas);
  }
  throw validation_error("unknown scheme type");
}

}  // namespace detail

inline json cmd_limit_risk(const RunConfig& c) {
  const LimitSpec& base = *c.limit_spec;
  const RiskTarget target =
      c.target_focus ? RiskTarget::scalar(*c.target_focus) : RiskTarget::average();
  json rows = json::array();
  for (double scale : c.delta_scales) {
    const LimitSpec spec = make_limit_spec(base.p, base.q, base.sigma, base.Sigma,
                                           (scale * base.delta).eval(), base.Omega);
    for (const auto& decl : c.schemes) {
      const WeightScheme scheme = detail::resolve_scheme(decl, spec, c.target_focus);
      const McEstimate est =
          limit_risk_mc(spec, scheme, target, c.loss, c.reps, c.seed, c.threads);
      json row;
      row["scheme"] = decl.label();
      row["delta_scale"] = scale;
      row["risk"] = detail::mc_json(est);
      if (decl.type == SchemeDecl::Type::subset && c.loss == Loss::squared) {
        row["closed_form"] = c.target_focus
                                 ? limit_risk_closed_form(spec, decl.S, *c.target_focus)
                                 : limit_risk_closed_form(spec, decl.S);
      }
      rows.push_back(std::move(row));
    }
  }
  json payload;
  payload["p"] = base.p;
  payload["q"] = base.q;
  payload["sigma"] = base.sigma;
  payload["loss"] = c.loss == Loss::squared ? "squared" : "absolute";
  payload["target"] = c.target_focus ? "focus" : "average";
  payload["rows"] = std::move(rows);
  payload["warnings"] = json::array();
  return payload;
}

// ---------------------------------------------------------------------------
// simulate: finite-n experiment under the local linear model, comparing the
// mean unbiased risk estimate and the realized n x prediction error per subset
// against the closed-form limit risks.

inline json cmd_simulate(const RunConfig& c) {
  const LimitSpec& spec = *c.limit_spec;
  const int n = c.sim_n, p = spec.p, q = spec.q;
  const Eigen::MatrixXd Z = linalg::design_with_moments(n, spec.Sigma);
  const Eigen::MatrixXd X = Z.leftCols(p);
  const Eigen::MatrixXd U = Z.rightCols(q);
  const double root_n = std::sqrt(static_cast<double>(n));
  const Eigen::VectorXd gamma_true = spec.delta / root_n;  // gamma0 = 0, beta = 0
  const Eigen::VectorXd mu = U * gamma_true;

  Dataset base = make_dataset(mu, X, U);
  const MomentMatrices m = compute_moments(base);
  const auto family = subset_family(c.family, q, c.explicit_subsets);

  struct Cell {
    MomentAccumulator risk;
    MomentAccumulator nmse;
    std::int64_t negatives = 0;
  };
  const std::int64_t n_chunks = (c.reps + kDefaultChunk - 1) / kDefaultChunk;
  std::vector<std::vector<Cell>> partial(static_cast<std::size_t>(n_chunks),
                                         std::vector<Cell>(family.size()));
  for_each_chunk(c.reps, kDefaultChunk, c.threads, [&](std::int64_t ci, std::int64_t b, std::int64_t e) {
    auto& cells = partial[static_cast<std::size_t>(ci)];
    Dataset d = base;
    for (std::int64_t i = b; i < e; ++i) {
      NormalStream ns(c.seed, static_cast<std::uint64_t>(i));
      for (int r = 0; r < n; ++r) d.y(r) = mu(r) + spec.sigma * ns();
      for (std::size_t s = 0; s < family.size(); ++s) {
        const SubsetId& S = family[s];
        const SubsetFit fit = fit_subset(d, S, m);
        const double risk = risk_estimate(fit, m, S);
        Eigen::VectorXd v(p + q);
        v.head(p) = fit.beta;  // true beta is zero
        for (int j = 1; j <= q; ++j) v(p + j - 1) = -gamma_true(j - 1);
        for (int r = 0; r < S.size(); ++r)
          v(p + S.indices()[static_cast<std::size_t>(r)] - 1) += fit.gamma(r);
        v *= root_n;
        cells[s].risk.add(risk);
        cells[s].nmse.add(v.dot(m.sigma * v));
        if (risk < 0.0) ++cells[s].negatives;
      }
    }
  });

  json rows = json::array();
  for (std::size_t s = 0; s < family.size(); ++s) {
    Cell total;
    for (const auto& chunk : partial) {
      total.risk.merge(chunk[s].risk);
      total.nmse.merge(chunk[s].nmse);
      total.negatives += chunk[s].negatives;
    }
    json row;
    row["S"] = detail::subset_json(family[s]);
    row["limit_risk"] = limit_risk_closed_form(spec, family[s]);
    row["risk_hat_mean"] = total.risk.mean();
    row["risk_hat_se"] = total.risk.se_of_mean();
    row["nmse_mean"] = total.nmse.mean();
    row["nmse_se"] = total.nmse.se_of_mean();
    row["negative_risk_count"] = total.negatives;
    rows.push_back(std::move(row));
  }
  json payload;
  payload["n"] = n;
  payload["p"] = p;
  payload["q"] = q;
  payload["sigma"] = spec.sigma;
  payload["delta"] = detail::vector_json(spec.delta);
  payload["replicates"] = c.reps;
  payload["per_subset"] = std::move(rows);
  payload["warnings"] = json::array();
  return payload;
}

// ---------------------------------------------------------------------------
// tolerance: the per-focus inequality and the all-foci ellipse predicate.

inline json cmd_tolerance(const RunConfig& c) {
  const ToleranceDecl& t = *c.tolerance;
  const ToleranceSpec spec{t.omega, t.K, t.n};
  const ToleranceResult r = tolerance_check(spec, t.gamma_offsets);
  json payload;
  payload["lhs"] = r.lhs;
  payload["rhs"] = r.rhs;
  payload["inside"] = r.inside;
  payload["ellipse_inside"] = tolerance_ellipse_predicate(t.K, t.gamma_offsets, t.n);
  payload["quadform"] = t.gamma_offsets.dot(t.K.llt().solve(t.gamma_offsets));
  payload["threshold"] = 1.0 / static_cast<double>(t.n);
  payload["warnings"] = json::array();
  return payload;
}

// ---------------------------------------------------------------------------

inline Report run_command(const RunConfig& c) {
  Report rep;
  rep.meta["command"] = c.command;
  rep.meta["seed"] = c.seed;
  rep.meta["reps"] = c.reps;
  rep.meta["threads"] = c.threads;
  rep.meta["version"] = kVersion;
  rep.meta["timestamp"] = utc_timestamp();
  if (!c.data_path.empty()) rep.input_digest = digest_file(c.data_path);

  json payload;
  if (c.command == "fic") payload = cmd_fic(c, ScoreKey::risk);
  else if (c.command == "avefic") payload = cmd_fic(c, ScoreKey::ave_fic);
  else if (c.command == "gof") payload = cmd_gof(c);
  else if (c.command == "order") payload = cmd_order(c);
  else if (c.command == "limit-risk") payload = cmd_limit_risk(c);
  else if (c.command == "simulate") payload = cmd_simulate(c);
  else if (c.command == "tolerance") payload = cmd_tolerance(c);
  else throw validation_error("unknown command '" + c.command + "'");

  payload["command"] = c.command;
  payload["seed"] = c.seed;
  rep.payload = std::move(payload);
  return rep;
}

}  // namespace fic
