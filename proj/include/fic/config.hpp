#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "fic/common.hpp"
#include "fic/criteria.hpp"
#include "fic/dataset.hpp"
#include "fic/focus.hpp"
#include "fic/limit.hpp"
#include "fic/order.hpp"
#include "fic/subset.hpp"

namespace fic {

// ---------------------------------------------------------------------------
// Strict JSON helpers: unknown keys are rejected so experiment configs stay
// auditable.

namespace cfg {

using json = nlohmann::json;

inline void require_object(const json& j, const std::string& ctx) {
  if (!j.is_object()) throw validation_error(ctx + ": expected a JSON object");
}

inline void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                                const std::string& ctx) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!allowed.count(key)) throw validation_error(ctx + ": unknown key '" + key + "'");
  }
}

inline const json& require_key(const json& j, const std::string& key, const std::string& ctx) {
  if (!j.contains(key)) throw validation_error(ctx + ": missing key '" + key + "'");
  return j.at(key);
}

inline double as_number(const json& j, const std::string& ctx) {
  if (!j.is_number()) throw validation_error(ctx + ": expected a number");
  return j.get<double>();
}

inline std::string as_string(const json& j, const std::string& ctx) {
  if (!j.is_string()) throw validation_error(ctx + ": expected a string");
  return j.get<std::string>();
}

inline Eigen::VectorXd as_vector(const json& j, const std::string& ctx) {
  if (!j.is_array()) throw validation_error(ctx + ": expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = as_number(j[i], ctx + "[" + std::to_string(i) + "]");
  return v;
}

// Row-major flat array, size rows*cols.
inline Eigen::MatrixXd as_matrix(const json& j, int rows, int cols, const std::string& ctx) {
  const Eigen::VectorXd flat = as_vector(j, ctx);
  if (flat.size() != static_cast<Eigen::Index>(rows) * cols)
    throw validation_error(ctx + ": expected " + std::to_string(rows * cols) +
                           " entries (row-major " + std::to_string(rows) + "x" +
                           std::to_string(cols) + "), got " + std::to_string(flat.size()));
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = flat(r * cols + c);
  return m;
}

inline std::vector<std::string> as_string_list(const json& j, const std::string& ctx) {
  if (!j.is_array()) throw validation_error(ctx + ": expected an array of strings");
  std::vector<std::string> out;
  out.reserve(j.size());
  for (const auto& item : j) out.push_back(as_string(item, ctx));
  return out;
}

inline SubsetId as_subset(const json& j, const std::string& ctx) {
  if (!j.is_array()) throw validation_error(ctx + ": expected an array of indices");
  std::vector<int> idx;
  idx.reserve(j.size());
  for (const auto& item : j) {
    if (!item.is_number_integer()) throw validation_error(ctx + ": subset indices must be integers");
    idx.push_back(item.get<int>());
  }
  return SubsetId(std::move(idx));
}

inline std::vector<SubsetId> as_subset_list(const json& j, const std::string& ctx) {
  if (!j.is_array()) throw validation_error(ctx + ": expected an array of subsets");
  std::vector<SubsetId> out;
  out.reserve(j.size());
  for (const auto& item : j) out.push_back(as_subset(item, ctx));
  return out;
}

}  // namespace cfg

// ---------------------------------------------------------------------------
// Declarations parsed out of the config document

struct CostDecl {
  double alpha = 0.0;
  Eigen::VectorXd per_index;  // k(S) = sum of per-index costs over S

  CostModel model() const {
    CostModel cm;
    cm.alpha = alpha;
    const Eigen::VectorXd costs = per_index;
    cm.k = [costs](const SubsetId& S) {
      double total = 0.0;
      for (int j : S.indices()) {
        if (j > costs.size()) throw validation_error("cost model: no cost for index " + std::to_string(j));
        total += costs(j - 1);
      }
      return total;
    };
    return cm;
  }
};

struct SchemeDecl {
  enum class Type { subset, fixed, risk_min, fic_min, aic, backward, forward };
  Type type = Type::subset;
  SubsetId S;
  std::vector<SubsetId> support;
  Eigen::VectorXd weights;
  SubsetFamily family = SubsetFamily::all;
  Eigen::VectorXd alphas;

  std::string label() const {
    switch (type) {
      case Type::subset: return "subset " + S.to_string();
      case Type::fixed: return "fixed";
      case Type::risk_min: return "risk-min";
      case Type::fic_min: return "fic-min";
      case Type::aic: return "aic";
      case Type::backward: return "backward";
      case Type::forward: return "forward";
    }
    return "?";
  }
};

struct FiniteSampleDecl {
  int n = 0;
  double sigma = 1.0;
  std::optional<Eigen::MatrixXd> Q;  // defaults to identity
};

struct ToleranceDecl {
  Eigen::VectorXd omega;
  Eigen::MatrixXd K;
  std::int64_t n = 0;
  Eigen::VectorXd gamma_offsets;
};

struct RunConfig {
  std::string command;
  std::uint64_t seed = 0;
  std::int64_t reps = 10000;
  int threads = 1;
  std::string out_path;

  // data-backed commands (fic, avefic, gof)
  std::string data_path;
  Roles roles;
  std::optional<Eigen::VectorXd> gamma0;
  SubsetFamily family = SubsetFamily::all;
  std::vector<SubsetId> explicit_subsets;
  int shortlist = 10;
  std::optional<FocusSpec> focus;
  std::optional<CostDecl> cost;

  // order
  std::optional<OrderSpec> order_spec;
  std::string order_which = "both";
  std::optional<FiniteSampleDecl> finite_sample;

  // limit-risk and simulate
  std::optional<LimitSpec> limit_spec;
  std::vector<SchemeDecl> schemes;
  std::optional<FocusSpec> target_focus;  // empty = Omega-average target
  Loss loss = Loss::squared;
  std::vector<double> delta_scales{1.0};
  int sim_n = 0;

  // tolerance
  std::optional<ToleranceDecl> tolerance;
};

namespace cfg {

inline FocusSpec parse_focus(const json& j, const std::string& ctx) {
  require_object(j, ctx);
  const std::string kind = as_string(require_key(j, "kind", ctx), ctx + ".kind");
  if (kind == "gamma") {
    reject_unknown_keys(j, {"kind", "j"}, ctx);
    return FocusSpec::gamma_coef(static_cast<int>(as_number(require_key(j, "j", ctx), ctx + ".j")));
  }
  if (kind == "beta") {
    reject_unknown_keys(j, {"kind", "j"}, ctx);
    return FocusSpec::beta_contrast(static_cast<int>(as_number(require_key(j, "j", ctx), ctx + ".j")));
  }
  if (kind == "point") {
    reject_unknown_keys(j, {"kind", "x0", "u0"}, ctx);
    return FocusSpec::point_prediction(as_vector(require_key(j, "x0", ctx), ctx + ".x0"),
                                       as_vector(require_key(j, "u0", ctx), ctx + ".u0"));
  }
  if (kind == "custom") {
    reject_unknown_keys(j, {"kind", "omega"}, ctx);
    return FocusSpec::custom(as_vector(require_key(j, "omega", ctx), ctx + ".omega"));
  }
  throw validation_error(ctx + ": unknown focus kind '" + kind + "'");
}

inline void parse_family(const json& j, const std::string& ctx, SubsetFamily* family,
                         std::vector<SubsetId>* explicit_subsets) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "all") *family = SubsetFamily::all;
    else if (s == "nested") *family = SubsetFamily::nested;
    else throw validation_error(ctx + ": family must be 'all', 'nested', or an explicit list");
    return;
  }
  *family = SubsetFamily::explicit_list;
  *explicit_subsets = as_subset_list(j, ctx);
}

inline Roles parse_roles(const json& j, const std::string& ctx) {
  require_object(j, ctx);
  reject_unknown_keys(j, {"response", "protected", "uncertain", "weight"}, ctx);
  Roles roles;
  roles.response = as_string(require_key(j, "response", ctx), ctx + ".response");
  roles.protected_cols = as_string_list(require_key(j, "protected", ctx), ctx + ".protected");
  roles.uncertain_cols = as_string_list(require_key(j, "uncertain", ctx), ctx + ".uncertain");
  if (j.contains("weight")) roles.weight = as_string(j.at("weight"), ctx + ".weight");
  return roles;
}

inline LimitSpec parse_limit_spec(const json& j, const std::string& ctx) {
  require_object(j, ctx);
  reject_unknown_keys(j, {"p", "q", "sigma", "Sigma", "Omega", "delta"}, ctx);
  const int p = static_cast<int>(as_number(require_key(j, "p", ctx), ctx + ".p"));
  const int q = static_cast<int>(as_number(require_key(j, "q", ctx), ctx + ".q"));
  const double sigma = as_number(require_key(j, "sigma", ctx), ctx + ".sigma");
  Eigen::MatrixXd Sigma = as_matrix(require_key(j, "Sigma", ctx), p + q, p + q, ctx + ".Sigma");
  Eigen::VectorXd delta = as_vector(require_key(j, "delta", ctx), ctx + ".delta");
  std::optional<Eigen::MatrixXd> Omega;
  if (j.contains("Omega")) Omega = as_matrix(j.at("Omega"), p + q, p + q, ctx + ".Omega");
  return make_limit_spec(p, q, sigma, std::move(Sigma), std::move(delta), std::move(Omega));
}

inline OrderSpec parse_order_spec(const json& j, const std::string& ctx) {
  require_object(j, ctx);
  reject_unknown_keys(j, {"K", "k0", "regime", "shifts", "corr", "alphas"}, ctx);
  const int K = static_cast<int>(as_number(require_key(j, "K", ctx), ctx + ".K"));
  const int k0 = static_cast<int>(as_number(require_key(j, "k0", ctx), ctx + ".k0"));
  const std::string regime_s = as_string(require_key(j, "regime", ctx), ctx + ".regime");
  OrderSpec::Regime regime;
  if (regime_s == "fixed") regime = OrderSpec::Regime::fixed_coefficients;
  else if (regime_s == "local") regime = OrderSpec::Regime::local_shift;
  else throw validation_error(ctx + ".regime: must be 'fixed' or 'local'");

  const json& js = require_key(j, "shifts", ctx);
  if (!js.is_array()) throw validation_error(ctx + ".shifts: expected an array");
  Eigen::VectorXd shifts(static_cast<Eigen::Index>(js.size()));
  for (std::size_t i = 0; i < js.size(); ++i) {
    if (js[i].is_string()) {
      if (js[i].get<std::string>() != "inf")
        throw validation_error(ctx + ".shifts: the only string marker is \"inf\"");
      shifts(static_cast<Eigen::Index>(i)) = kInfiniteShift;
    } else {
      shifts(static_cast<Eigen::Index>(i)) = as_number(js[i], ctx + ".shifts");
    }
  }

  Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(K, K);
  if (j.contains("corr")) corr = as_matrix(j.at("corr"), K, K, ctx + ".corr");

  const json& ja = require_key(j, "alphas", ctx);
  Eigen::VectorXd alphas;
  if (ja.is_number()) alphas = Eigen::VectorXd::Constant(K, ja.get<double>());
  else alphas = as_vector(ja, ctx + ".alphas");

  return make_order_spec(K, k0, std::move(shifts), std::move(corr), std::move(alphas), regime);
}

inline SchemeDecl parse_scheme(const json& j, const std::string& ctx) {
  require_object(j, ctx);
  const std::string type = as_string(require_key(j, "type", ctx), ctx + ".type");
  SchemeDecl d;
  if (type == "subset") {
    reject_unknown_keys(j, {"type", "S"}, ctx);
    d.type = SchemeDecl::Type::subset;
    d.S = as_subset(require_key(j, "S", ctx), ctx + ".S");
  } else if (type == "fixed") {
    reject_unknown_keys(j, {"type", "support", "weights"}, ctx);
    d.type = SchemeDecl::Type::fixed;
    d.support = as_subset_list(require_key(j, "support", ctx), ctx + ".support");
    d.weights = as_vector(require_key(j, "weights", ctx), ctx + ".weights");
  } else if (type == "risk_min" || type == "fic_min") {
    reject_unknown_keys(j, {"type", "family"}, ctx);
    d.type = type == "risk_min" ? SchemeDecl::Type::risk_min : SchemeDecl::Type::fic_min;
    if (j.contains("family")) {
      std::vector<SubsetId> unused;
      parse_family(j.at("family"), ctx + ".family", &d.family, &unused);
      if (d.family == SubsetFamily::explicit_list)
        throw validation_error(ctx + ".family: selection schemes take 'all' or 'nested'");
    }
  } else if (type == "aic") {
    reject_unknown_keys(j, {"type"}, ctx);
    d.type = SchemeDecl::Type::aic;
  } else if (type == "backward" || type == "forward") {
    reject_unknown_keys(j, {"type", "alphas"}, ctx);
    d.type = type == "backward" ? SchemeDecl::Type::backward : SchemeDecl::Type::forward;
    d.alphas = as_vector(require_key(j, "alphas", ctx), ctx + ".alphas");
  } else {
    throw validation_error(ctx + ": unknown scheme type '" + type + "'");
  }
  return d;
}

}  // namespace cfg

// Parses and validates a config document; defaults filled, unknown keys
// rejected at every level.
inline RunConfig parse_config(const nlohmann::json& doc) {
  using namespace cfg;
  require_object(doc, "config");
  const json& jv = require_key(doc, "schema_version", "config");
  if (!jv.is_number_integer() || jv.get<int>() != 1)
    throw validation_error("config: schema_version must be the integer 1");

  RunConfig c;
  c.command = as_string(require_key(doc, "command", "config"), "config.command");

  const std::set<std::string> common = {"schema_version", "command", "seed", "reps", "threads", "out"};
  auto with_common = [&common](std::set<std::string> extra) {
    extra.insert(common.begin(), common.end());
    return extra;
  };

  if (doc.contains("seed")) {
    const json& s = doc.at("seed");
    if (!s.is_number_unsigned() && !s.is_number_integer())
      throw validation_error("config.seed: expected a nonnegative integer");
    c.seed = s.get<std::uint64_t>();
  }
  if (doc.contains("reps")) {
    c.reps = doc.at("reps").get<std::int64_t>();
    if (c.reps < 1) throw validation_error("config.reps: must be >= 1");
  }
  if (doc.contains("threads")) {
    c.threads = doc.at("threads").get<int>();
    if (c.threads < 1) throw validation_error("config.threads: must be >= 1");
  }
  if (doc.contains("out")) c.out_path = as_string(doc.at("out"), "config.out");

  if (c.command == "fic" || c.command == "avefic") {
    reject_unknown_keys(doc, with_common({"data", "roles", "gamma0", "family", "shortlist",
                                          "focus", "cost"}),
                        "config");
    if (doc.contains("data")) c.data_path = as_string(doc.at("data"), "config.data");
    c.roles = parse_roles(require_key(doc, "roles", "config"), "config.roles");
    if (doc.contains("gamma0")) c.gamma0 = as_vector(doc.at("gamma0"), "config.gamma0");
    if (doc.contains("family"))
      parse_family(doc.at("family"), "config.family", &c.family, &c.explicit_subsets);
    if (doc.contains("shortlist")) {
      c.shortlist = doc.at("shortlist").get<int>();
      if (c.shortlist < 1) throw validation_error("config.shortlist: must be >= 1");
    }
    if (doc.contains("focus")) c.focus = parse_focus(doc.at("focus"), "config.focus");
    if (doc.contains("cost")) {
      const json& jc = doc.at("cost");
      require_object(jc, "config.cost");
      reject_unknown_keys(jc, {"alpha", "per_index"}, "config.cost");
      CostDecl cost;
      cost.alpha = as_number(require_key(jc, "alpha", "config.cost"), "config.cost.alpha");
      cost.per_index = as_vector(require_key(jc, "per_index", "config.cost"), "config.cost.per_index");
      if (cost.alpha < 0.0) throw validation_error("config.cost.alpha: must be nonnegative");
      if ((cost.per_index.array() < 0.0).any())
        throw validation_error("config.cost.per_index: costs must be nonnegative");
      c.cost = std::move(cost);
    }
  } else if (c.command == "gof") {
    reject_unknown_keys(doc, with_common({"data", "roles", "gamma0"}), "config");
    if (doc.contains("data")) c.data_path = as_string(doc.at("data"), "config.data");
    c.roles = parse_roles(require_key(doc, "roles", "config"), "config.roles");
    if (doc.contains("gamma0")) c.gamma0 = as_vector(doc.at("gamma0"), "config.gamma0");
  } else if (c.command == "order") {
    reject_unknown_keys(doc, with_common({"order_spec", "which", "finite_sample"}), "config");
    c.order_spec = parse_order_spec(require_key(doc, "order_spec", "config"), "config.order_spec");
    if (doc.contains("which")) {
      c.order_which = as_string(doc.at("which"), "config.which");
      if (c.order_which != "backward" && c.order_which != "forward" && c.order_which != "both")
        throw validation_error("config.which: must be 'backward', 'forward', or 'both'");
    }
    if (doc.contains("finite_sample")) {
      const json& jf = doc.at("finite_sample");
      require_object(jf, "config.finite_sample");
      reject_unknown_keys(jf, {"n", "sigma", "Q"}, "config.finite_sample");
      FiniteSampleDecl f;
      f.n = static_cast<int>(as_number(require_key(jf, "n", "config.finite_sample"),
                                       "config.finite_sample.n"));
      if (jf.contains("sigma")) f.sigma = as_number(jf.at("sigma"), "config.finite_sample.sigma");
      if (jf.contains("Q")) {
        const int K = c.order_spec->K;
        f.Q = as_matrix(jf.at("Q"), K, K, "config.finite_sample.Q");
      }
      c.finite_sample = std::move(f);
    }
  } else if (c.command == "limit-risk") {
    reject_unknown_keys(doc, with_common({"limit_spec", "schemes", "target", "loss", "delta_scales"}),
                        "config");
    c.limit_spec = parse_limit_spec(require_key(doc, "limit_spec", "config"), "config.limit_spec");
    const json& js = require_key(doc, "schemes", "config");
    if (!js.is_array() || js.empty()) throw validation_error("config.schemes: expected a nonempty array");
    for (std::size_t i = 0; i < js.size(); ++i)
      c.schemes.push_back(parse_scheme(js[i], "config.schemes[" + std::to_string(i) + "]"));
    if (doc.contains("target")) {
      const json& jt = doc.at("target");
      if (jt.is_string()) {
        if (jt.get<std::string>() != "average")
          throw validation_error("config.target: must be 'average' or a focus object");
      } else {
        c.target_focus = parse_focus(jt, "config.target");
      }
    }
    if (doc.contains("loss")) {
      const std::string l = as_string(doc.at("loss"), "config.loss");
      if (l == "squared") c.loss = Loss::squared;
      else if (l == "absolute") c.loss = Loss::absolute;
      else throw validation_error("config.loss: must be 'squared' or 'absolute'");
    }
    if (doc.contains("delta_scales")) {
      const Eigen::VectorXd scales = as_vector(doc.at("delta_scales"), "config.delta_scales");
      if (scales.size() == 0) throw validation_error("config.delta_scales: must be nonempty");
      c.delta_scales.assign(scales.data(), scales.data() + scales.size());
    }
  } else if (c.command == "simulate") {
    reject_unknown_keys(doc, with_common({"limit_spec", "n", "family"}), "config");
    c.limit_spec = parse_limit_spec(require_key(doc, "limit_spec", "config"), "config.limit_spec");
    c.sim_n = static_cast<int>(as_number(require_key(doc, "n", "config"), "config.n"));
    if (c.sim_n <= c.limit_spec->dim())
      throw validation_error("config.n: need n > p + q");
    if (doc.contains("family"))
      parse_family(doc.at("family"), "config.family", &c.family, &c.explicit_subsets);
  } else if (c.command == "tolerance") {
    reject_unknown_keys(doc, with_common({"omega", "K", "n", "gamma_offsets"}), "config");
    ToleranceDecl t;
    t.omega = as_vector(require_key(doc, "omega", "config"), "config.omega");
    const int q = static_cast<int>(t.omega.size());
    t.K = as_matrix(require_key(doc, "K", "config"), q, q, "config.K");
    t.n = static_cast<std::int64_t>(as_number(require_key(doc, "n", "config"), "config.n"));
    t.gamma_offsets = as_vector(require_key(doc, "gamma_offsets", "config"), "config.gamma_offsets");
    if (t.gamma_offsets.size() != q)
      throw validation_error("config.gamma_offsets: length differs from omega");
    c.tolerance = std::move(t);
  } else {
    throw validation_error("config.command: unknown command '" + c.command + "'");
  }
  return c;
}

inline nlohmann::json load_config_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open config file '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw validation_error("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return doc;
}

}  // namespace fic
