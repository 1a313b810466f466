#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "fic/limit.hpp"
#include "fic/linalg.hpp"
#include "helpers.hpp"

using namespace fic;
using Catch::Approx;

namespace {

LimitSpec random_spec(int p, int q, std::uint64_t seed, double delta_scale = 1.5) {
  return make_limit_spec(p, q, 0.5 + 0.1 * static_cast<double>(seed % 7),
                         test_helpers::random_spd(p + q, seed),
                         test_helpers::random_vector(q, seed + 50, delta_scale));
}

}  // namespace

TEST_CASE("limit spec validation and derived blocks") {
  CHECK_THROWS_AS(make_limit_spec(1, 1, 0.0, Eigen::MatrixXd::Identity(2, 2),
                                  Eigen::VectorXd::Zero(1)),
                  validation_error);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(2, 2);
  bad(0, 1) = bad(1, 0) = 2.0;  // indefinite
  CHECK_THROWS_AS(make_limit_spec(1, 1, 1.0, bad, Eigen::VectorXd::Zero(1)), numerical_error);

  // L matches the uncertain block of the full inverse on random specs
  for (std::uint64_t seed : {3u, 4u, 5u}) {
    LimitSpec s = random_spec(2, 3, seed);
    Eigen::MatrixXd full_inv = s.Sigma.inverse();
    CHECK((s.L - full_inv.bottomRightCorner(3, 3)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(s.K.isApprox((s.sigma * s.sigma * s.L).eval(), 1e-14));
  }
}

TEST_CASE("full-model limit law is exactly unbiased: mean = (0, delta)") {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const int p = 1 + static_cast<int>(seed % 3), q = 1 + static_cast<int>(seed % 4);
    LimitSpec s = random_spec(p, q, seed);
    SubmodelLimitLaw law = submodel_limit_law(s, SubsetId::full(q));
    CHECK(law.mean.head(p).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((law.mean.tail(q) - s.delta).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(law.tail.size() == 0);
  }
}

TEST_CASE("narrow law with identity blocks: C ~ N(0, sigma^2)") {
  LimitSpec s = make_limit_spec(1, 1, 2.0, Eigen::MatrixXd::Identity(2, 2),
                                (Eigen::VectorXd(1) << 2.0).finished());
  SubmodelLimitLaw law = submodel_limit_law(s, SubsetId::empty());
  REQUIRE(law.mean.size() == 1);
  CHECK(law.mean(0) == Approx(0.0).margin(1e-14));
  CHECK(law.cov(0, 0) == Approx(4.0));
  CHECK(law.tail(0) == Approx(-2.0));
}

TEST_CASE("submodel limit law matches finite-sample simulation") {
  // sqrt(n)-scaled subset fits at n = 5000 over 10000 replicates: empirical
  // mean and covariance within 3 MC se of the stated law
  const int p = 1, q = 2, n = 5000;
  const std::int64_t R = 10000;
  LimitSpec s = random_spec(p, q, 21, 1.0);
  const SubsetId S({1});
  const SubmodelLimitLaw law = submodel_limit_law(s, S);
  const int dim = p + S.size();

  const Eigen::MatrixXd Z = linalg::design_with_moments(n, s.Sigma);
  Eigen::MatrixXd Zs(n, dim);
  Zs << Z.leftCols(p), Z.col(p + 0);  // protected plus u_1
  const Eigen::VectorXd beta_true = test_helpers::random_vector(p, 77);
  const Eigen::VectorXd gamma_true = s.delta / std::sqrt(static_cast<double>(n));
  const Eigen::VectorXd mu = Z.leftCols(p) * beta_true + Z.rightCols(q) * gamma_true;
  const Eigen::MatrixXd gram = (Zs.transpose() * Zs) / static_cast<double>(n);
  const Eigen::LLT<Eigen::MatrixXd> llt(gram);
  const Eigen::VectorXd Zs_mu = Zs.transpose() * mu / static_cast<double>(n);

  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
  Eigen::MatrixXd sum_sq = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::MatrixXd sum_pair = Eigen::MatrixXd::Zero(dim, dim);   // per-entry products
  Eigen::MatrixXd sum_pair2 = Eigen::MatrixXd::Zero(dim, dim);  // their squares
  Eigen::VectorXd eps(n), v(dim);
  for (std::int64_t i = 0; i < R; ++i) {
    NormalStream ns(31337, static_cast<std::uint64_t>(i));
    for (int r = 0; r < n; ++r) eps(r) = s.sigma * ns();
    const Eigen::VectorXd coef = llt.solve(Zs_mu + Zs.transpose() * eps / static_cast<double>(n));
    v.head(p) = coef.head(p) - beta_true;
    v.tail(S.size()) = coef.tail(S.size());
    v *= std::sqrt(static_cast<double>(n));
    sum += v;
    sum_sq += v * v.transpose();
    for (int a = 0; a < dim; ++a)
      for (int b = 0; b < dim; ++b) {
        const double prod = v(a) * v(b);
        sum_pair(a, b) += prod;
        sum_pair2(a, b) += prod * prod;
      }
  }
  const Eigen::VectorXd mean = sum / static_cast<double>(R);
  const Eigen::MatrixXd second = sum_sq / static_cast<double>(R);
  const Eigen::MatrixXd cov_emp = second - mean * mean.transpose();
  for (int a = 0; a < dim; ++a) {
    const double se = std::sqrt(cov_emp(a, a) / static_cast<double>(R));
    CHECK(std::abs(mean(a) - law.mean(a)) <= 3.0 * se);
  }
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b) {
      const double m2 = sum_pair(a, b) / static_cast<double>(R);
      const double var_prod = sum_pair2(a, b) / static_cast<double>(R) - m2 * m2;
      const double se = std::sqrt(var_prod / static_cast<double>(R)) + 1e-12;
      // mean product vs law second moment (cov + mean outer product)
      const double expect = law.cov(a, b) + law.mean(a) * law.mean(b);
      CHECK(std::abs(m2 - expect) <= 3.0 * se);
    }
}

TEST_CASE("closed-form limit risk: worked values 5, 2, 3") {
  LimitSpec s = make_limit_spec(1, 2, 1.0, Eigen::MatrixXd::Identity(3, 3),
                                (Eigen::VectorXd(2) << 2, 0).finished());
  CHECK(limit_risk_closed_form(s, SubsetId::empty()) == Approx(5.0));
  CHECK(limit_risk_closed_form(s, SubsetId({1})) == Approx(2.0));
  CHECK(limit_risk_closed_form(s, SubsetId::full(2)) == Approx(3.0));
}

TEST_CASE("delta = 0, full model, Omega = Sigma: (p + q) sigma^2") {
  LimitSpec s = make_limit_spec(2, 2, 1.3, test_helpers::random_spd(4, 31),
                                Eigen::VectorXd::Zero(2));
  CHECK(limit_risk_closed_form(s, SubsetId::full(2)) == Approx(4 * 1.3 * 1.3));
}

TEST_CASE("Omega = Sigma reduction to the displayed closed form") {
  // closed form equals (p+|S|) sigma^2 + delta^t L^{-1/2}(I - H_S) L^{-1/2} delta
  std::uint64_t seed = 200;
  for (int rep = 0; rep < 50; ++rep) {
    const int p = 1 + rep % 3, q = 1 + rep % 4;
    LimitSpec s = random_spec(p, q, ++seed);
    const Eigen::MatrixXd Lmh = linalg::spd_inv_sqrt(s.L);
    for (const auto& S : subset_family(SubsetFamily::all, q)) {
      const Eigen::MatrixXd H = subset_blocks(s.L, S).H_S;
      const Eigen::VectorXd t = Lmh * s.delta;
      const double displayed =
          (p + S.size()) * s.sigma * s.sigma +
          t.dot((Eigen::MatrixXd::Identity(q, q) - H) * t);
      CHECK(std::abs(limit_risk_closed_form(s, S) - displayed) < 1e-8);
    }
  }
}

TEST_CASE("risk ordering sanity at delta = 0: narrow <= full") {
  for (std::uint64_t seed : {61u, 62u, 63u}) {
    LimitSpec s = make_limit_spec(2, 3, 1.1, test_helpers::random_spd(5, seed),
                                  Eigen::VectorXd::Zero(3));
    CHECK(limit_risk_closed_form(s, SubsetId::empty()) <=
          limit_risk_closed_form(s, SubsetId::full(3)));
  }
}

TEST_CASE("MC risk of the degenerate full scheme matches the closed form") {
  for (std::uint64_t seed : {71u, 72u, 73u}) {
    LimitSpec s = random_spec(2, 2, seed);
    const SubsetId full = SubsetId::full(2);
    const McEstimate mc = limit_risk_mc(s, WeightScheme::single(full), RiskTarget::average(),
                                        Loss::squared, 100000, seed);
    CHECK(std::abs(mc.value - limit_risk_closed_form(s, full)) <= 3.0 * mc.se);
  }
}

TEST_CASE("scalar-focus closed form matches the rank-one Omega route") {
  for (std::uint64_t seed : {81u, 82u}) {
    const int p = 1, q = 3;
    LimitSpec s = random_spec(p, q, seed);
    const FocusSpec focus = FocusSpec::point_prediction(test_helpers::random_vector(p, seed + 5),
                                                        test_helpers::random_vector(q, seed + 6));
    auto [ax, au] = focus_loading(focus, p, q);
    Eigen::VectorXd a(p + q);
    a << ax, au;
    const LimitSpec rank_one =
        make_limit_spec(p, q, s.sigma, s.Sigma, s.delta, (a * a.transpose()).eval());
    for (const auto& S : subset_family(SubsetFamily::all, q)) {
      CHECK(limit_risk_closed_form(s, S, focus) ==
            Approx(limit_risk_closed_form(rank_one, S)).margin(1e-10));
    }
  }
}

TEST_CASE("fifty-fifty averaging of empty and full is no worse at delta = 0") {
  LimitSpec s = make_limit_spec(1, 2, 1.0, test_helpers::random_spd(3, 91),
                                Eigen::VectorXd::Zero(2));
  const std::vector<SubsetId> support{SubsetId::empty(), SubsetId::full(2)};
  const WeightScheme mix =
      WeightScheme::fixed_weights(support, (Eigen::VectorXd(2) << 0.5, 0.5).finished());
  const McEstimate mixed =
      limit_risk_mc(s, mix, RiskTarget::average(), Loss::squared, 200000, 7);
  const double avg = 0.5 * (limit_risk_closed_form(s, SubsetId::empty()) +
                            limit_risk_closed_form(s, SubsetId::full(2)));
  CHECK(mixed.value <= avg + 3.0 * mixed.se);
}

TEST_CASE("absolute loss, full scheme, p = 0: half-normal mean oracle") {
  const int q = 2;
  LimitSpec s = make_limit_spec(0, q, 1.4, test_helpers::random_spd(q, 101),
                                test_helpers::random_vector(q, 102));
  const Eigen::VectorXd omega = test_helpers::random_vector(q, 103);
  const RiskTarget target = RiskTarget::scalar(FocusSpec::custom(omega));
  const McEstimate mc = limit_risk_mc(s, WeightScheme::single(SubsetId::full(q)), target,
                                      Loss::absolute, 200000, 11);
  const double expect = std::sqrt(2.0 * omega.dot(s.K * omega) / M_PI);
  CHECK(std::abs(mc.value - expect) <= 3.0 * mc.se);
}

TEST_CASE("risk-min scheme beats nothing it should not: runs and stays finite") {
  LimitSpec s = random_spec(1, 2, 111);
  const WeightScheme sel = scheme_risk_min(s, subset_family(SubsetFamily::all, 2));
  const McEstimate mc = limit_risk_mc(s, sel, RiskTarget::average(), Loss::squared, 20000, 3);
  CHECK(std::isfinite(mc.value));
  CHECK(mc.se > 0.0);
}

TEST_CASE("limit_risk_mc input validation") {
  LimitSpec s = random_spec(1, 1, 121);
  CHECK_THROWS_AS(limit_risk_mc(s, WeightScheme::single(SubsetId::full(1)),
                                RiskTarget::average(), Loss::squared, 10, 0),
                  validation_error);
  CHECK_THROWS_AS(limit_risk_mc(s, WeightScheme::single(SubsetId::full(1)),
                                RiskTarget::average(), Loss::absolute, 2000, 0),
                  validation_error);
}

TEST_CASE("model averaging mechanics") {
  const Eigen::VectorXd D = Eigen::VectorXd::Zero(2);
  SECTION("single-subset scheme passes the estimate through") {
    const WeightScheme s = WeightScheme::single(SubsetId({1}));
    CHECK(model_average_estimate(D, s, {4.25}) == 4.25);
  }
  SECTION("equal weights average 1 and 3 to 2") {
    const WeightScheme s = WeightScheme::fixed_weights(
        {SubsetId({1}), SubsetId({2})}, (Eigen::VectorXd(2) << 0.5, 0.5).finished());
    CHECK(model_average_estimate(D, s, {1.0, 3.0}) == Approx(2.0));
  }
  SECTION("gamma_j focus zeroes subsets not touching j") {
    const WeightScheme s = WeightScheme::fixed_weights(
        {SubsetId::empty(), SubsetId({1})}, (Eigen::VectorXd(2) << 0.25, 0.75).finished());
    CHECK(model_average_estimate(D, s, {5.0, 7.0}, 1) == Approx(0.75 * 7.0));
    CHECK(model_average_estimate(D, s, {5.0, 7.0}) == Approx(0.25 * 5.0 + 0.75 * 7.0));
  }
  SECTION("weights must sum to one") {
    const WeightScheme bad = WeightScheme::smooth(
        {SubsetId({1}), SubsetId({2})},
        [](const Eigen::VectorXd&) { return (Eigen::VectorXd(2) << 0.5, 0.4).finished(); });
    CHECK_THROWS_AS(model_average_estimate(D, bad, {1.0, 2.0}), numerical_error);
    CHECK_THROWS_AS(WeightScheme::fixed_weights({SubsetId({1})},
                                                (Eigen::VectorXd(1) << 0.9).finished()),
                    validation_error);
  }
  SECTION("smooth weights are accepted when they sum to one") {
    const WeightScheme soft = WeightScheme::smooth(
        {SubsetId::empty(), SubsetId({1})}, [](const Eigen::VectorXd& d) {
          const double w = 1.0 / (1.0 + std::exp(-d(0)));
          return (Eigen::VectorXd(2) << 1.0 - w, w).finished();
        });
    const Eigen::VectorXd at = (Eigen::VectorXd(2) << 1.2, 0.0).finished();
    CHECK(model_average_estimate(at, soft, {0.0, 1.0}) ==
          Approx(1.0 / (1.0 + std::exp(-1.2))));
  }
}

TEST_CASE("tolerance inequality") {
  SECTION("diagonal K reproduces the two-term display") {
    // omega = (1, 0), K = diag(k1, k2): inside iff n beta1^2 <= k1
    ToleranceSpec t{(Eigen::VectorXd(2) << 1, 0).finished(),
                    (Eigen::MatrixXd(2, 2) << 5.0, 0, 0, 2.0).finished(), 16};
    Eigen::VectorXd offsets(2);
    offsets << 0.5, 3.0;  // second coordinate invisible to this focus
    const ToleranceResult r = tolerance_check(t, offsets);
    CHECK(r.lhs == Approx(4.0 * 0.5));
    CHECK(r.rhs == Approx(std::sqrt(5.0)));
    CHECK(r.inside == (16.0 * 0.25 <= 5.0));
  }
  SECTION("gamma = gamma0 is always inside") {
    ToleranceSpec t{test_helpers::random_vector(3, 131),
                    test_helpers::random_spd(3, 132), 1000};
    CHECK(tolerance_check(t, Eigen::VectorXd::Zero(3)).inside);
  }
  SECTION("boundary counts as inside (closed inequality)") {
    ToleranceSpec t{(Eigen::VectorXd(2) << 1, 0).finished(),
                    (Eigen::MatrixXd(2, 2) << 4.0, 0, 0, 1.0).finished(), 4};
    Eigen::VectorXd offsets(2);
    offsets << 1.0, 0.0;  // lhs = 2 exactly, rhs = 2 exactly
    const ToleranceResult r = tolerance_check(t, offsets);
    CHECK(r.lhs == r.rhs);
    CHECK(r.inside);
  }
}

TEST_CASE("tolerance ellipse") {
  SECTION("gamma = gamma0 is inside") {
    CHECK(tolerance_ellipse_predicate(test_helpers::random_spd(2, 141),
                                      Eigen::VectorXd::Zero(2), 100));
  }
  SECTION("diagonal K reproduces k_j = 1/K_jj weights") {
    Eigen::MatrixXd K = (Eigen::MatrixXd(2, 2) << 4.0, 0, 0, 0.25).finished();
    Eigen::VectorXd off(2);
    off << 0.1, 0.02;
    const double quad = 0.1 * 0.1 / 4.0 + 0.02 * 0.02 / 0.25;
    const int n = 300;
    CHECK(tolerance_ellipse_predicate(K, off, n) == (quad <= 1.0 / n));
  }
  SECTION("ellipse inside implies tolerance for every focus (Cauchy-Schwarz sweep)") {
    const Eigen::MatrixXd K = test_helpers::random_spd(3, 151);
    const std::int64_t n = 400;
    // a point just inside the ellipse
    Eigen::VectorXd dir = test_helpers::random_vector(3, 152);
    const double quad = dir.dot(K.llt().solve(dir));
    Eigen::VectorXd offsets = dir * std::sqrt(0.98 / (static_cast<double>(n) * quad));
    REQUIRE(tolerance_ellipse_predicate(K, offsets, n));
    for (std::uint64_t i = 0; i < 100; ++i) {
      ToleranceSpec t{test_helpers::random_vector(3, 1000 + i), K, n};
      CHECK(tolerance_check(t, offsets).inside);
    }
  }
}

TEST_CASE("weibull quantile focus") {
  SECTION("the 0.7826-quantile zeroes omega") {
    CHECK(std::abs(weibull_omega({0.7826, 1.0})) < 1e-3);
  }
  SECTION("nu = 1 gives -(1 - r)") {
    const double alpha = 1.0 - std::exp(-1.0);
    CHECK(weibull_omega({alpha, 1.0}) == Approx(-(1.0 - 0.5772157)).epsilon(1e-9));
  }
  SECTION("doubling theta halves omega") {
    WeibullQuantileExample a{0.9, 1.0};
    WeibullQuantileExample b{0.9, 2.0};
    CHECK(weibull_omega(b) == Approx(weibull_omega(a) / 2.0));
  }
  SECTION("omega changes sign across alpha = 0.7826") {
    double prev = weibull_omega({0.70, 1.0});
    bool crossed = false;
    for (double alpha = 0.71; alpha < 0.86; alpha += 0.01) {
      const double cur = weibull_omega({alpha, 1.0});
      if (prev < 0.0 && cur > 0.0) crossed = true;
      prev = cur;
    }
    CHECK(crossed);
    CHECK(weibull_omega({0.70, 1.0}) < 0.0);
    CHECK(weibull_omega({0.86, 1.0}) > 0.0);
  }
  SECTION("domain validation") {
    CHECK_THROWS_AS(weibull_omega({1.5, 1.0}), validation_error);
    CHECK_THROWS_AS(weibull_omega({0.5, -1.0}), validation_error);
  }
}

TEST_CASE("simulate_limit_D: determinism, location, covariance") {
  const Eigen::VectorXd delta = (Eigen::VectorXd(2) << 1.0, -2.0).finished();
  const Eigen::MatrixXd K = test_helpers::random_spd(2, 161);
  SECTION("same seed twice gives identical draws") {
    const Eigen::MatrixXd a = simulate_limit_D(delta, K, 500, 99);
    const Eigen::MatrixXd b = simulate_limit_D(delta, K, 500, 99);
    CHECK(a == b);
  }
  SECTION("delta shift moves the empirical mean accordingly") {
    const std::int64_t R = 100000;
    const Eigen::MatrixXd base = simulate_limit_D(Eigen::VectorXd::Zero(2), K, R, 5);
    const Eigen::MatrixXd shifted = simulate_limit_D(delta, K, R, 5);
    for (int j = 0; j < 2; ++j) {
      const double se = std::sqrt(K(j, j) / static_cast<double>(R));
      CHECK(std::abs(shifted.col(j).mean() - base.col(j).mean() - delta(j)) <= 3.0 * se);
    }
  }
  SECTION("identity K: empirical covariance within 0.01 entrywise at R = 1e6") {
    const std::int64_t R = 1000000;
    const Eigen::MatrixXd draws =
        simulate_limit_D(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2), R, 17);
    const Eigen::VectorXd mean = draws.colwise().mean();
    Eigen::MatrixXd cov = (draws.transpose() * draws) / static_cast<double>(R);
    cov -= mean * mean.transpose();
    CHECK((cov - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 0.01);
  }
  SECTION("K must be SPD") {
    CHECK_THROWS_AS(simulate_limit_D(delta, Eigen::MatrixXd::Zero(2, 2), 100, 0),
                    numerical_error);
  }
}

TEST_CASE("MC risks are reproducible and thread-count independent") {
  LimitSpec s = random_spec(1, 2, 171);
  const WeightScheme sel = scheme_risk_min(s, subset_family(SubsetFamily::all, 2));
  const McEstimate one = limit_risk_mc(s, sel, RiskTarget::average(), Loss::squared, 30000, 13, 1);
  const McEstimate again =
      limit_risk_mc(s, sel, RiskTarget::average(), Loss::squared, 30000, 13, 1);
  const McEstimate eight =
      limit_risk_mc(s, sel, RiskTarget::average(), Loss::squared, 30000, 13, 8);
  CHECK(one.value == again.value);
  CHECK(one.value == eight.value);
  CHECK(one.se == eight.se);
}
