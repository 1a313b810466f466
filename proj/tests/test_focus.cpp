#include <catch2/catch_amalgamated.hpp>

#include "fic/focus.hpp"
#include "helpers.hpp"

using namespace fic;
using Catch::Approx;

TEST_CASE("gamma coefficient focus gives omega = -e_j") {
  Eigen::MatrixXd sigma = test_helpers::random_spd(5, 3);  // p=2, q=3
  Eigen::VectorXd omega = focus_omega(FocusSpec::gamma_coef(2), sigma, 2, 3);
  Eigen::VectorXd expect(3);
  expect << 0, -1, 0;
  CHECK(omega.isApprox(expect, 1e-12));
}

TEST_CASE("orthogonal design point prediction gives omega = -u0") {
  const int p = 2, q = 2;
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(p + q, p + q);
  sigma.topLeftCorner(p, p) = test_helpers::random_spd(p, 4);
  sigma.bottomRightCorner(q, q) = test_helpers::random_spd(q, 5);
  Eigen::VectorXd x0 = test_helpers::random_vector(p, 6);
  Eigen::VectorXd u0 = test_helpers::random_vector(q, 7);
  Eigen::VectorXd omega = focus_omega(FocusSpec::point_prediction(x0, u0), sigma, p, q);
  CHECK(omega.isApprox((-u0).eval(), 1e-10));

  SECTION("u0 = 0 on top of the orthogonal design gives omega = 0") {
    Eigen::VectorXd omega0 =
        focus_omega(FocusSpec::point_prediction(x0, Eigen::VectorXd::Zero(q)), sigma, p, q);
    CHECK(omega0.cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("general point prediction: Sigma10 Sigma00^{-1} x0 - u0") {
  const int p = 2, q = 3;
  Eigen::MatrixXd sigma = test_helpers::random_spd(p + q, 8);
  Eigen::VectorXd x0 = test_helpers::random_vector(p, 9);
  Eigen::VectorXd u0 = test_helpers::random_vector(q, 10);
  Eigen::VectorXd omega = focus_omega(FocusSpec::point_prediction(x0, u0), sigma, p, q);
  Eigen::MatrixXd s00 = sigma.topLeftCorner(p, p);
  Eigen::MatrixXd s10 = sigma.bottomLeftCorner(q, p);
  CHECK(omega.isApprox((s10 * s00.inverse() * x0 - u0).eval(), 1e-9));

  // beta contrast is the x0 = e_j, u0 = 0 instance
  Eigen::VectorXd omega_b = focus_omega(FocusSpec::beta_contrast(1), sigma, p, q);
  CHECK(omega_b.isApprox((s10 * s00.inverse() * Eigen::VectorXd::Unit(p, 0)).eval(), 1e-9));
}

TEST_CASE("missing point and bad sizes rejected") {
  Eigen::MatrixXd sigma = test_helpers::random_spd(3, 11);
  FocusSpec f;
  f.kind = FocusSpec::Kind::point_prediction;  // no point supplied
  CHECK_THROWS_AS(focus_omega(f, sigma, 1, 2), validation_error);
  CHECK_THROWS_AS(focus_omega(FocusSpec::gamma_coef(5), sigma, 1, 2), validation_error);
  CHECK_THROWS_AS(focus_omega(FocusSpec::custom(Eigen::VectorXd::Zero(3)), sigma, 1, 2),
                  validation_error);
}

TEST_CASE("custom focus passes omega through") {
  Eigen::MatrixXd sigma = test_helpers::random_spd(3, 12);
  Eigen::VectorXd omega = test_helpers::random_vector(2, 13);
  CHECK(focus_omega(FocusSpec::custom(omega), sigma, 1, 2) == omega);
  auto [ax, au] = focus_loading(FocusSpec::custom(omega), 1, 2);
  CHECK(ax.size() == 1);
  CHECK(au.isApprox((-omega).eval()));
}

TEST_CASE("narrow-model variance tau0^2") {
  const int p = 2, q = 2;
  Eigen::MatrixXd sigma = test_helpers::random_spd(p + q, 14);
  Eigen::VectorXd x0 = test_helpers::random_vector(p, 15);
  const double sigma_err = 1.7;
  const double got = tau0_sq(FocusSpec::point_prediction(x0, Eigen::VectorXd::Zero(q)), sigma, p,
                             q, sigma_err);
  const double expect =
      sigma_err * sigma_err * x0.dot(sigma.topLeftCorner(p, p).inverse() * x0);
  CHECK(got == Approx(expect));
  CHECK(tau0_sq(FocusSpec::gamma_coef(1), sigma, p, q, sigma_err) == 0.0);
}
