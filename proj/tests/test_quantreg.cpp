#include "pqvar/distributions.hpp"
#include "pqvar/errors.hpp"
#include "pqvar/quantreg.hpp"

#include "oracles.hpp"

#include <catch_amalgamated.hpp>

#include <random>

using namespace pqvar;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Eigen::VectorXd iota_vector(int n)
{
  return Eigen::VectorXd::LinSpaced(n, 1.0, n);
}

} // namespace

TEST_CASE("pinball loss", "[quantreg]")
{
  CHECK(quantreg::pinball_loss(1.0, 0.0, 0.9) == Catch::Approx(0.9));
  CHECK(quantreg::pinball_loss(0.0, 1.0, 0.9) == Catch::Approx(0.1));
  for (double q : {0.1, 0.5, 0.9}) {
    CHECK(quantreg::pinball_loss(3.25, 3.25, q) == 0.0);
  }
}

TEST_CASE("intercept-only median is the sample median", "[quantreg]")
{
  const Eigen::MatrixXd X(9, 0);
  const auto fit = quantreg::fit(X, iota_vector(9), 0.5);
  CHECK_THAT(fit.intercept, WithinAbs(5.0, 1e-9));
}

TEST_CASE("intercept-only q=0.9 lands on the minimizing interval", "[quantreg]")
{
  const Eigen::MatrixXd X(9, 0);
  const Eigen::VectorXd y = iota_vector(9);
  const auto fit = quantreg::fit(X, y, 0.9);
  CHECK(fit.intercept >= 8.0 - 1e-9);
  CHECK(fit.intercept <= 9.0 + 1e-9);

  // 1-D grid search over the intercept
  double best = 1e300;
  for (double c = 0.0; c <= 10.0; c += 1e-3) {
    best = std::min(best, oracle::pinball((y.array() - c).matrix(), 0.9));
  }
  CHECK(fit.objective <= best + 1e-9);
}

TEST_CASE("exact linear data is interpolated", "[quantreg]")
{
  Eigen::MatrixXd X(20, 1);
  X.col(0) = Eigen::VectorXd::LinSpaced(20, -3.0, 4.0);
  const Eigen::VectorXd y = 2.0 * X.col(0);
  for (double q : {0.1, 0.5, 0.9}) {
    const auto fit = quantreg::fit(X, y, q);
    CHECK_THAT(fit.alpha(0), WithinAbs(2.0, 1e-8));
    CHECK_THAT(fit.intercept, WithinAbs(0.0, 1e-8));
  }
}

TEST_CASE("solver reaches the LP optimum on random problems", "[quantreg][property]")
{
  std::mt19937_64 rng(20240611);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> size(8, 40);
  for (int rep = 0; rep < 60; ++rep) {
    const int T = size(rng);
    const int K = rep % 3;
    const double q = std::array{0.1, 0.5, 0.9}[static_cast<std::size_t>(rep % 3)];
    Eigen::MatrixXd X(T, K);
    Eigen::VectorXd y(T);
    for (int t = 0; t < T; ++t) {
      for (int k = 0; k < K; ++k) {
        X(t, k) = normal(rng);
      }
      y(t) = (K > 0 ? X.row(t).sum() : 0.0) + normal(rng) * (1.0 + 0.5 * std::fabs(normal(rng)));
    }
    Eigen::MatrixXd Z(T, K + 1);
    Z << X, Eigen::VectorXd::Ones(T);
    const double best = oracle::brute_force_objective(Z, y, q);
    const auto fit = quantreg::fit(X, y, q);
    INFO("rep " << rep << " T=" << T << " K=" << K << " q=" << q);
    CHECK(fit.objective <= best * (1.0 + 1e-9) + 1e-12);
    CHECK(fit.objective >= best * (1.0 - 1e-9) - 1e-12);
  }
}

TEST_CASE("fit is equivariant to location and scale of y", "[quantreg][property]")
{
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  const int T = 200;
  Eigen::MatrixXd X(T, 2);
  Eigen::VectorXd y(T);
  for (int t = 0; t < T; ++t) {
    X(t, 0) = normal(rng);
    X(t, 1) = normal(rng);
    y(t) = 0.5 * X(t, 0) - X(t, 1) + normal(rng);
  }
  for (double q : {0.1, 0.5, 0.9}) {
    const auto base = quantreg::fit(X, y, q);
    const auto shifted = quantreg::fit(X, (y.array() + 7.0).matrix(), q);
    CHECK_THAT(shifted.intercept, WithinAbs(base.intercept + 7.0, 1e-8));
    CHECK((shifted.alpha - base.alpha).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((shifted.residuals - base.residuals).cwiseAbs().maxCoeff() < 1e-8);

    const auto scaled = quantreg::fit(X, 3.0 * y, q);
    CHECK((scaled.alpha - 3.0 * base.alpha).cwiseAbs().maxCoeff() < 1e-8);
    // t-values are invariant to rescaling y
    CHECK((scaled.t_values() - base.t_values()).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("quantile fits leave about q of the residuals below zero", "[quantreg][property]")
{
  std::mt19937_64 rng(77);
  std::normal_distribution<double> normal;
  const int T = 500;
  Eigen::MatrixXd X(T, 1);
  Eigen::VectorXd y(T);
  for (int t = 0; t < T; ++t) {
    X(t, 0) = normal(rng);
    y(t) = X(t, 0) + normal(rng);
  }
  for (double q : {0.1, 0.5, 0.9}) {
    const auto fit = quantreg::fit(X, y, q);
    const double below = (fit.residuals.array() < -1e-9).cast<double>().sum();
    const double zero = (fit.residuals.array().abs() <= 1e-9).cast<double>().sum();
    // optimality: #below ≤ qT ≤ #below + #zero
    CHECK(below <= q * T + 1e-9);
    CHECK(below + zero >= q * T - 1e-9);
  }
}

TEST_CASE("rank-deficient designs are rejected", "[quantreg]")
{
  Eigen::MatrixXd X(30, 2);
  X.col(0) = Eigen::VectorXd::LinSpaced(30, 0.0, 1.0);
  X.col(1) = 2.0 * X.col(0);
  const Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(30, 0.0, 1.0);
  CHECK_THROWS_AS(quantreg::fit(X, y, 0.5), RankDeficientError);

  Eigen::MatrixXd C = Eigen::MatrixXd::Constant(30, 1, 4.0);
  try {
    quantreg::fit(C, y, 0.5);
    FAIL("expected RankDeficientError");
  } catch (const RankDeficientError& e) {
    CHECK(!e.columns().empty());
  }
}

TEST_CASE("sandwich covariance", "[quantreg]")
{
  SECTION("all residuals positive collapses D to a scaled identity")
  {
    Eigen::MatrixXd X(5, 1);
    X << 1, 2, 4, 3, -1;
    const Eigen::VectorXd r = Eigen::VectorXd::Constant(5, 0.3);
    const double f0 = 0.8;
    const auto cov = quantreg::estimate_covariance(X, r, 0.5, f0);
    Eigen::MatrixXd Z(5, 2);
    Z << X, Eigen::VectorXd::Ones(5);
    const Eigen::MatrixXd expected = 0.5 / (f0 * f0) * (Z.transpose() * Z).inverse();
    CHECK((cov - expected).cwiseAbs().maxCoeff() < 1e-12);
  }
  SECTION("intercept-only, half positive residuals")
  {
    const Eigen::MatrixXd X(100, 0);
    Eigen::VectorXd r(100);
    for (int t = 0; t < 100; ++t) {
      r(t) = t % 2 ? 1.0 : -1.0;
    }
    const auto cov = quantreg::estimate_covariance(X, r, 0.5, 1.0);
    CHECK_THAT(cov(0, 0), WithinAbs(0.005, 1e-15));
  }
  SECTION("matches an explicit dense evaluation")
  {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal;
    for (double q : {0.1, 0.5, 0.9}) {
      Eigen::MatrixXd X(40, 3);
      Eigen::VectorXd r(40);
      for (int t = 0; t < 40; ++t) {
        X.row(t) << normal(rng), normal(rng), normal(rng);
        r(t) = t % 7 == 0 ? 0.0 : normal(rng);
      }
      const auto cov = quantreg::estimate_covariance(X, r, q, 0.37);
      const auto dense = oracle::dense_sandwich(X, r, q, 0.37);
      CHECK((cov - dense).cwiseAbs().maxCoeff() < 1e-10 * dense.cwiseAbs().maxCoeff());
      CHECK((cov - cov.transpose()).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("kernel density at zero", "[quantreg]")
{
  CHECK_THAT(quantreg::kde_density_at_zero(Eigen::VectorXd::Zero(1), 1.0, 1e-10),
             WithinAbs(1.0 / std::sqrt(2.0 * M_PI), 1e-15));
  Eigen::VectorXd two(2);
  two << -1.0, 1.0;
  CHECK_THAT(quantreg::kde_density_at_zero(two, 1.0, 1e-10),
             WithinAbs(0.5 * (oracle::normal_pdf(-1.0) + oracle::normal_pdf(1.0)), 1e-15));
  CHECK_THAT(quantreg::kde_density_at_zero(two, 1.0, 1e-10), WithinAbs(0.24197, 1e-5));
  CHECK(quantreg::kde_density_at_zero(Eigen::VectorXd::Constant(5, 10.0), 0.1, 1e-10) == 1e-10);
}

TEST_CASE("Hall-Sheather bandwidth matches the closed form", "[quantreg]")
{
  for (double T : {100.0, 1000.0, 5000.0}) {
    for (double q : {0.1, 0.5, 0.9}) {
      const double z = oracle::inverse_normal(0.975);
      const double x = oracle::inverse_normal(q);
      const double phi = oracle::normal_pdf(x);
      const double expected = std::pow(T, -1.0 / 3.0) * std::pow(z, 2.0 / 3.0) *
                              std::pow(1.5 * phi * phi / (2.0 * x * x + 1.0), 1.0 / 3.0);
      CHECK_THAT(quantreg::hall_sheather_bandwidth(T, q, 0.05), WithinRel(expected, 1e-9));
    }
  }
}

TEST_CASE("bandwidth conversion to residual units", "[quantreg]")
{
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal;
  Eigen::VectorXd y(1000), r(1000);
  for (int t = 0; t < 1000; ++t) {
    y(t) = 5.0 * normal(rng);
    r(t) = normal(rng);
  }
  const double h = 0.05;
  const double bw = quantreg::residual_scale_bandwidth(h, 0.5, y, r);
  // IQR/1.34 of the residuals is the smaller scale here
  std::vector<double> s(r.data(), r.data() + r.size());
  std::sort(s.begin(), s.end());
  auto q7 = [&](double p) {
    const double pos = p * (s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    return s[lo] + (pos - lo) * (s[std::min(lo + 1, s.size() - 1)] - s[lo]);
  };
  const double scale = (q7(0.75) - q7(0.25)) / 1.34;
  const double width = oracle::inverse_normal(0.55) - oracle::inverse_normal(0.45);
  CHECK_THAT(bw, WithinRel(scale * width, 1e-9));
  // degenerate residuals fall back to a positive bandwidth
  CHECK(quantreg::residual_scale_bandwidth(h, 0.5, y, Eigen::VectorXd::Zero(1000)) > 0.0);
}

TEST_CASE("Wald t", "[quantreg]")
{
  CHECK(quantreg::wald_t(0.0, 0.7) == 0.0);
  CHECK(quantreg::wald_t(1.5, 0.5) == 3.0);
  CHECK(quantreg::wald_t(-2.0, 0.5) == -4.0);
}

TEST_CASE("critical value agrees with an independent inverse normal", "[quantreg]")
{
  for (double alpha : {0.1, 0.05, 0.01, 0.001, 1e-6}) {
    CHECK_THAT(dist::two_sided_critical_value(alpha),
               WithinAbs(oracle::inverse_normal(1.0 - alpha / 2.0), 1e-9));
  }
  for (double p = 0.001; p < 1.0; p += 0.0173) {
    CHECK_THAT(dist::normal_quantile(p), WithinAbs(oracle::inverse_normal(p), 1e-9));
  }
  CHECK_THROWS_AS(dist::normal_quantile(0.0), std::invalid_argument);
}
