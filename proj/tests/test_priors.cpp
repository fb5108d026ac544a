#include <gtest/gtest.h>

#include <cmath>

#include "fabppi/errors.hpp"
#include "fabppi/priors.hpp"
#include "fabppi/specfun.hpp"
#include "oracles.hpp"

using namespace fabppi;

namespace {

double log_normal_pdf(double y, double var) {
  return -0.5 * y * y / var - 0.5 * std::log(2.0 * M_PI * var);
}

// Direct integration over the half-Cauchy scale, written independently of
// the library's substitution.
double hs_density_oracle(double y, double sigma, double tau) {
  auto f = [=](oracle::ld nu) {
    const oracle::ld var = sigma * sigma + tau * tau * nu * nu;
    return std::exp(-0.5L * y * y / var) / std::sqrt(2.0L * M_PIl * var) * (2.0L / M_PIl) /
           (1.0L + nu * nu);
  };
  // nu = tan(phi) maps the half line onto [0, pi/2).
  auto g = [&](oracle::ld phi) {
    if (phi >= M_PI_2l) return 0.0L;
    const oracle::ld c = std::cos(phi);
    return f(std::tan(phi)) / (c * c);
  };
  return static_cast<double>(oracle::simpson(g, 0.0L, M_PI_2l, 200000));
}

}  // namespace

TEST(GaussianMarginal, ReferenceValues) {
  EXPECT_DOUBLE_EQ(gaussian_log_marginal(1.0, 1.0, 1.0).log_density_deriv, -0.5);
  EXPECT_EQ(gaussian_log_marginal(0.0, 0.3, 2.0).log_density_deriv, 0.0);
  EXPECT_NEAR(gaussian_log_marginal(2.0, 1.0, 2.0).log_density, log_normal_pdf(2.0, 5.0), 1e-14);
  EXPECT_EQ(gaussian_log_marginal(2.0, 1.0, 2.0).method, MarginalEval::Method::ClosedForm);
}

TEST(HorseshoeMarginal, DensityAtOrigin) {
  const double expected = 2.0 / (M_PI * std::sqrt(2.0 * M_PI));
  EXPECT_NEAR(expected, 0.25397, 1e-5);
  const auto cf = hs_log_marginal(0.0, 1.0, 1.0);
  EXPECT_EQ(cf.method, MarginalEval::Method::ClosedForm);
  EXPECT_NEAR(std::exp(cf.log_density), expected, 1e-12);
  EXPECT_NEAR(hs_density_oracle(0.0, 1.0, 1.0), expected, 1e-6);
  EXPECT_NEAR(std::exp(hs_log_marginal_quadrature(0.0, 1.0, 1.0).log_density), expected, 1e-8);
}

TEST(HorseshoeMarginal, ClosedFormAgreesWithQuadrature) {
  for (double y = -10.0; y <= 10.0; y += 0.25) {
    const auto cf = hs_log_marginal(y, 1.0, 1.0);
    const auto q = hs_log_marginal_quadrature(y, 1.0, 1.0);
    EXPECT_EQ(q.method, MarginalEval::Method::Quadrature);
    EXPECT_NEAR(std::exp(q.log_density - cf.log_density), 1.0, 1e-6) << y;
  }
  const auto q = hs_log_marginal_quadrature(0.7, 1.0, 1.0);
  EXPECT_NEAR(std::exp(q.log_density) / hs_density_oracle(0.7, 1.0, 1.0), 1.0, 1e-6);
}

TEST(HorseshoeMarginal, UnmatchedScaleMatchesOracle) {
  for (double tau : {0.3, 2.0}) {
    for (double y : {0.0, 0.9, -3.0, 12.0}) {
      const auto m = hs_log_marginal(y, 1.0, tau);
      EXPECT_EQ(m.method, MarginalEval::Method::Quadrature);
      EXPECT_NEAR(std::exp(m.log_density) / hs_density_oracle(y, 1.0, tau), 1.0, 1e-6);
    }
  }
}

TEST(HorseshoeMarginal, MatchedScaleTolerance) {
  EXPECT_EQ(hs_log_marginal(1.0, 1.0, 1.0 + 1e-13).method, MarginalEval::Method::ClosedForm);
  EXPECT_EQ(hs_log_marginal(1.0, 1.0, 1.0 + 1e-9).method, MarginalEval::Method::Quadrature);
}

TEST(HorseshoeMarginal, TailExponent) {
  const double a = hs_log_marginal(30.0, 1.0, 1.0).log_density;
  const double b = hs_log_marginal(100.0, 1.0, 1.0).log_density;
  EXPECT_NEAR((b - a) / (std::log(100.0) - std::log(30.0)), -2.0, 0.05);
  for (double y = 30.0; y < 100.0; y += 5.0) {
    const double slope = hs_log_marginal(y, 1.0, 1.0).log_density_deriv * y;
    EXPECT_NEAR(slope, -2.0, 0.05) << y;
  }
}

TEST(Marginals, DerivativeMatchesFiniteDifference) {
  for (PriorFamily fam : {PriorFamily::Gaussian, PriorFamily::Horseshoe}) {
    for (double y = -20.0; y <= 20.0; y += 0.25) {
      const double h = 1e-5 * std::max(1.0, std::fabs(y));
      const double fd = (log_marginal(y + h, 1.0, fam, 1.0).log_density -
                         log_marginal(y - h, 1.0, fam, 1.0).log_density) /
                        (2.0 * h);
      EXPECT_NEAR(log_marginal(y, 1.0, fam, 1.0).log_density_deriv, fd, 1e-5) << y;
    }
  }
}

TEST(Marginals, Normalised) {
  using specfun::integrate;
  for (double tau : {1.0, 0.5}) {
    auto g = [tau](double y) { return std::exp(log_marginal_density(y, 1.0, PriorFamily::Gaussian, tau)); };
    EXPECT_NEAR(integrate(g, -INFINITY, INFINITY), 1.0, 1e-8);
  }
  // Horseshoe: integrate to L and add the y^-2 tail, 2 * L * pi(L) on both sides.
  const double L = 2000.0;
  auto hs = [](double y) { return std::exp(hs_log_marginal(y, 1.0, 1.0).log_density); };
  specfun::QuadratureSettings s{1e-12, 1e-10, 2000};
  const double body = integrate(hs, -L, L, s);
  const double tail = 2.0 * L * hs(L);
  EXPECT_NEAR(body + tail, 1.0, 1e-4);
  auto hs2 = [](double y) { return std::exp(log_marginal_density(y, 1.0, PriorFamily::Horseshoe, 2.0)); };
  const double body2 = integrate(hs2, -L, L, s);
  EXPECT_NEAR(body2 + 2.0 * L * hs2(L), 1.0, 1e-4);
}

TEST(PosteriorMean, ReferenceValues) {
  for (double s : {0.2, 1.0, 3.0}) {
    EXPECT_EQ(posterior_mean(0.0, s, PriorFamily::Gaussian, s), 0.0);
    EXPECT_EQ(posterior_mean(0.0, s, PriorFamily::Horseshoe, s), 0.0);
  }
  EXPECT_DOUBLE_EQ(posterior_mean(1.0, 1.0, PriorFamily::Gaussian, 1.0), 0.5);
  const double shrink = 10.0 - posterior_mean(10.0, 1.0, PriorFamily::Horseshoe, 1.0);
  EXPECT_NEAR(shrink / 10.0 / 0.02, 1.0, 0.3);
  EXPECT_NEAR(posterior_mean(10.0, 1.0, PriorFamily::Horseshoe, 1.0),
              10.0 - hs_shrinkage(10.0, 1.0) * 10.0, 1e-12);
}

TEST(PosteriorMean, OddAndShrinking) {
  for (double tau : {1.0, 0.4, 3.0}) {
    for (double y = 0.0; y <= 30.0; y += 0.5) {
      const double p = posterior_mean(y, 1.0, PriorFamily::Horseshoe, tau);
      EXPECT_NEAR(posterior_mean(-y, 1.0, PriorFamily::Horseshoe, tau), -p, 1e-9);
      EXPECT_LE(std::fabs(p), std::fabs(y) + 1e-12);
      EXPECT_GE(p, -1e-12);
    }
  }
}

TEST(PosteriorMean, HorseshoeStrongSignal) {
  for (double sigma : {1.0, 0.5}) {
    for (double y = 10.0 * sigma; y <= 200.0 * sigma; y += 2.5 * sigma) {
      const double gap = std::fabs(posterior_mean(y, sigma, PriorFamily::Horseshoe, sigma) - y);
      EXPECT_LE(gap, 3.0 * sigma * sigma / y);
    }
  }
}

TEST(PosteriorMean, GaussianLinear) {
  for (double y = -20.0; y <= 20.0; y += 1.3)
    EXPECT_NEAR(posterior_mean(y, 2.0, PriorFamily::Gaussian, 0.5), y * 0.25 / 4.25, 1e-13);
}

TEST(Shrinkage, ReferenceValues) {
  EXPECT_DOUBLE_EQ(hs_shrinkage(0.0, 1.0), 2.0 / 3.0);
  EXPECT_EQ(hs_shrinkage(-3.0, 1.0), hs_shrinkage(3.0, 1.0));
  EXPECT_NEAR(hs_shrinkage(20.0, 1.0) / 0.005, 1.0, 0.3);
  for (double y = 0.0; y <= 100.0; y += 0.7) {
    const double k = hs_shrinkage(y, 1.0);
    EXPECT_GT(k, 0.0);
    EXPECT_LT(k, 1.0);
  }
}

TEST(PriorSpecTest, ScaleRules) {
  EXPECT_EQ(PriorSpec::horseshoe().tau(0.3), 0.3);
  EXPECT_DOUBLE_EQ(PriorSpec::gaussian(ScaleRule::InverseSqrtN).tau(0.3, 400), 0.05);
  EXPECT_EQ(PriorSpec::horseshoe(ScaleRule::Fixed, 2.0).tau(0.3), 2.0);
  EXPECT_THROW(PriorSpec::horseshoe(ScaleRule::InverseSqrtN).tau(0.3, 0), DomainError);
  EXPECT_THROW(PriorSpec::horseshoe(ScaleRule::Fixed, -1.0).tau(0.3), DomainError);
}

TEST(PriorSpecTest, ParseAndLabel) {
  EXPECT_EQ(parse_prior("hs", "sigma").label(), "horseshoe:sigma");
  EXPECT_EQ(parse_prior("gaussian", "inv-sqrt-n").label(), "gaussian:inv-sqrt-n");
  EXPECT_EQ(parse_prior("horseshoe", "fixed=1").label(), "horseshoe:fixed=1");
  EXPECT_EQ(parse_prior("normal", "0.5").fixed_value, 0.5);
  EXPECT_THROW(parse_prior("laplace", "sigma"), ConfigError);
  EXPECT_THROW(parse_prior("hs", "wide"), ConfigError);
}
