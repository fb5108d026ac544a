#pragma once

#include <cstddef>
#include <string>

namespace fabppi {

enum class PriorFamily { Gaussian, Horseshoe };
enum class ScaleRule { MatchSigma, InverseSqrtN, Fixed };

// Prior on the rectifier. The scale is always a standard deviation.
struct PriorSpec {
  PriorFamily family = PriorFamily::Horseshoe;
  ScaleRule rule = ScaleRule::MatchSigma;
  double fixed_value = 1.0;

  static PriorSpec horseshoe(ScaleRule rule = ScaleRule::MatchSigma, double value = 1.0);
  static PriorSpec gaussian(ScaleRule rule = ScaleRule::MatchSigma, double value = 1.0);

  // Prior standard deviation for a rectifier estimate with sd sigma from n labels.
  double tau(double sigma, std::size_t n = 0) const;
  std::string label() const;
};

PriorSpec parse_prior(const std::string& family, const std::string& scale);

struct MarginalEval {
  enum class Method { ClosedForm, Quadrature };
  double log_density;
  double log_density_deriv;
  Method method;
};

// |tau/sigma - 1| below this counts as a matched scale.
inline constexpr double kMatchedScaleTol = 1e-12;

MarginalEval gaussian_log_marginal(double y, double sigma, double tau);
MarginalEval hs_log_marginal(double y, double sigma, double tau);
// Always integrates over the half-Cauchy mixing scale, whatever tau is.
MarginalEval hs_log_marginal_quadrature(double y, double sigma, double tau);
MarginalEval log_marginal(double y, double sigma, PriorFamily family, double tau);
// Log density only; skips the derivative (three quadratures on that path).
double log_marginal_density(double y, double sigma, PriorFamily family, double tau);

double posterior_mean(double y, double sigma, PriorFamily family, double tau);
double posterior_mean(double y, double sigma, const PriorSpec& prior, std::size_t n = 0);

// Horseshoe shrinkage weight kappa(y) with tau = sigma.
double hs_shrinkage(double y, double sigma);

}  // namespace fabppi
