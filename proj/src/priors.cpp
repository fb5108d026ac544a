#include "fabppi/priors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <vector>

#include "fabppi/errors.hpp"
#include "fabppi/specfun.hpp"

namespace fabppi {

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string(what) + " must be positive");
}

bool matched_scale(double sigma, double tau) {
  return std::fabs(tau / sigma - 1.0) <= kMatchedScaleTol;
}

// log of the standardized horseshoe marginal (sigma = 1, prior scale rho)
// via pi(t) = (2/pi) int_0^{pi/2} N(t; 0, 1 + rho^2 cot^2 phi) dphi, which is
// nu = cot(phi) applied to the half-Cauchy mixture.
double hs_log_density_quad(double t, double rho) {
  const double t2 = t * t;
  auto integrand = [t2, rho](double phi) {
    const double c = std::cos(phi) / std::sin(phi);
    const double v = 1.0 + rho * rho * c * c;
    return std::exp(-0.5 * t2 / v) / std::sqrt(2.0 * std::numbers::pi * v);
  };
  // The integrand peaks where rho*cot(phi) ~ |t|; split around it so the
  // first Kronrod pass cannot step over a narrow bump near phi = 0.
  const double half_pi = 0.5 * std::numbers::pi;
  const double peak = std::atan2(rho, std::fabs(t));
  std::vector<double> cuts = {0.0, half_pi};
  for (double c : {0.25 * peak, peak, 4.0 * peak})
    if (c > 0.0 && c < half_pi) cuts.push_back(c);
  std::sort(cuts.begin(), cuts.end());
  specfun::QuadratureSettings settings{1e-300, 1e-13, 4000};
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] <= cuts[i]) continue;
    total += specfun::integrate(integrand, cuts[i], cuts[i + 1], settings);
  }
  if (!(total > 0.0)) throw ConvergenceError("hs_log_marginal: density underflow", total);
  return std::log(2.0 / std::numbers::pi * total);
}

}  // namespace

PriorSpec PriorSpec::horseshoe(ScaleRule rule, double value) {
  if (rule == ScaleRule::Fixed) require_positive(value, "fixed prior scale");
  return {PriorFamily::Horseshoe, rule, value};
}

PriorSpec PriorSpec::gaussian(ScaleRule rule, double value) {
  if (rule == ScaleRule::Fixed) require_positive(value, "fixed prior scale");
  return {PriorFamily::Gaussian, rule, value};
}

double PriorSpec::tau(double sigma, std::size_t n) const {
  switch (rule) {
    case ScaleRule::MatchSigma:
      require_positive(sigma, "sigma");
      return sigma;
    case ScaleRule::InverseSqrtN:
      if (n == 0) throw DomainError("inverse-sqrt-n prior scale needs the label count");
      return 1.0 / std::sqrt(static_cast<double>(n));
    case ScaleRule::Fixed:
      require_positive(fixed_value, "fixed prior scale");
      return fixed_value;
  }
  throw InternalError("unknown scale rule");
}

std::string PriorSpec::label() const {
  std::string out = family == PriorFamily::Horseshoe ? "horseshoe" : "gaussian";
  switch (rule) {
    case ScaleRule::MatchSigma:
      return out + ":sigma";
    case ScaleRule::InverseSqrtN:
      return out + ":inv-sqrt-n";
    case ScaleRule::Fixed: {
      char buf[64];
      std::snprintf(buf, sizeof buf, ":fixed=%.10g", fixed_value);
      return out + buf;
    }
  }
  return out;
}

PriorSpec parse_prior(const std::string& family, const std::string& scale) {
  PriorFamily fam;
  if (family == "horseshoe" || family == "hs") {
    fam = PriorFamily::Horseshoe;
  } else if (family == "gaussian" || family == "normal" || family == "n") {
    fam = PriorFamily::Gaussian;
  } else {
    throw ConfigError("unknown prior family '" + family + "'");
  }
  PriorSpec spec{fam, ScaleRule::MatchSigma, 1.0};
  if (scale.empty() || scale == "sigma") return spec;
  if (scale == "inv-sqrt-n") {
    spec.rule = ScaleRule::InverseSqrtN;
    return spec;
  }
  std::string value = scale;
  if (value.rfind("fixed=", 0) == 0) value = value.substr(6);
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0' || !(v > 0.0) || !std::isfinite(v))
    throw ConfigError("bad prior scale '" + scale + "'");
  spec.rule = ScaleRule::Fixed;
  spec.fixed_value = v;
  return spec;
}

MarginalEval gaussian_log_marginal(double y, double sigma, double tau) {
  require_positive(sigma, "sigma");
  require_positive(tau, "tau");
  const double v = sigma * sigma + tau * tau;
  return {-0.5 * std::log(2.0 * std::numbers::pi * v) - 0.5 * y * y / v, -y / v,
          MarginalEval::Method::ClosedForm};
}

MarginalEval hs_log_marginal_quadrature(double y, double sigma, double tau) {
  require_positive(sigma, "sigma");
  require_positive(tau, "tau");
  const double rho = tau / sigma;
  const double t = y / sigma;
  const double h = 1e-5 * std::max(1.0, std::fabs(t));
  const double ld = hs_log_density_quad(t, rho) - std::log(sigma);
  const double up = hs_log_density_quad(t + h, rho);
  const double down = hs_log_density_quad(t - h, rho);
  return {ld, (up - down) / (2.0 * h) / sigma, MarginalEval::Method::Quadrature};
}

MarginalEval hs_log_marginal(double y, double sigma, double tau) {
  require_positive(sigma, "sigma");
  require_positive(tau, "tau");
  if (!matched_scale(sigma, tau)) return hs_log_marginal_quadrature(y, sigma, tau);
  const double z = -0.5 * (y / sigma) * (y / sigma);
  const double f1 = specfun::kummer_1f1(1.0, 1.5, z);
  const double f2 = specfun::kummer_1f1(2.0, 2.5, z);
  const double norm = 2.0 / (std::numbers::pi * std::sqrt(2.0 * std::numbers::pi) * sigma);
  return {std::log(norm) + std::log(f1), -(2.0 / 3.0) * (y / (sigma * sigma)) * f2 / f1,
          MarginalEval::Method::ClosedForm};
}

MarginalEval log_marginal(double y, double sigma, PriorFamily family, double tau) {
  return family == PriorFamily::Gaussian ? gaussian_log_marginal(y, sigma, tau)
                                         : hs_log_marginal(y, sigma, tau);
}

double log_marginal_density(double y, double sigma, PriorFamily family, double tau) {
  if (family == PriorFamily::Gaussian) return gaussian_log_marginal(y, sigma, tau).log_density;
  require_positive(sigma, "sigma");
  require_positive(tau, "tau");
  if (!matched_scale(sigma, tau)) return hs_log_density_quad(y / sigma, tau / sigma) - std::log(sigma);
  const double z = -0.5 * (y / sigma) * (y / sigma);
  const double norm = 2.0 / (std::numbers::pi * std::sqrt(2.0 * std::numbers::pi) * sigma);
  return std::log(norm) + std::log(specfun::kummer_1f1(1.0, 1.5, z));
}

double posterior_mean(double y, double sigma, PriorFamily family, double tau) {
  if (family == PriorFamily::Gaussian) {
    require_positive(sigma, "sigma");
    require_positive(tau, "tau");
    return y * (tau * tau / (sigma * sigma + tau * tau));
  }
  if (matched_scale(sigma, tau)) return (1.0 - hs_shrinkage(y, sigma)) * y;
  return y + sigma * sigma * hs_log_marginal(y, sigma, tau).log_density_deriv;
}

double posterior_mean(double y, double sigma, const PriorSpec& prior, std::size_t n) {
  return posterior_mean(y, sigma, prior.family, prior.tau(sigma, n));
}

double hs_shrinkage(double y, double sigma) {
  require_positive(sigma, "sigma");
  const double z = -0.5 * (y / sigma) * (y / sigma);
  return (2.0 / 3.0) * specfun::kummer_1f1(2.0, 2.5, z) / specfun::kummer_1f1(1.0, 1.5, z);
}

}  // namespace fabppi
