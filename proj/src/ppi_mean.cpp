#include <cmath>
#include <cstdio>

#include "fabppi/errors.hpp"
#include "fabppi/ppi.hpp"
#include "fabppi/specfun.hpp"

namespace fabppi {

namespace stats {

double mean(const std::vector<double>& v) {
  if (v.empty()) throw SampleSizeError("mean of empty sample");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double variance(const std::vector<double>& v) {
  if (v.size() < 2) throw SampleSizeError("variance needs at least two values");
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

}  // namespace stats

UnlabelledSample UnlabelledSample::from_predictions(std::vector<double> fx) {
  if (fx.size() < 2) throw SampleSizeError("unlabelled sample needs N >= 2");
  UnlabelledSample u;
  u.fx_ = std::move(fx);
  return u;
}

UnlabelledSample UnlabelledSample::analytic(double mean, double sd) {
  if (!std::isfinite(mean) || !(sd >= 0.0)) throw DomainError("bad analytic unlabelled moments");
  UnlabelledSample u;
  u.analytic_ = true;
  u.mean_ = mean;
  u.sd_ = sd;
  return u;
}

std::string method_id(Method m) {
  switch (m) {
    case Method::Classical:
      return "classical";
    case Method::PPI:
      return "ppi";
    case Method::PPIpp:
      return "ppi++";
    case Method::FABPPI:
      return "fab-ppi";
    case Method::FABPPIpp:
      return "fab-ppi++";
  }
  return "?";
}

Method parse_method(const std::string& id) {
  for (Method m : {Method::Classical, Method::PPI, Method::PPIpp, Method::FABPPI, Method::FABPPIpp})
    if (method_id(m) == id) return m;
  throw ConfigError("unknown method '" + id + "'");
}

bool is_fab(Method m) { return m == Method::FABPPI || m == Method::FABPPIpp; }
bool is_power_tuned(Method m) { return m == Method::PPIpp || m == Method::FABPPIpp; }

double DeltaRule::resolve(double alpha) const {
  if (kind == Kind::KnownM) return alpha;
  const double d = delta.value_or(0.5 * alpha);
  if (!(d > 0.0 && d < alpha)) throw DomainError("full mode needs 0 < delta < alpha");
  return d;
}

std::string DeltaRule::label() const {
  if (kind == Kind::KnownM) return "known-m";
  if (!delta) return "full";
  char buf[64];
  std::snprintf(buf, sizeof buf, "full(%.10g)", *delta);
  return buf;
}

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
}

void check_labelled(const LabelledSample& s) {
  if (s.y.size() != s.fx.size()) throw DomainError("labels and predictions differ in length");
  if (s.y.size() < 2) throw SampleSizeError("labelled sample needs n >= 2");
}

double covariance(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = stats::mean(a);
  const double mb = stats::mean(b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma) * (b[i] - mb);
  return s / static_cast<double>(a.size() - 1);
}

double choose_lambda(const LabelledSample& labelled, const UnlabelledSample& unlabelled,
                     bool power_tuned, std::optional<double> forced) {
  if (forced) return *forced;
  return power_tuned ? lambda_hat(labelled, unlabelled) : 1.0;
}

}  // namespace

EstimateReport classical_mean(const LabelledSample& labelled, double alpha) {
  check_alpha(alpha);
  if (labelled.y.size() < 2) throw SampleSizeError("classical_mean needs n >= 2");
  const double n = static_cast<double>(labelled.y.size());
  const double ybar = stats::mean(labelled.y);
  const double half = specfun::norm_upper_quantile(0.5 * alpha) *
                      std::sqrt(stats::variance(labelled.y)) / std::sqrt(n);
  EstimateReport r;
  r.method = Method::Classical;
  r.point = ybar;
  r.region = ConfidenceRegion::single(ybar - half, ybar + half, 1.0 - alpha);
  r.alpha = alpha;
  r.delta = alpha;
  return r;
}

double lambda_hat(const LabelledSample& labelled, const UnlabelledSample& unlabelled) {
  check_labelled(labelled);
  const double c = covariance(labelled.y, labelled.fx);
  double v;
  double ratio = 0.0;
  if (unlabelled.is_analytic()) {
    v = stats::variance(labelled.fx);
  } else {
    std::vector<double> pooled(labelled.fx);
    pooled.insert(pooled.end(), unlabelled.fx().begin(), unlabelled.fx().end());
    v = stats::variance(pooled);
    ratio = static_cast<double>(labelled.n()) / static_cast<double>(unlabelled.size());
  }
  if (!(v > 0.0)) throw DegeneracyError("lambda_hat: predictions have zero variance");
  return c / ((1.0 + ratio) * v);
}

RectifierStats rectifier_stats(const LabelledSample& labelled, const UnlabelledSample& unlabelled,
                               double lambda) {
  check_labelled(labelled);
  const std::size_t n = labelled.n();
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = lambda * labelled.fx[i] - labelled.y[i];

  RectifierStats s{};
  s.lambda = lambda;
  if (unlabelled.is_analytic()) {
    s.m_hat = unlabelled.analytic_mean();
    s.sigma_f_hat = 0.0;
  } else {
    s.m_hat = stats::mean(unlabelled.fx());
    s.sigma_f_hat =
        std::sqrt(stats::variance(unlabelled.fx()) / static_cast<double>(unlabelled.size()));
  }
  s.xi_hat = stats::mean(r);
  s.sigma_xi = std::sqrt(stats::variance(r));
  s.delta_hat = s.xi_hat - (lambda - 1.0) * s.m_hat;
  const double lm1 = lambda - 1.0;
  s.sigma_hat = std::sqrt(s.sigma_xi * s.sigma_xi / static_cast<double>(n) +
                          lm1 * lm1 * s.sigma_f_hat * s.sigma_f_hat);
  return s;
}

namespace {

double ppi_point(const LabelledSample& labelled, const RectifierStats& s) {
  return stats::mean(labelled.y) - s.lambda * (stats::mean(labelled.fx) - s.m_hat);
}

void fill_diagnostics(EstimateReport& r, const RectifierStats& s) {
  r.diagnostics["lambda"] = s.lambda;
  r.diagnostics["delta_hat"] = s.delta_hat;
  r.diagnostics["sigma_hat"] = s.sigma_hat;
  r.diagnostics["sigma_f_hat"] = s.sigma_f_hat;
}

}  // namespace

EstimateReport ppi_mean(const LabelledSample& labelled, const UnlabelledSample& unlabelled,
                        double alpha, bool power_tuned, const DeltaRule& mode,
                        std::optional<double> forced_lambda) {
  check_alpha(alpha);
  if (mode.kind == DeltaRule::Kind::Full && unlabelled.is_analytic())
    throw DomainError("full mode needs unlabelled predictions");
  const double lambda = choose_lambda(labelled, unlabelled, power_tuned, forced_lambda);
  const RectifierStats s = rectifier_stats(labelled, unlabelled, lambda);
  const double delta = mode.resolve(alpha);

  double half;
  if (mode.kind == DeltaRule::Kind::KnownM) {
    half = specfun::norm_upper_quantile(0.5 * alpha) * s.sigma_hat;
  } else {
    half = specfun::norm_upper_quantile(0.5 * delta) * s.sigma_hat +
           specfun::norm_upper_quantile(0.5 * (alpha - delta)) * s.sigma_f_hat;
  }
  EstimateReport r;
  r.method = power_tuned ? Method::PPIpp : Method::PPI;
  r.point = ppi_point(labelled, s);
  r.region = ConfidenceRegion::single(r.point - half, r.point + half, 1.0 - alpha);
  r.alpha = alpha;
  r.delta = delta;
  fill_diagnostics(r, s);
  if (s.sigma_hat == 0.0) r.diagnostics["degenerate"] = 1.0;
  return r;
}

EstimateReport fab_ppi_mean(const LabelledSample& labelled, const UnlabelledSample& unlabelled,
                            const PriorSpec& prior, double alpha, const DeltaRule& mode,
                            bool power_tuned, std::optional<double> forced_lambda) {
  check_alpha(alpha);
  if (mode.kind == DeltaRule::Kind::Full && unlabelled.is_analytic())
    throw DomainError("full mode needs unlabelled predictions");
  const double lambda = choose_lambda(labelled, unlabelled, power_tuned, forced_lambda);
  const RectifierStats s = rectifier_stats(labelled, unlabelled, lambda);
  if (!(s.sigma_hat > 0.0))
    throw DegeneracyError("fab_ppi_mean: rectifier has zero estimated variance");
  const double delta = mode.resolve(alpha);
  const double fit_half = mode.kind == DeltaRule::Kind::KnownM
                              ? 0.0
                              : specfun::norm_upper_quantile(0.5 * (alpha - delta)) * s.sigma_f_hat;

  const double tau = prior.tau(s.sigma_hat, labelled.n());
  const ConfidenceRegion rect = fab_cr(s.delta_hat, s.sigma_hat, prior.family, tau, delta);
  const double shrunk = posterior_mean(s.delta_hat, s.sigma_hat, prior.family, tau);

  EstimateReport r;
  r.method = power_tuned ? Method::FABPPIpp : Method::FABPPI;
  r.prior = prior;
  r.point = ppi_point(labelled, s) - (shrunk - s.delta_hat);
  r.region = ConfidenceRegion::single(s.m_hat - fit_half - rect.sup(),
                                      s.m_hat + fit_half - rect.inf(), 1.0 - alpha);
  r.alpha = alpha;
  r.delta = delta;
  fill_diagnostics(r, s);
  r.diagnostics["tau"] = tau;
  r.diagnostics["components"] = static_cast<double>(rect.components());
  return r;
}

}  // namespace fabppi
