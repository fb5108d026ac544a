#include <cmath>

#include "fabppi/errors.hpp"
#include "fabppi/ppi.hpp"
#include "fabppi/specfun.hpp"

namespace fabppi {

std::vector<ConfidenceRegion> multivariate_fab_cr(const std::vector<double>& delta_hats,
                                                  const std::vector<double>& sigma_hats,
                                                  const PriorSpec& prior, double delta,
                                                  std::size_t n) {
  if (delta_hats.empty() || delta_hats.size() != sigma_hats.size())
    throw DomainError("multivariate_fab_cr: need equal, nonzero lengths");
  const double per_dim = delta / static_cast<double>(delta_hats.size());
  std::vector<ConfidenceRegion> out;
  out.reserve(delta_hats.size());
  for (std::size_t k = 0; k < delta_hats.size(); ++k)
    out.push_back(fab_cr(delta_hats[k], sigma_hats[k], prior, per_dim, n));
  return out;
}

Interval odds_ratio_ci(const Interval& ci0, const Interval& ci1) {
  for (const Interval* ci : {&ci0, &ci1}) {
    if (!(ci->lo > 0.0 && ci->hi < 1.0 && ci->lo <= ci->hi))
      throw DomainError("odds_ratio_ci: intervals must lie strictly inside (0,1)");
  }
  const double l0 = ci0.lo, u0 = ci0.hi, l1 = ci1.lo, u1 = ci1.hi;
  return {l1 / (1.0 - l1) * (1.0 - u0) / u0, u1 / (1.0 - u1) * (1.0 - l0) / l0};
}

EstimateReport control_variate_mean(const std::vector<double>& z, const std::vector<double>& y,
                                    double mu, std::optional<double> lambda, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
  if (z.size() != y.size()) throw DomainError("control_variate_mean: length mismatch");
  if (y.size() < 2) throw SampleSizeError("control_variate_mean needs n >= 2");
  const std::size_t n = y.size();
  const double zbar = stats::mean(z);
  const double ybar = stats::mean(y);
  double lam;
  if (lambda) {
    lam = *lambda;
  } else {
    double szy = 0.0;
    double szz = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      szy += (z[i] - zbar) * (y[i] - ybar);
      szz += (z[i] - zbar) * (z[i] - zbar);
    }
    if (!(szz > 0.0)) throw DegeneracyError("control variate has zero variance");
    lam = szy / szz;
  }
  std::vector<double> resid(n);
  for (std::size_t i = 0; i < n; ++i) resid[i] = y[i] - lam * z[i];
  const double s = std::sqrt(stats::variance(resid));
  const double point = ybar - lam * (zbar - mu);
  const double half = specfun::norm_upper_quantile(0.5 * alpha) * s / std::sqrt(static_cast<double>(n));

  EstimateReport r;
  r.method = Method::Classical;
  r.point = point;
  r.region = ConfidenceRegion::single(point - half, point + half, 1.0 - alpha);
  r.alpha = alpha;
  r.delta = alpha;
  r.diagnostics["lambda"] = lam;
  return r;
}

}  // namespace fabppi
