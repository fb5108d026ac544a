#include <cmath>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>

#include "fabppi/errors.hpp"
#include "fabppi/specfun.hpp"
#include "spending_detail.hpp"

namespace fabppi::detail {

namespace {

constexpr double kWEps = 1e-10;

SpendingValue clamp_w(double w) {
  if (w < kWEps) return {kWEps, true};
  if (w > 1.0 - kWEps) return {1.0 - kWEps, true};
  return {w, false};
}

}  // namespace

Offsets swapped(const Offsets& o) { return {o.u, o.a, o.at_boundary}; }

Offsets offsets_from_w(double w, double alpha) {
  return {specfun::norm_upper_quantile(alpha * w), specfun::norm_upper_quantile(alpha * (1.0 - w)),
          false};
}

Offsets gaussian_offsets(double b, double rho, double alpha) {
  // Interval centre sits at b + d; solve Phi(-a) + Phi(-2|d| - a) = alpha.
  const double d = std::fabs(b) / (rho * rho);
  double a;
  if (d == 0.0) {
    a = specfun::norm_upper_quantile(0.5 * alpha);
  } else {
    auto f = [d, alpha](double x) {
      return specfun::norm_cdf(-x) + specfun::norm_cdf(-2.0 * d - x) - alpha;
    };
    const double lo = specfun::norm_upper_quantile(alpha);
    const double hi = specfun::norm_upper_quantile(0.5 * alpha);
    a = f(lo) <= 0.0 ? lo : specfun::find_root(f, {lo, hi, 1e-14});
  }
  const Offsets o{a, 2.0 * d + a, false};
  return b < 0.0 ? swapped(o) : o;
}

SpendingValue gaussian_spending_std(double b, double rho, double alpha) {
  const Offsets o = gaussian_offsets(b, rho, alpha);
  const double left = specfun::norm_cdf(-o.a);
  const double right = specfun::norm_cdf(-o.u);
  // Divide the smaller tail so 1 - w keeps its precision.
  const double w = left <= right ? left / alpha : 1.0 - right / alpha;
  return clamp_w(w);
}

SpendingValue numeric_spending_std(PriorFamily family, double b, double rho, double alpha) {
  auto ell = [family, rho](double t) { return log_marginal_density(t, 1.0, family, rho); };
  auto balance = [&](double w) {
    const Offsets o = offsets_from_w(w, alpha);
    return ell(b + o.u) - ell(b - o.a) + 0.5 * (o.u * o.u - o.a * o.a);
  };
  const double lo = kWEps;
  const double hi = 1.0 - kWEps;
  if (balance(lo) >= 0.0) return {lo, true};
  if (balance(hi) <= 0.0) return {hi, true};
  return {specfun::find_root(balance, {lo, hi, 1e-13}), false};
}

Offsets exact_offsets(PriorFamily family, double b, double rho, double alpha) {
  if (family == PriorFamily::Gaussian) return gaussian_offsets(b, rho, alpha);
  const SpendingValue s = numeric_spending_std(family, b, rho, alpha);
  Offsets o = offsets_from_w(s.w, alpha);
  o.at_boundary = s.at_boundary;
  return o;
}

Offsets interpolate(const Offsets& m1, const Offsets& p0, const Offsets& p1, const Offsets& p2,
                    double x) {
  // Lagrange weights for nodes at -1, 0, 1, 2.
  const double wm1 = -x * (x - 1.0) * (x - 2.0) / 6.0;
  const double w0 = (x + 1.0) * (x - 1.0) * (x - 2.0) / 2.0;
  const double w1 = -(x + 1.0) * x * (x - 2.0) / 2.0;
  const double w2 = (x + 1.0) * x * (x - 1.0) / 6.0;
  return {wm1 * m1.a + w0 * p0.a + w1 * p1.a + w2 * p2.a,
          wm1 * m1.u + w0 * p0.u + w1 * p1.u + w2 * p2.u,
          m1.at_boundary || p0.at_boundary || p1.at_boundary || p2.at_boundary};
}

SpendingTable::SpendingTable(OffsetFn exact, double step, double b_max)
    : exact_(std::move(exact)), step_(step), b_max_(b_max) {
  const long count = static_cast<long>(std::ceil(b_max / step)) + 3;
  nodes_.reserve(static_cast<std::size_t>(count));
  for (long k = 0; k < count; ++k) nodes_.push_back(exact_(static_cast<double>(k) * step_));
}

Offsets SpendingTable::node(long k) const {
  return k < 0 ? swapped(nodes_[static_cast<std::size_t>(-k)]) : nodes_[static_cast<std::size_t>(k)];
}

Offsets SpendingTable::at(double b) const {
  const double s = std::fabs(b);
  if (s > b_max_) return exact_(b);
  const double pos = s / step_;
  const long j = static_cast<long>(std::floor(pos));
  const Offsets o = interpolate(node(j - 1), node(j), node(j + 1), node(j + 2), pos - j);
  return b < 0.0 ? swapped(o) : o;
}

LazySpendingTable::LazySpendingTable(OffsetFn exact, double step)
    : exact_(std::move(exact)), step_(step) {}

Offsets LazySpendingTable::node(long k) {
  const long key = k < 0 ? -k : k;
  auto it = cache_.find(key);
  if (it == cache_.end()) it = cache_.emplace(key, exact_(static_cast<double>(key) * step_)).first;
  return k < 0 ? swapped(it->second) : it->second;
}

Offsets LazySpendingTable::at(double b) {
  const double s = std::fabs(b);
  const double pos = s / step_;
  const long j = static_cast<long>(std::floor(pos));
  const Offsets o = interpolate(node(j - 1), node(j), node(j + 1), node(j + 2), pos - j);
  return b < 0.0 ? swapped(o) : o;
}

const SpendingTable& unit_scale_table(PriorFamily family, double alpha) {
  // Values are a pure function of the key, so sharing them across threads
  // cannot change any result.
  static std::mutex mutex;
  static std::map<std::pair<int, double>, std::unique_ptr<SpendingTable>> tables;
  const std::lock_guard<std::mutex> lock(mutex);
  auto& slot = tables[{static_cast<int>(family), alpha}];
  if (!slot) {
    constexpr double kStep = 1.0 / 64.0;
    constexpr double kMax = 256.0;
    slot = std::make_unique<SpendingTable>(
        [family, alpha](double b) { return exact_offsets(family, b, 1.0, alpha); }, kStep, kMax);
  }
  return *slot;
}

Offsets fast_offsets(PriorFamily family, double b, double rho, double alpha) {
  if (std::fabs(rho - 1.0) <= kMatchedScaleTol) return unit_scale_table(family, alpha).at(b);
  return exact_offsets(family, b, rho, alpha);
}

}  // namespace fabppi::detail

namespace fabppi {

namespace {

void check_common(double sigma, double alpha) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("sigma must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
}

}  // namespace

SpendingValue spending_gaussian(double beta, double sigma, double prior_sd, double alpha) {
  check_common(sigma, alpha);
  if (!(prior_sd > 0.0)) throw DomainError("prior sd must be positive");
  return detail::gaussian_spending_std(beta / sigma, prior_sd / sigma, alpha);
}

SpendingValue spending_numeric(double beta, double sigma, PriorFamily family, double tau,
                               double alpha) {
  check_common(sigma, alpha);
  if (!(tau > 0.0)) throw DomainError("prior scale must be positive");
  return detail::numeric_spending_std(family, beta / sigma, tau / sigma, alpha);
}

SpendingValue spending_numeric(double beta, double sigma, const PriorSpec& prior, double alpha,
                               std::size_t n) {
  return spending_numeric(beta, sigma, prior.family, prior.tau(sigma, n), alpha);
}

AcceptanceInterval acceptance_interval(double beta, double sigma, PriorFamily family, double tau,
                                       double alpha) {
  check_common(sigma, alpha);
  if (!(tau > 0.0)) throw DomainError("prior scale must be positive");
  const double b = beta / sigma;
  const double rho = tau / sigma;
  SpendingValue s;
  detail::Offsets o;
  if (family == PriorFamily::Gaussian) {
    s = detail::gaussian_spending_std(b, rho, alpha);
    o = detail::gaussian_offsets(b, rho, alpha);
  } else {
    s = detail::numeric_spending_std(family, b, rho, alpha);
    o = detail::offsets_from_w(s.w, alpha);
  }
  return {beta, beta - sigma * o.a, beta + sigma * o.u, s.w, s.at_boundary};
}

AcceptanceInterval acceptance_interval(double beta, double sigma, const PriorSpec& prior,
                                       double alpha, std::size_t n) {
  return acceptance_interval(beta, sigma, prior.family, prior.tau(sigma, n), alpha);
}

}  // namespace fabppi
