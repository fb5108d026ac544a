#include <cmath>
#include <optional>
#include <vector>

#include "fabppi/errors.hpp"
#include "fabppi/fabcr.hpp"
#include "spending_detail.hpp"

namespace fabppi {

namespace {

using detail::OffsetFn;
using detail::Offsets;

bool member(double b, double t, const Offsets& o) { return b - o.a <= t && t <= b + o.u; }

// Shrinks [in, out] (one member, one not) onto the membership boundary and
// returns the member-side end.
double refine(double in, double out, double t, double tol, const OffsetFn& fine,
              const OffsetFn& coarse) {
  const OffsetFn* fn = &fine;
  if (!member(in, t, fine(in)) || member(out, t, fine(out))) fn = &coarse;
  while (std::fabs(out - in) > tol) {
    const double mid = 0.5 * (in + out);
    if (member(mid, t, (*fn)(mid))) {
      in = mid;
    } else {
      out = mid;
    }
  }
  return in;
}

// Region in standardized units for observation t.
std::vector<Interval> scan(double t, const RegionSearch& search, const OffsetFn& coarse,
                           const OffsetFn& fine) {
  const std::size_t g = search.grid_points;
  std::vector<double> grid(g);
  std::vector<char> in(g);
  double k = search.half_width;
  for (int expansion = 0;; ++expansion) {
    if (expansion > search.max_expansions)
      throw ConvergenceError("fab_cr: region keeps touching the scan window", k);
    const double lo = t - k;
    const double step = 2.0 * k / static_cast<double>(g - 1);
    for (std::size_t i = 0; i < g; ++i) {
      grid[i] = i + 1 == g ? t + k : lo + step * static_cast<double>(i);
      in[i] = member(grid[i], t, coarse(grid[i]));
    }
    if (!in.front() && !in.back()) break;
    k *= 2.0;
  }

  std::vector<Interval> out;
  std::optional<double> open;
  for (std::size_t i = 1; i < g; ++i) {
    if (in[i] && !in[i - 1]) open = refine(grid[i], grid[i - 1], t, search.tolerance, fine, coarse);
    if (!in[i] && in[i - 1])
      out.push_back({*open, refine(grid[i - 1], grid[i], t, search.tolerance, fine, coarse)});
  }
  return out;
}

void validate(double y, double sigma, double tau, double alpha, const RegionSearch& search) {
  if (!std::isfinite(y)) throw DomainError("fab_cr: y must be finite");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("fab_cr: sigma must be positive");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("fab_cr: tau must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("fab_cr: alpha must lie in (0,1)");
  if (search.grid_points < 3 || !(search.half_width > 0.0) || !(search.tolerance > 0.0))
    throw DomainError("fab_cr: bad search settings");
}

}  // namespace

ConfidenceRegion fab_cr(double y, double sigma, PriorFamily family, double tau, double alpha,
                        const RegionSearch& search) {
  validate(y, sigma, tau, alpha, search);
  const double t = y / sigma;
  const double rho = tau / sigma;
  const bool matched = std::fabs(rho - 1.0) <= kMatchedScaleTol;

  OffsetFn exact = [family, rho, alpha](double b) {
    return detail::exact_offsets(family, b, rho, alpha);
  };
  std::vector<Interval> pieces;
  if (search.use_tables && matched) {
    const auto& table = detail::unit_scale_table(family, alpha);
    OffsetFn fn = [&table](double b) { return table.at(b); };
    pieces = scan(t, search, fn, fn);
  } else if (search.use_tables && family == PriorFamily::Horseshoe) {
    // Quadrature-backed marginal: interpolate for the scan, refine exactly.
    detail::LazySpendingTable lazy(exact, 1.0 / 16.0);
    OffsetFn fn = [&lazy](double b) { return lazy.at(b); };
    pieces = scan(t, search, fn, exact);
  } else {
    pieces = scan(t, search, exact, exact);
  }
  if (pieces.empty()) throw InternalError("fab_cr: region came out empty");
  return ConfidenceRegion(std::move(pieces), 1.0 - alpha).affine(sigma, 0.0);
}

ConfidenceRegion fab_cr(double y, double sigma, const PriorSpec& prior, double alpha,
                        std::size_t n, const RegionSearch& search) {
  return fab_cr(y, sigma, prior.family, prior.tau(sigma, n), alpha, search);
}

}  // namespace fabppi
