#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <optional>

#include "fabppi/errors.hpp"
#include "fabppi/ppi.hpp"
#include "fabppi/specfun.hpp"
#include "spending_detail.hpp"

namespace fabppi {

LossModel LossModel::squared() {
  return {"squared", [](double theta, double y) { return theta - y; }};
}

LossModel LossModel::pinball(double q) {
  if (!(q > 0.0 && q < 1.0)) throw DomainError("pinball loss needs 0 < q < 1");
  return {"pinball", [q](double theta, double y) { return (y <= theta ? 1.0 : 0.0) - q; }};
}

double ThetaGrid::at(std::size_t i) const {
  if (i + 1 == count) return hi;
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
}

double ThetaGrid::step() const { return (hi - lo) / static_cast<double>(count - 1); }

namespace {

enum class Kind { Classical, PPI, FAB };

struct ThetaStats {
  double m_hat = 0.0;
  double sigma_m = 0.0;  // sample sd of L'(f~)
  double delta_hat = 0.0;
  double sigma_hat = 0.0;
};

struct Problem {
  const LabelledSample* labelled;
  const UnlabelledSample* unlabelled;
  const LossModel* loss;
  Kind kind;
  double lambda;
  double alpha;
  double delta;
  bool known_m;
  std::optional<PriorSpec> prior;
};

void mean_sd(const std::vector<double>& v, double& m, double& sd) {
  m = stats::mean(v);
  sd = std::sqrt(stats::variance(v));
}

ThetaStats theta_stats(const Problem& p, double theta) {
  const auto& lab = *p.labelled;
  const std::size_t n = lab.n();
  std::vector<double> xi(n);
  ThetaStats s;
  if (p.kind == Kind::Classical) {
    for (std::size_t i = 0; i < n; ++i) xi[i] = p.loss->gradient(theta, lab.y[i]);
    double sd;
    mean_sd(xi, s.delta_hat, sd);
    s.sigma_hat = sd / std::sqrt(static_cast<double>(n));
    return s;
  }
  const auto& fx = p.unlabelled->fx();
  const std::size_t big_n = fx.size();
  std::vector<double> g(big_n);
  for (std::size_t j = 0; j < big_n; ++j) g[j] = p.loss->gradient(theta, fx[j]);
  mean_sd(g, s.m_hat, s.sigma_m);
  for (std::size_t i = 0; i < n; ++i)
    xi[i] = p.loss->gradient(theta, lab.y[i]) - p.lambda * p.loss->gradient(theta, lab.fx[i]);
  double xi_hat;
  double sigma_xi;
  mean_sd(xi, xi_hat, sigma_xi);
  const double lm1 = p.lambda - 1.0;
  s.delta_hat = xi_hat + lm1 * s.m_hat;
  s.sigma_hat = std::sqrt(sigma_xi * sigma_xi / static_cast<double>(n) +
                          lm1 * lm1 * s.sigma_m * s.sigma_m / static_cast<double>(big_n));
  return s;
}

struct ThetaEval {
  bool member;
  double objective;
};

class Evaluator {
 public:
  explicit Evaluator(const Problem& p) : p_(p) {
    z_rect_ = specfun::norm_upper_quantile(0.5 * p.delta);
    if (!p.known_m) z_fit_ = specfun::norm_upper_quantile(0.5 * (p.alpha - p.delta));
  }

  ThetaEval operator()(double theta) {
    const ThetaStats s = theta_stats(p_, theta);
    double fit_half = 0.0;
    if (!p_.known_m && p_.kind != Kind::Classical)
      fit_half = z_fit_ * s.sigma_m / std::sqrt(static_cast<double>(p_.unlabelled->size()));
    const double target = -s.m_hat;

    // Zero spread: the rectifier region is the single point delta_hat.
    if (s.sigma_hat == 0.0) {
      return {std::fabs(target - s.delta_hat) <= fit_half, std::fabs(s.m_hat + s.delta_hat)};
    }
    if (p_.kind != Kind::FAB) {
      const double half = z_rect_ * s.sigma_hat;
      const double dist = std::max(0.0, std::fabs(target - s.delta_hat) - half);
      return {dist <= fit_half, std::fabs(s.m_hat + s.delta_hat)};
    }
    const double tau = p_.prior->tau(s.sigma_hat, p_.labelled->n());
    const double shrunk = posterior_mean(s.delta_hat, s.sigma_hat, p_.prior->family, tau);
    bool in;
    if (p_.known_m) {
      // -m_hat is in the FAB region iff delta_hat is accepted at beta = -m_hat.
      const double rho = tau / s.sigma_hat;
      const double b = target / s.sigma_hat;
      const double t = s.delta_hat / s.sigma_hat;
      const auto o = detail::fast_offsets(p_.prior->family, b, rho, p_.delta);
      in = b - o.a <= t && t <= b + o.u;
    } else {
      if (!cached_ || cached_delta_ != s.delta_hat || cached_sigma_ != s.sigma_hat) {
        cached_ = fab_cr(s.delta_hat, s.sigma_hat, p_.prior->family, tau, p_.delta);
        cached_delta_ = s.delta_hat;
        cached_sigma_ = s.sigma_hat;
      }
      in = cached_->distance_to(target) <= fit_half;
    }
    return {in, std::fabs(s.m_hat + shrunk)};
  }

 private:
  const Problem& p_;
  double z_rect_ = 0.0;
  double z_fit_ = 0.0;
  std::optional<ConfidenceRegion> cached_;
  double cached_delta_ = 0.0;
  double cached_sigma_ = 0.0;
};

// Bisection on theta between a member and a non-member grid point.
double refine_theta(Evaluator& eval, double in, double out, double tol) {
  for (int it = 0; it < 200 && std::fabs(out - in) > tol; ++it) {
    const double mid = 0.5 * (in + out);
    if (eval(mid).member) {
      in = mid;
    } else {
      out = mid;
    }
  }
  return in;
}

void check_grid(const ThetaGrid& grid) {
  if (!(grid.lo < grid.hi) || grid.count < 3 || !std::isfinite(grid.lo) || !std::isfinite(grid.hi))
    throw DomainError("theta grid needs lo < hi and at least 3 points");
}

EstimateReport solve(const Problem& p, const ThetaGrid& grid, Method method) {
  check_grid(grid);
  Evaluator eval(p);
  const std::size_t g = grid.count;
  std::vector<ThetaEval> evals;
  evals.reserve(g);
  for (std::size_t i = 0; i < g; ++i) evals.push_back(eval(grid.at(i)));

  // argmin of |m + delta|, ties resolved toward the grid midpoint.
  const double mid = 0.5 * static_cast<double>(g - 1);
  std::size_t best = 0;
  for (std::size_t i = 1; i < g; ++i) {
    const double a = evals[i].objective;
    const double b = evals[best].objective;
    if (a < b || (a == b && std::fabs(static_cast<double>(i) - mid) <
                                std::fabs(static_cast<double>(best) - mid)))
      best = i;
  }
  if (best == 0 || best + 1 == g)
    throw GridBracketError("estimating equation minimised at the edge of the theta grid; widen it");

  const double tol = 1e-6 * grid.step();
  std::vector<Interval> pieces;
  std::optional<double> open;
  if (evals[0].member) open = grid.at(0);
  for (std::size_t i = 1; i < g; ++i) {
    if (evals[i].member && !evals[i - 1].member)
      open = refine_theta(eval, grid.at(i), grid.at(i - 1), tol);
    if (!evals[i].member && evals[i - 1].member)
      pieces.push_back({*open, refine_theta(eval, grid.at(i - 1), grid.at(i), tol)});
  }
  if (evals[g - 1].member) pieces.push_back({*open, grid.at(g - 1)});
  if (pieces.empty())
    throw GridBracketError("confidence region contains no grid point; refine the theta grid");

  EstimateReport r;
  r.method = method;
  r.prior = p.prior;
  r.point = grid.at(best);
  r.region = ConfidenceRegion(std::move(pieces), 1.0 - p.alpha);
  r.alpha = p.alpha;
  r.delta = p.delta;
  r.diagnostics["lambda"] = p.lambda;
  r.diagnostics["grid_step"] = grid.step();
  r.diagnostics["components"] = static_cast<double>(r.region.components());
  if (evals.front().member || evals.back().member) r.diagnostics["region_truncated"] = 1.0;
  return r;
}

Problem make_problem(const LabelledSample& labelled, const UnlabelledSample& unlabelled,
                     const LossModel& loss, Kind kind, double alpha, const DeltaRule& mode,
                     bool power_tuned) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
  if (unlabelled.is_analytic())
    throw DomainError("convex estimation needs unlabelled predictions, not an analytic mean");
  if (labelled.y.size() != labelled.fx.size()) throw DomainError("label/prediction length mismatch");
  if (labelled.n() < 2) throw SampleSizeError("labelled sample needs n >= 2");
  const double lambda = power_tuned ? lambda_hat(labelled, unlabelled) : 1.0;
  return {&labelled, &unlabelled, &loss, kind, lambda, alpha, mode.resolve(alpha),
          mode.kind == DeltaRule::Kind::KnownM, std::nullopt};
}

}  // namespace

EstimateReport classical_convex(const LabelledSample& labelled, const LossModel& loss,
                                double alpha, const ThetaGrid& grid) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
  if (labelled.n() < 2) throw SampleSizeError("labelled sample needs n >= 2");
  const Problem p{&labelled, nullptr, &loss, Kind::Classical, 0.0, alpha, alpha, true,
                  std::nullopt};
  return solve(p, grid, Method::Classical);
}

EstimateReport ppi_convex(const LabelledSample& labelled, const UnlabelledSample& unlabelled,
                          const LossModel& loss, double alpha, const DeltaRule& mode,
                          bool power_tuned, const ThetaGrid& grid) {
  const Problem p = make_problem(labelled, unlabelled, loss, Kind::PPI, alpha, mode, power_tuned);
  return solve(p, grid, power_tuned ? Method::PPIpp : Method::PPI);
}

EstimateReport fab_ppi_convex(const LabelledSample& labelled, const UnlabelledSample& unlabelled,
                              const LossModel& loss, const PriorSpec& prior, double alpha,
                              const DeltaRule& mode, bool power_tuned, const ThetaGrid& grid) {
  Problem p = make_problem(labelled, unlabelled, loss, Kind::FAB, alpha, mode, power_tuned);
  p.prior = prior;
  return solve(p, grid, power_tuned ? Method::FABPPIpp : Method::FABPPI);
}

}  // namespace fabppi
