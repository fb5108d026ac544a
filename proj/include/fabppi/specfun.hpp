#pragma once

#include <cstddef>
#include <functional>

namespace fabppi::specfun {

double norm_pdf(double x);
double norm_cdf(double x);
double norm_quantile(double p);
// z_{1-q} computed without forming 1-q.
double norm_upper_quantile(double q);

// Confluent hypergeometric 1F1(a; b; z). Certified for a > 0, b > a, z <= 0
// and for a, b > 0 with moderate z >= 0.
double kummer_1f1(double a, double b, double z);

double dawson(double x);

struct QuadratureSettings {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  std::size_t max_subdivisions = 500;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t subdivisions = 0;
};

using RealFn = std::function<double(double)>;

// Either bound may be infinite; infinite ranges are mapped onto finite ones
// by x = a + t/(1-t) (and its mirror images).
QuadratureResult integrate_detailed(const RealFn& f, double lo, double hi,
                                    const QuadratureSettings& settings = {});
double integrate(const RealFn& f, double lo, double hi,
                 const QuadratureSettings& settings = {});

struct RootBracket {
  double lo;
  double hi;
  double tol;
};

// Brent's method. Throws BracketError without a sign change.
double find_root(const RealFn& g, const RootBracket& bracket, int max_iter = 200);

}  // namespace fabppi::specfun
