#include "fabppi/specfun.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "fabppi/errors.hpp"

namespace fabppi::specfun {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779399461;

void require_finite(double x, const char* who) {
  if (!std::isfinite(x)) throw DomainError(std::string(who) + ": non-finite argument");
}

// Acklam's rational approximation, lower half only (p <= 0.5).
double quantile_lower_half(double p) {
  static constexpr std::array<double, 6> a = {-3.969683028665376e+01, 2.209460984245205e+02,
                                              -2.759285104469687e+02, 1.383577518672690e+02,
                                              -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr std::array<double, 5> b = {-5.447609879822406e+01, 1.615858368580409e+02,
                                              -1.556989798598866e+02, 6.680131188771972e+01,
                                              -1.328068155288572e+01};
  static constexpr std::array<double, 6> c = {-7.784894002430293e-03, -3.223964580411365e-01,
                                              -2.400758277161838e+00, -2.549732539343734e+00,
                                              4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr std::array<double, 4> d = {7.784695709041462e-03, 3.224671290700398e-01,
                                              2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  // One Halley step against the erfc-based cdf.
  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

double kummer_series(double a, double b, double z) {
  // Direct sum; callers only use it when every term is positive.
  double term = 1.0;
  double sum = 1.0;
  for (int n = 0; n < 10000; ++n) {
    term *= (a + n) / (b + n) * z / (n + 1);
    sum += term;
    if (term < 1e-17 * sum && n > z) return sum;
  }
  throw ConvergenceError("kummer_1f1: series did not converge", sum);
}

// 1F1(a;b;-x) ~ Gamma(b)/Gamma(b-a) x^{-a} sum_s (a)_s (a-b+1)_s / s! x^{-s}
double kummer_asymptotic(double a, double b, double x) {
  double term = 1.0;
  double sum = 1.0;
  double prev = std::numeric_limits<double>::infinity();
  for (int s = 0; s < 200; ++s) {
    const double next = term * (a + s) * (a - b + 1.0 + s) / ((s + 1.0) * x);
    if (std::fabs(next) >= std::fabs(prev) && s > 0) break;  // divergent tail
    prev = term;
    term = next;
    sum += term;
    if (std::fabs(term) < 1e-17 * std::fabs(sum)) break;
  }
  const double log_ratio = std::lgamma(b) - std::lgamma(b - a);
  return std::exp(log_ratio - a * std::log(x)) * sum;
}

}  // namespace

double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double norm_cdf(double x) {
  require_finite(x, "norm_cdf");
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("norm_quantile: p must lie in (0,1)");
  if (p <= 0.5) return quantile_lower_half(p);
  return -quantile_lower_half(1.0 - p);
}

double norm_upper_quantile(double q) {
  if (!(q > 0.0 && q < 1.0)) throw DomainError("norm_upper_quantile: q must lie in (0,1)");
  if (q <= 0.5) return -quantile_lower_half(q);
  return quantile_lower_half(1.0 - q);
}

double kummer_1f1(double a, double b, double z) {
  require_finite(a, "kummer_1f1");
  require_finite(b, "kummer_1f1");
  require_finite(z, "kummer_1f1");
  if (b <= 0.0 && b == std::floor(b)) throw DomainError("kummer_1f1: b is a nonpositive integer");
  if (z == 0.0) return 1.0;

  constexpr double kSwitch = 30.0;
  if (z < 0.0) {
    if (!(a > 0.0 && b > a)) throw CapabilityError("kummer_1f1: need a > 0 and b > a for z < 0");
    const double x = -z;
    // Kummer transform keeps every term positive.
    if (x <= kSwitch) return std::exp(-x) * kummer_series(b - a, b, x);
    return kummer_asymptotic(a, b, x);
  }
  if (!(a > 0.0 && b > 0.0) || z > 700.0)
    throw CapabilityError("kummer_1f1: unsupported regime for z > 0");
  return kummer_series(a, b, z);
}

double dawson(double x) {
  require_finite(x, "dawson");
  const double ax = std::fabs(x);
  double result;
  if (ax < 0.2) {
    // D(x) = sum_k (-1)^k 2^k x^{2k+1} / (2k+1)!!
    const double x2 = x * x;
    double term = ax;
    result = ax;
    for (int k = 1; k < 30; ++k) {
      term *= -2.0 * x2 / (2.0 * k + 1.0);
      result += term;
      if (std::fabs(term) < 1e-18) break;
    }
  } else if (ax > 1e4) {
    const double r = 1.0 / (ax * ax);
    result = 0.5 / ax * (1.0 + 0.5 * r * (1.0 + 1.5 * r * (1.0 + 2.5 * r)));
  } else {
    // Rybicki: D(x) ~ pi^{-1/2} sum_{n odd} exp(-(x - n h)^2) / n
    constexpr double h = 0.2;
    constexpr int kTerms = 24;
    const double n0 = 2.0 * std::nearbyint(0.5 * ax / h);
    const double x0 = ax - n0 * h;
    double sum = 0.0;
    for (int k = kTerms; k >= 1; --k) {
      const double m = 2.0 * k - 1.0;
      sum += std::exp(-(x0 - m * h) * (x0 - m * h)) / (n0 + m);
      sum += std::exp(-(x0 + m * h) * (x0 + m * h)) / (n0 - m);
    }
    result = sum / std::sqrt(std::numbers::pi);
  }
  return x < 0.0 ? -result : result;
}

double find_root(const RealFn& g, const RootBracket& bracket, int max_iter) {
  if (!(bracket.lo < bracket.hi) || !(bracket.tol > 0.0))
    throw DomainError("find_root: need lo < hi and tol > 0");
  double a = bracket.lo;
  double b = bracket.hi;
  double fa = g(a);
  double fb = g(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0.0) == (fb > 0.0)) throw BracketError("find_root: no sign change on bracket");

  double c = b;
  double fc = fb;
  double d = b - a;
  double e = d;
  constexpr double eps = std::numeric_limits<double>::epsilon();
  for (int iter = 0; iter < max_iter; ++iter) {
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a;
      fc = fa;
      d = b - a;
      e = d;
    }
    if (std::fabs(fc) < std::fabs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const double tol1 = 2.0 * eps * std::fabs(b) + 0.5 * bracket.tol;
    const double xm = 0.5 * (c - b);
    if (std::fabs(xm) <= tol1 || fb == 0.0) return b;
    if (std::fabs(e) >= tol1 && std::fabs(fa) > std::fabs(fb)) {
      const double s = fb / fa;
      double p;
      double q;
      if (a == c) {
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else {
        const double qq = fa / fc;
        const double r = fb / fc;
        p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
        q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q;
      p = std::fabs(p);
      const double min1 = 3.0 * xm * q - std::fabs(tol1 * q);
      const double min2 = std::fabs(e * q);
      if (2.0 * p < std::min(min1, min2)) {
        e = d;
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    b += std::fabs(d) > tol1 ? d : (xm > 0.0 ? tol1 : -tol1);
    fb = g(b);
  }
  throw ConvergenceError("find_root: iteration cap reached", b);
}

}  // namespace fabppi::specfun
