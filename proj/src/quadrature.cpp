#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <vector>

#include "fabppi/errors.hpp"
#include "fabppi/specfun.hpp"

namespace fabppi::specfun {

namespace {

// Gauss-Kronrod 7/15 abscissae and weights (QUADPACK qk15).
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double lo;
  double hi;
  double value;
  double error;
  bool operator<(const Segment& other) const { return error < other.error; }
};

Segment gk15(const RealFn& f, double lo, double hi) {
  const double center = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  const double fc = f(center);
  double kronrod = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double f1 = f(center - dx);
    const double f2 = f(center + dx);
    kronrod += kWgk[j] * (f1 + f2);
    if (j % 2 == 1) gauss += kWg[j / 2] * (f1 + f2);
  }
  kronrod *= half;
  gauss *= half;
  if (!std::isfinite(kronrod)) throw DomainError("integrate: integrand not finite on range");
  return {lo, hi, kronrod, std::fabs(kronrod - gauss)};
}

QuadratureResult adaptive(const RealFn& f, double lo, double hi, const QuadratureSettings& s) {
  std::priority_queue<Segment> heap;
  Segment first = gk15(f, lo, hi);
  double total = first.value;
  double error = first.error;
  heap.push(first);
  std::size_t splits = 0;
  while (error > std::max(s.abs_tol, s.rel_tol * std::fabs(total))) {
    if (splits >= s.max_subdivisions)
      throw ConvergenceError("integrate: subdivision budget exhausted", total);
    const Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.lo + worst.hi);
    const Segment left = gk15(f, worst.lo, mid);
    const Segment right = gk15(f, mid, worst.hi);
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++splits;
  }
  // Re-sum in a fixed order to shed accumulated update noise.
  double sum = 0.0;
  double err = 0.0;
  std::vector<Segment> parts;
  parts.reserve(heap.size());
  while (!heap.empty()) {
    parts.push_back(heap.top());
    heap.pop();
  }
  std::sort(parts.begin(), parts.end(),
            [](const Segment& a, const Segment& b) { return a.lo < b.lo; });
  for (const auto& p : parts) {
    sum += p.value;
    err += p.error;
  }
  return {sum, err, splits};
}

}  // namespace

QuadratureResult integrate_detailed(const RealFn& f, double lo, double hi,
                                    const QuadratureSettings& settings) {
  if (!(settings.abs_tol > 0.0) || !(settings.rel_tol > 0.0) || settings.max_subdivisions < 1)
    throw DomainError("integrate: invalid quadrature settings");
  if (std::isnan(lo) || std::isnan(hi) || !(lo < hi))
    throw DomainError("integrate: need lo < hi");

  const bool lo_inf = std::isinf(lo);
  const bool hi_inf = std::isinf(hi);
  if (!lo_inf && !hi_inf) return adaptive(f, lo, hi, settings);
  if (lo_inf && hi_inf) {
    // x = t / (1 - t^2) on (-1, 1)
    auto g = [&f](double t) {
      const double d = 1.0 - t * t;
      return f(t / d) * (1.0 + t * t) / (d * d);
    };
    return adaptive(g, -1.0, 1.0, settings);
  }
  if (hi_inf) {
    // x = lo + t / (1 - t) on [0, 1)
    auto g = [&f, lo](double t) {
      const double d = 1.0 - t;
      return f(lo + t / d) / (d * d);
    };
    return adaptive(g, 0.0, 1.0, settings);
  }
  auto g = [&f, hi](double t) {
    const double d = 1.0 - t;
    return f(hi - t / d) / (d * d);
  };
  return adaptive(g, 0.0, 1.0, settings);
}

double integrate(const RealFn& f, double lo, double hi, const QuadratureSettings& settings) {
  return integrate_detailed(f, lo, hi, settings).value;
}

}  // namespace fabppi::specfun
