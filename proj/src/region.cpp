#include <algorithm>
#include <cmath>
#include <limits>

#include "fabppi/errors.hpp"
#include "fabppi/fabcr.hpp"

namespace fabppi {

ConfidenceRegion::ConfidenceRegion(std::vector<Interval> intervals, double level) : level_(level) {
  for (const auto& iv : intervals) {
    if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || iv.lo > iv.hi)
      throw DomainError("ConfidenceRegion: bad interval");
  }
  std::sort(intervals.begin(), intervals.end(),
            [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  for (const auto& iv : intervals) {
    if (!intervals_.empty() && iv.lo <= intervals_.back().hi) {
      intervals_.back().hi = std::max(intervals_.back().hi, iv.hi);
    } else {
      intervals_.push_back(iv);
    }
  }
}

ConfidenceRegion ConfidenceRegion::single(double lo, double hi, double level) {
  return ConfidenceRegion({{lo, hi}}, level);
}

bool ConfidenceRegion::contains(double x) const {
  return std::any_of(intervals_.begin(), intervals_.end(),
                     [x](const Interval& iv) { return iv.lo <= x && x <= iv.hi; });
}

double ConfidenceRegion::volume() const {
  double v = 0.0;
  for (const auto& iv : intervals_) v += iv.hi - iv.lo;
  return v;
}

double ConfidenceRegion::inf() const {
  if (empty()) throw DomainError("ConfidenceRegion: empty");
  return intervals_.front().lo;
}

double ConfidenceRegion::sup() const {
  if (empty()) throw DomainError("ConfidenceRegion: empty");
  return intervals_.back().hi;
}

double ConfidenceRegion::distance_to(double x) const {
  if (empty()) throw DomainError("ConfidenceRegion: empty");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& iv : intervals_) {
    if (x < iv.lo) {
      best = std::min(best, iv.lo - x);
    } else if (x > iv.hi) {
      best = std::min(best, x - iv.hi);
    } else {
      return 0.0;
    }
  }
  return best;
}

ConfidenceRegion ConfidenceRegion::affine(double scale, double shift) const {
  if (!(scale != 0.0) || !std::isfinite(scale)) throw DomainError("affine: bad scale");
  std::vector<Interval> out;
  out.reserve(intervals_.size());
  for (const auto& iv : intervals_) {
    const double a = scale * iv.lo + shift;
    const double b = scale * iv.hi + shift;
    out.push_back(scale > 0.0 ? Interval{a, b} : Interval{b, a});
  }
  return ConfidenceRegion(std::move(out), level_);
}

namespace {

// sup over x in a of the distance from x to b.
double directed(const ConfidenceRegion& a, const ConfidenceRegion& b) {
  const auto& bi = b.intervals();
  double worst = 0.0;
  for (const auto& iv : a.intervals()) {
    worst = std::max({worst, b.distance_to(iv.lo), b.distance_to(iv.hi)});
    // Inside a gap of b the distance peaks at the gap midpoint.
    for (std::size_t k = 0; k + 1 < bi.size(); ++k) {
      const double glo = bi[k].hi;
      const double ghi = bi[k + 1].lo;
      if (ghi < iv.lo || glo > iv.hi) continue;
      const double m = std::clamp(0.5 * (glo + ghi), iv.lo, iv.hi);
      worst = std::max(worst, b.distance_to(m));
    }
  }
  return worst;
}

}  // namespace

double hausdorff_distance(const ConfidenceRegion& a, const ConfidenceRegion& b) {
  if (a.empty() || b.empty()) throw DomainError("hausdorff_distance: empty region");
  return std::max(directed(a, b), directed(b, a));
}

}  // namespace fabppi
