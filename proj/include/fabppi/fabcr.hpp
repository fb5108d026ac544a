#pragma once

#include <cstddef>
#include <vector>

#include "fabppi/priors.hpp"

namespace fabppi {

struct Interval {
  double lo;
  double hi;
};

// Finite union of closed intervals, kept sorted and disjoint.
class ConfidenceRegion {
 public:
  ConfidenceRegion() = default;
  ConfidenceRegion(std::vector<Interval> intervals, double level);
  static ConfidenceRegion single(double lo, double hi, double level);

  const std::vector<Interval>& intervals() const { return intervals_; }
  double level() const { return level_; }
  bool empty() const { return intervals_.empty(); }
  std::size_t components() const { return intervals_.size(); }

  bool contains(double x) const;
  double volume() const;
  double inf() const;
  double sup() const;
  double distance_to(double x) const;
  // Image under x -> scale * x + shift; a negative scale mirrors the region.
  ConfidenceRegion affine(double scale, double shift) const;

 private:
  std::vector<Interval> intervals_;
  double level_ = 0.0;
};

double hausdorff_distance(const ConfidenceRegion& a, const ConfidenceRegion& b);

struct SpendingValue {
  double w;
  bool at_boundary;
};

struct AcceptanceInterval {
  double beta;
  double lower;
  double upper;
  double w;
  bool at_boundary;
};

// Closed-form spending under a Gaussian prior with standard deviation prior_sd.
SpendingValue spending_gaussian(double beta, double sigma, double prior_sd, double alpha);
// Root of the likelihood-ratio balance in w on [1e-10, 1 - 1e-10].
SpendingValue spending_numeric(double beta, double sigma, PriorFamily family, double tau,
                               double alpha);
SpendingValue spending_numeric(double beta, double sigma, const PriorSpec& prior, double alpha,
                               std::size_t n = 0);

AcceptanceInterval acceptance_interval(double beta, double sigma, PriorFamily family, double tau,
                                       double alpha);
AcceptanceInterval acceptance_interval(double beta, double sigma, const PriorSpec& prior,
                                       double alpha, std::size_t n = 0);

struct RegionSearch {
  double half_width = 12.0;      // initial scan half-width in units of sigma
  double tolerance = 1e-6;       // boundary refinement, in units of sigma
  std::size_t grid_points = 2001;
  int max_expansions = 30;
  // Interpolated spending tables for the scan; exact evaluation otherwise.
  bool use_tables = true;
};

ConfidenceRegion fab_cr(double y, double sigma, PriorFamily family, double tau, double alpha,
                        const RegionSearch& search = {});
ConfidenceRegion fab_cr(double y, double sigma, const PriorSpec& prior, double alpha,
                        std::size_t n = 0, const RegionSearch& search = {});

}  // namespace fabppi
