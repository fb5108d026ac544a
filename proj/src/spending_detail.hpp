#pragma once

#include <functional>
#include <unordered_map>
#include <vector>

#include "fabppi/fabcr.hpp"

namespace fabppi::detail {

// Acceptance interval of a standardized problem (sigma = 1) at location b:
// [b - a, b + u].
struct Offsets {
  double a;
  double u;
  bool at_boundary = false;
};

Offsets swapped(const Offsets& o);
Offsets offsets_from_w(double w, double alpha);

// Gaussian prior with sd rho, solved through the interval radius so it stays
// accurate where w rounds to 1 in double precision.
Offsets gaussian_offsets(double b, double rho, double alpha);
SpendingValue gaussian_spending_std(double b, double rho, double alpha);
SpendingValue numeric_spending_std(PriorFamily family, double b, double rho, double alpha);
Offsets exact_offsets(PriorFamily family, double b, double rho, double alpha);

using OffsetFn = std::function<Offsets(double)>;

// Cubic interpolation on uniform nodes over b >= 0, mirrored for b < 0.
class SpendingTable {
 public:
  SpendingTable(OffsetFn exact, double step, double b_max);
  Offsets at(double b) const;

 private:
  Offsets node(long k) const;
  OffsetFn exact_;
  double step_;
  double b_max_;
  std::vector<Offsets> nodes_;
};

// Same interpolation, but nodes are evaluated on first use. Not thread-safe;
// meant to live for one region construction.
class LazySpendingTable {
 public:
  LazySpendingTable(OffsetFn exact, double step);
  Offsets at(double b);

 private:
  Offsets node(long k);
  OffsetFn exact_;
  double step_;
  std::unordered_map<long, Offsets> cache_;
};

// Shared, immutable table for prior scale equal to sigma.
const SpendingTable& unit_scale_table(PriorFamily family, double alpha);

// Shared table when the prior scale matches sigma, exact evaluation otherwise.
Offsets fast_offsets(PriorFamily family, double b, double rho, double alpha);

Offsets interpolate(const Offsets& m1, const Offsets& p0, const Offsets& p1, const Offsets& p2,
                    double x);

}  // namespace fabppi::detail
