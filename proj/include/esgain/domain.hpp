#pragma once

#include <cstddef>
#include <vector>

#include "esgain/expr.hpp"

namespace esgain {

struct Interval {
  double lo = -1.0;
  double hi = 1.0;
};

/// Axis-aligned box; one closed interval per state variable.
class Domain {
 public:
  Domain() = default;
  explicit Domain(std::vector<Interval> axes);

  static Domain interval(double lo, double hi) { return Domain({{lo, hi}}); }
  static Domain box(Interval a, Interval b) { return Domain({a, b}); }

  int dim() const { return static_cast<int>(axes_.size()); }
  const Interval& axis(int i) const { return axes_[static_cast<std::size_t>(i)]; }
  const std::vector<Interval>& axes() const { return axes_; }
  bool contains(const Domain& other) const;

 private:
  std::vector<Interval> axes_;
};

struct SupNorm {
  double value = 0.0;
  std::vector<double> argmax;
  /// Grid spacing per axis of the initial scan.
  std::vector<double> spacing;
};

struct ScanOptions {
  /// Samples per axis; 0 picks 20001 in 1-D and 1001 per axis otherwise.
  std::size_t samples = 0;
  bool refine = true;
};

/// Estimate of sup |e| on `dom`: dense uniform scan followed by a
/// golden-section refinement around the best sample. The result is a lower
/// bound of the true supremum. Throws OverflowError on a non-finite sample.
SupNorm scan_supnorm(const Expr& e, const Domain& dom, ScanOptions opts = {});

/// Location of the minimum of `e` on `dom` (same scan + refinement).
std::vector<double> scan_argmin(const Expr& e, const Domain& dom, ScanOptions opts = {});

}  // namespace esgain
