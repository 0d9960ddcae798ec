#pragma once

#include <vector>

namespace freeconv {

struct Interval {
  double lo;
  double hi;

  double length() const noexcept { return hi - lo; }
  bool contains(double x) const noexcept { return lo <= x && x <= hi; }
  bool operator==(const Interval&) const = default;
};

/// Finite union of closed real intervals, kept sorted and pairwise disjoint.
///
/// `epsilon` records how far the set has been inflated from the support it was
/// derived from (0 for a raw support, eta for an eta-neighbourhood).
class SupportSet {
 public:
  SupportSet() = default;
  /// Sorts and merges overlapping or touching intervals. Throws DomainError on
  /// an interval with lo > hi or a non-finite endpoint.
  explicit SupportSet(std::vector<Interval> intervals, double epsilon = 0.0);

  const std::vector<Interval>& intervals() const noexcept { return intervals_; }
  double epsilon() const noexcept { return epsilon_; }
  bool empty() const noexcept { return intervals_.empty(); }
  std::size_t size() const noexcept { return intervals_.size(); }

  bool contains(double x) const noexcept;
  /// Euclidean distance from x to the set; 0 inside.
  double distance(double x) const noexcept;
  Interval hull() const;
  double diameter() const;

  /// Open gaps between consecutive components, as (right end of one, left end of next).
  std::vector<Interval> bounded_gaps() const;

  SupportSet enlarged(double eps) const;
  SupportSet shifted(double offset) const;
  SupportSet united(const SupportSet& other) const;

 private:
  std::vector<Interval> intervals_;
  double epsilon_ = 0.0;
};

/// Closed eps-neighbourhood of S: each interval inflated by eps, overlaps merged.
inline SupportSet enlarge(const SupportSet& s, double eps) { return s.enlarged(eps); }

}  // namespace freeconv
