#include "support_set.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "errors.hpp"

namespace freeconv {

SupportSet::SupportSet(std::vector<Interval> intervals, double epsilon) : epsilon_(epsilon) {
  for (const auto& iv : intervals) {
    if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || iv.lo > iv.hi) {
      throw DomainError("support interval must satisfy lo <= hi with finite endpoints");
    }
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

bool SupportSet::contains(double x) const noexcept {
  return std::any_of(intervals_.begin(), intervals_.end(),
                     [x](const Interval& iv) { return iv.contains(x); });
}

double SupportSet::distance(double x) const noexcept {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& iv : intervals_) {
    if (iv.contains(x)) return 0.0;
    best = std::min(best, x < iv.lo ? iv.lo - x : x - iv.hi);
  }
  return best;
}

Interval SupportSet::hull() const {
  if (intervals_.empty()) throw DomainError("hull of an empty support set");
  return {intervals_.front().lo, intervals_.back().hi};
}

double SupportSet::diameter() const { return hull().length(); }

std::vector<Interval> SupportSet::bounded_gaps() const {
  std::vector<Interval> gaps;
  for (std::size_t i = 1; i < intervals_.size(); ++i) {
    gaps.push_back({intervals_[i - 1].hi, intervals_[i].lo});
  }
  return gaps;
}

SupportSet SupportSet::enlarged(double eps) const {
  if (eps < 0) throw DomainError("enlargement radius must be nonnegative");
  std::vector<Interval> out;
  out.reserve(intervals_.size());
  for (const auto& iv : intervals_) out.push_back({iv.lo - eps, iv.hi + eps});
  return SupportSet(std::move(out), epsilon_ + eps);
}

SupportSet SupportSet::shifted(double offset) const {
  std::vector<Interval> out;
  out.reserve(intervals_.size());
  for (const auto& iv : intervals_) out.push_back({iv.lo + offset, iv.hi + offset});
  return SupportSet(std::move(out), epsilon_);
}

SupportSet SupportSet::united(const SupportSet& other) const {
  std::vector<Interval> all = intervals_;
  all.insert(all.end(), other.intervals_.begin(), other.intervals_.end());
  return SupportSet(std::move(all), std::max(epsilon_, other.epsilon_));
}

}  // namespace freeconv
