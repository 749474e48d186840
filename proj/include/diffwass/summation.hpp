#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace diffwass {

/// Neumaier-compensated accumulator. Merging two partial sums is exact up to
/// the final rounding, so sharded sums reduced in a fixed order reproduce the
/// serial result bit for bit.
class CompensatedSum {
 public:
  CompensatedSum& add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
    return *this;
  }
  CompensatedSum& operator+=(double x) noexcept { return add(x); }
  CompensatedSum& merge(const CompensatedSum& other) noexcept {
    add(other.sum_);
    comp_ += other.comp_;
    return *this;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Compensated sum of the terms, accumulated in descending magnitude order.
inline double sum_descending_magnitude(std::vector<double> terms) {
  std::stable_sort(terms.begin(), terms.end(),
                   [](double a, double b) { return std::abs(a) > std::abs(b); });
  CompensatedSum s;
  for (double x : terms) s += x;
  return s.value();
}

inline double compensated_sum(std::span<const double> xs) {
  CompensatedSum s;
  for (double x : xs) s += x;
  return s.value();
}

}  // namespace diffwass
