#pragma once

#include <cmath>

namespace scd {

/// Neumaier-compensated running sum. Used for accumulators that see long
/// streams of increments and decrements of very different magnitudes.
class CompensatedSum {
 public:
  CompensatedSum() = default;
  explicit CompensatedSum(double v) : sum_(v) {}

  void add(double x) {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      c_ += (sum_ - t) + x;
    } else {
      c_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) {
    add(x);
    return *this;
  }
  CompensatedSum& operator-=(double x) {
    add(-x);
    return *this;
  }
  double value() const { return sum_ + c_; }
  void reset(double v = 0.0) {
    sum_ = v;
    c_ = 0.0;
  }

  double raw_sum() const { return sum_; }
  double raw_compensation() const { return c_; }
  static CompensatedSum from_raw(double sum, double c) {
    CompensatedSum s(sum);
    s.c_ = c;
    return s;
  }

 private:
  double sum_ = 0.0;
  double c_ = 0.0;
};

}  // namespace scd
