#pragma once

#include <cmath>

#include "surfvort/core.hpp"

namespace surfvort {

/// Neumaier (improved Kahan) summation.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      compensation_ += (sum_ - t) + x;
    } else {
      compensation_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }
  double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

class CompensatedVec3 {
 public:
  void add(const Vec3& v) noexcept {
    x_.add(v.x());
    y_.add(v.y());
    z_.add(v.z());
  }
  CompensatedVec3& operator+=(const Vec3& v) noexcept {
    add(v);
    return *this;
  }
  Vec3 value() const noexcept { return {x_.value(), y_.value(), z_.value()}; }

 private:
  CompensatedSum x_, y_, z_;
};

}  // namespace surfvort
