#pragma once

#include <cmath>

namespace calikit {

// Neumaier compensated accumulator. Metric sums run sequentially in input
// order through this, which makes reports bit-stable for a given input file.
class StableSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace calikit
