#pragma once

#include <span>
#include <vector>

namespace nlmg {

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Supported point counts: 2, 3, 4, 5, 6, 8, 10, 12, 16, 20.
const GaussRule& gauss_legendre(int points);

/// Neumaier-compensated accumulator; summation order is the caller's.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (abs_(sum_) >= abs_(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  static double abs_(double v) { return v < 0 ? -v : v; }
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace nlmg
