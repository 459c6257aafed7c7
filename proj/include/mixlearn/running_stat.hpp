#pragma once

#include <cmath>

namespace mixlearn {

/// Welford accumulator for Monte Carlo means. Keeps the variance exactly
/// zero for constant inputs, which matters for the degenerate estimator
/// cases asserted in tests.
class RunningStat {
 public:
  void add(double value) {
    ++count_;
    const double delta = value - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (value - mean_);
  }

  long count() const { return count_; }
  double mean() const { return mean_; }

  double variance() const {
    return count_ > 1 ? m2_ / static_cast<double>(count_ - 1) : 0.0;
  }

  double std_error() const {
    return count_ > 0 ? std::sqrt(variance() / static_cast<double>(count_)) : 0.0;
  }

 private:
  long count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace mixlearn
