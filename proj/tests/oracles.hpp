// Test-only oracles: brute-force grid minimizers, exhaustive Rademacher
// enumeration, and closed forms. These stay independent of the library
// code paths they cross-check.
#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include "mixlearn/core.hpp"

namespace oracles {

using mixlearn::Mat;
using mixlearn::Vec;

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// TV distance between equal-variance Gaussians: 2*Phi(|d|/(2*sigma)) - 1.
inline double tv_gaussians_closed_form(double mean1, double mean2, double sigma) {
  return 2.0 * normal_cdf(std::abs(mean1 - mean2) / (2.0 * sigma)) - 1.0;
}

/// Exhaustive minimizer of f over a regular grid on a box.
struct GridResult {
  std::vector<double> arg;
  double value = std::numeric_limits<double>::infinity();
};

inline GridResult grid_minimize(const std::function<double(const std::vector<double>&)>& f,
                                const std::vector<double>& lower,
                                const std::vector<double>& upper, double step) {
  const std::size_t dim = lower.size();
  std::vector<long> counts(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    counts[k] = static_cast<long>(std::floor((upper[k] - lower[k]) / step + 1e-9)) + 1;
  }
  GridResult best;
  std::vector<double> point(dim);
  std::vector<long> idx(dim, 0);
  while (true) {
    for (std::size_t k = 0; k < dim; ++k) point[k] = lower[k] + step * static_cast<double>(idx[k]);
    const double value = f(point);
    if (value < best.value) {
      best.value = value;
      best.arg = point;
    }
    std::size_t k = 0;
    while (k < dim && ++idx[k] >= counts[k]) {
      idx[k] = 0;
      ++k;
    }
    if (k == dim) break;
  }
  return best;
}

/// Exact Rademacher expectation by enumerating all 2^n sign vectors.
/// per_draw maps a sign vector to the inner supremum value.
inline double enumerate_signs(long n,
                              const std::function<double(const std::vector<int>&)>& per_draw) {
  const long total = 1L << n;
  std::vector<int> signs(n);
  double acc = 0.0;
  for (long mask = 0; mask < total; ++mask) {
    for (long i = 0; i < n; ++i) signs[i] = (mask >> i) & 1 ? 1 : -1;
    acc += per_draw(signs);
  }
  return acc / static_cast<double>(total);
}

inline double rademacher_l2_exact(const Mat& x, double w2) {
  return enumerate_signs(x.rows(), [&](const std::vector<int>& signs) {
    Vec sum = Vec::Zero(x.cols());
    for (long i = 0; i < x.rows(); ++i) sum += static_cast<double>(signs[i]) * x.row(i).transpose();
    return w2 / static_cast<double>(x.rows()) * sum.norm();
  });
}

inline double rademacher_l1_exact(const Mat& x, double w1) {
  return enumerate_signs(x.rows(), [&](const std::vector<int>& signs) {
    Vec sum = Vec::Zero(x.cols());
    for (long i = 0; i < x.rows(); ++i) sum += static_cast<double>(signs[i]) * x.row(i).transpose();
    return w1 / static_cast<double>(x.rows()) * sum.lpNorm<Eigen::Infinity>();
  });
}

/// Independent high-precision bisection for delta^2 = a delta^p + b delta.
inline double critical_root_oracle(double a, double p, double b) {
  const auto phi = [&](double d) { return d * d - a * std::pow(d, p) - b * d; };
  double lo = 1e-12, hi = 1.0;
  while (phi(hi) <= 0.0) hi *= 2.0;
  while (phi(lo) >= 0.0) lo *= 0.5;
  for (int it = 0; it < 500; ++it) {
    const double mid = 0.5 * (lo + hi);
    (phi(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace oracles
