#pragma once

#include <variant>

#include "mixlearn/core.hpp"

namespace mixlearn::rates {

struct LinearClass {
  int d = 1;
};
struct LipschitzClass {
  double l = 1.0;
};
struct ConvexLipschitzClass {};
struct HolderClass {
  double alpha = 1.0;
};

using FunctionClass =
    std::variant<LinearClass, LipschitzClass, ConvexLipschitzClass, HolderClass>;

struct RateResult {
  double delta_star = 0.0;
  double rate = 0.0;  // delta_star^2
  double residual = 0.0;
  FunctionClass class_tag;
};

/// Unique positive root of delta^2 = a*delta^p + b*delta by bisection.
RateResult solve_critical(const CriticalEq& eq);

/// Builds the per-class critical equation (a, p, b = 2*zeta*gamma) and
/// solves it. Holder alpha = 1 and alpha = 2 delegate to the Lipschitz
/// (L = 1) and convex-Lipschitz paths so the specializations are
/// bit-identical.
RateResult critical_for_class(const FunctionClass& cls, double zeta, long n, double gamma,
                              double rate_multiplier = 1.0);

/// Largest heterogeneity at which the mixture rate stays order-wise
/// homogeneous for the class.
double gamma_threshold(const FunctionClass& cls, double zeta, long n);

/// rho' = sqrt(4d(log d + log(6/fail_prob))/n) + 2d(log d + log(6/fail_prob))/(3n).
double rho_prime(int d, long n, double fail_prob);

/// Smallest n for which the covariance concentration event is available:
/// ceil(6 d (log d + log(6/fail_prob))).
long sample_requirement(int d, double fail_prob);

/// Out-of-sample prediction error bound for the hyperplane mixture:
/// cnoise * zeta^2 (d + 2 sqrt(d log(6/p)) + 2 log(6/p)) / ((1 - rho') n)
///   + cbias * (d nu^2 delta_w^2 / n) log(1/p).
double hyperplane_error_bound(double zeta, int d, long n, double fail_prob, double nu,
                              double delta_w, double cnoise = 1.0, double cbias = 1.0);

/// Heterogeneity level below which the hyperplane mixture is order-wise
/// no worse than a single component: zeta / nu.
double delta_w_threshold(double zeta, double nu);

}  // namespace mixlearn::rates
