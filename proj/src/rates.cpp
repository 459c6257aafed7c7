#include "mixlearn/rates.hpp"

#include <cmath>

namespace mixlearn::rates {

namespace {

double critical_residual(const CriticalEq& eq, double delta) {
  return delta * delta - eq.a * std::pow(delta, eq.p) - eq.b * delta;
}

void check_rate_inputs(double zeta, long n, double gamma) {
  if (n < 1) throw ValidationError(Fault::BadArgument, "n must be >= 1");
  if (!(zeta > 0.0)) throw ValidationError(Fault::NonPositiveValue, "zeta must be positive");
  if (gamma < 0.0 || gamma > 1.0) {
    throw ValidationError(Fault::BadArgument, "gamma must lie in [0,1]");
  }
}

CriticalEq equation_for(const FunctionClass& cls, double zeta, long n, double gamma) {
  const double nn = static_cast<double>(n);
  CriticalEq eq;
  eq.b = 2.0 * zeta * gamma;
  if (const auto* lin = std::get_if<LinearClass>(&cls)) {
    if (lin->d < 1) throw ValidationError(Fault::BadArgument, "dimension must be >= 1");
    eq.a = zeta * std::sqrt(static_cast<double>(lin->d) / nn);
    eq.p = 1.0;
  } else if (const auto* lip = std::get_if<LipschitzClass>(&cls)) {
    if (!(lip->l > 0.0)) {
      throw ValidationError(Fault::NonPositiveValue, "Lipschitz constant must be positive");
    }
    eq.a = zeta * std::sqrt(lip->l / nn);
    eq.p = 0.5;
  } else if (std::holds_alternative<ConvexLipschitzClass>(cls)) {
    eq.a = zeta / std::sqrt(nn);
    eq.p = 0.75;
  } else {
    const auto& holder = std::get<HolderClass>(cls);
    if (!(holder.alpha > 0.0)) {
      throw ValidationError(Fault::NonPositiveValue, "Holder exponent must be positive");
    }
    eq.a = zeta / std::sqrt(nn);
    eq.p = 1.0 - 1.0 / (2.0 * holder.alpha);
  }
  return eq;
}

}  // namespace

RateResult solve_critical(const CriticalEq& eq) {
  validate_critical_eq(eq);
  RateResult result;
  if (eq.a == 0.0) {
    // delta^2 = b*delta: the positive root is b itself.
    result.delta_star = eq.b;
    result.rate = eq.b * eq.b;
    result.residual = 0.0;
    return result;
  }

  // phi(delta) = delta^2 - a delta^p - b delta has a single sign change on
  // (0, hi]. The analytic cap a+b+1 only covers p <= 1, so grow the
  // bracket geometrically when needed.
  double lo = 1e-300;
  double hi = eq.a + eq.b + 1.0;
  while (critical_residual(eq, hi) <= 0.0) hi *= 2.0;

  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (critical_residual(eq, mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-14 * hi) break;
  }
  // Pick the endpoint with the smaller residual magnitude.
  const double rlo = critical_residual(eq, lo);
  const double rhi = critical_residual(eq, hi);
  if (std::abs(rlo) < std::abs(rhi)) {
    result.delta_star = lo;
    result.residual = rlo;
  } else {
    result.delta_star = hi;
    result.residual = rhi;
  }
  result.rate = result.delta_star * result.delta_star;
  return result;
}

RateResult critical_for_class(const FunctionClass& cls, double zeta, long n, double gamma,
                              double rate_multiplier) {
  check_rate_inputs(zeta, n, gamma);
  if (const auto* holder = std::get_if<HolderClass>(&cls)) {
    // alpha = 1 and alpha = 2 coincide exactly with the Lipschitz (L=1)
    // and convex-Lipschitz equations; route through those paths so the
    // results match bit for bit.
    if (holder->alpha == 1.0) {
      return critical_for_class(LipschitzClass{1.0}, zeta, n, gamma, rate_multiplier);
    }
    if (holder->alpha == 2.0) {
      return critical_for_class(ConvexLipschitzClass{}, zeta, n, gamma, rate_multiplier);
    }
  }
  RateResult result = solve_critical(equation_for(cls, zeta, n, gamma));
  result.rate *= rate_multiplier;
  result.class_tag = cls;
  return result;
}

double gamma_threshold(const FunctionClass& cls, double zeta, long n) {
  check_rate_inputs(zeta, n, 0.0);
  const double nn = static_cast<double>(n);
  if (const auto* lin = std::get_if<LinearClass>(&cls)) {
    return std::sqrt(static_cast<double>(lin->d) / nn);
  }
  if (const auto* lip = std::get_if<LipschitzClass>(&cls)) {
    return std::cbrt(lip->l / (zeta * nn));
  }
  if (std::holds_alternative<ConvexLipschitzClass>(cls)) {
    return std::pow(1.0 / zeta, 0.2) * std::pow(1.0 / nn, 0.4);
  }
  const auto& holder = std::get<HolderClass>(cls);
  if (holder.alpha == 1.0) return gamma_threshold(LipschitzClass{1.0}, zeta, n);
  if (holder.alpha == 2.0) return gamma_threshold(ConvexLipschitzClass{}, zeta, n);
  const double denom = 1.0 + 2.0 * holder.alpha;
  return std::pow(1.0 / zeta, 1.0 / denom) * std::pow(1.0 / nn, holder.alpha / denom);
}

double rho_prime(int d, long n, double fail_prob) {
  if (d < 1 || n < 1) throw ValidationError(Fault::BadArgument, "d and n must be >= 1");
  const double dd = static_cast<double>(d);
  const double nn = static_cast<double>(n);
  const double log_term = std::log(dd) + std::log(6.0 / fail_prob);
  return std::sqrt(4.0 * dd * log_term / nn) + 2.0 * dd * log_term / (3.0 * nn);
}

long sample_requirement(int d, double fail_prob) {
  if (d < 1) throw ValidationError(Fault::BadArgument, "d must be >= 1");
  if (!(fail_prob > 0.0) || !(fail_prob < 1.0)) {
    throw ValidationError(Fault::BadArgument, "fail_prob must lie in (0,1)");
  }
  const double dd = static_cast<double>(d);
  const double value = 6.0 * dd * (std::log(dd) + std::log(6.0 / fail_prob));
  return static_cast<long>(std::ceil(std::max(0.0, value)));
}

double hyperplane_error_bound(double zeta, int d, long n, double fail_prob, double nu,
                              double delta_w, double cnoise, double cbias) {
  if (!(fail_prob > 0.0) || !(fail_prob < 1.0)) {
    throw ValidationError(Fault::BadArgument, "fail_prob must lie in (0,1)");
  }
  if (d < 1 || n < 1) throw ValidationError(Fault::BadArgument, "d and n must be >= 1");
  const double rho = rho_prime(d, n, fail_prob);
  if (rho >= 1.0) {
    throw ValidationError(Fault::SampleTooSmall,
                          "n is below the sample requirement (rho' >= 1)");
  }
  const double dd = static_cast<double>(d);
  const double nn = static_cast<double>(n);
  const double log6 = std::log(6.0 / fail_prob);
  const double noise =
      cnoise * zeta * zeta * (dd + 2.0 * std::sqrt(dd * log6) + 2.0 * log6) / ((1.0 - rho) * nn);
  const double bias =
      cbias * (dd * nu * nu * delta_w * delta_w / nn) * std::log(1.0 / fail_prob);
  return noise + bias;
}

double delta_w_threshold(double zeta, double nu) {
  if (!(nu > 0.0)) throw ValidationError(Fault::NonPositiveValue, "nu must be positive");
  return zeta / nu;
}

}  // namespace mixlearn::rates
