#include "mixlearn/core.hpp"

#include <cmath>
#include <cstdlib>

namespace mixlearn {

namespace {

void check_weights(const std::vector<double>& weights, std::size_t expected) {
  if (weights.size() != expected) {
    throw ValidationError(Fault::DimensionMismatch,
                          "weights count does not match component count");
  }
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) {
      throw ValidationError(Fault::WeightSum, "weights must be nonnegative");
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > kWeightSumTol) {
    throw ValidationError(Fault::WeightSum, "weights must sum to 1 within 1e-12");
  }
}

}  // namespace

void validate_mixture(const MixtureModel& m) {
  if (m.components.empty()) {
    throw ValidationError(Fault::Empty, "mixture has no components");
  }
  check_weights(m.weights, m.components.size());
  const int d = m.components.front().dim();
  for (const auto& comp : m.components) {
    if (comp.dim() != d) {
      throw ValidationError(Fault::DimensionMismatch,
                            "mixture components have mismatched dimensions");
    }
    if (comp.dim() < 1) {
      throw ValidationError(Fault::Empty, "component mean is empty");
    }
    if (!(comp.scale > 0.0) || !std::isfinite(comp.scale)) {
      throw ValidationError(Fault::NonPositiveValue, "component scale must be positive");
    }
  }
}

void validate_hyperplane(const HyperplaneMixture& h) {
  if (h.regressors.empty()) {
    throw ValidationError(Fault::Empty, "hyperplane mixture has no regressors");
  }
  check_weights(h.weights, h.regressors.size());
  const auto d = h.regressors.front().size();
  if (d < 1) {
    throw ValidationError(Fault::Empty, "regressor dimension must be >= 1");
  }
  for (const auto& w : h.regressors) {
    if (w.size() != d) {
      throw ValidationError(Fault::DimensionMismatch,
                            "regressors have mismatched dimensions");
    }
  }
  if (!(h.nu > 0.0) || !std::isfinite(h.nu)) {
    throw ValidationError(Fault::NonPositiveValue, "covariate scale nu must be positive");
  }
  if (h.zeta < 0.0 || !std::isfinite(h.zeta)) {
    throw ValidationError(Fault::NonPositiveValue, "noise scale zeta must be nonnegative");
  }
}

void validate_dataset(const Dataset& data, int num_components) {
  if (data.x.rows() < 1) {
    throw ValidationError(Fault::Empty, "dataset must contain at least one row");
  }
  if (data.has_labels() && data.y.size() != data.x.rows()) {
    throw ValidationError(Fault::DimensionMismatch,
                          "label vector length does not match row count");
  }
  if (data.assignment) {
    if (static_cast<long>(data.assignment->size()) != data.x.rows()) {
      throw ValidationError(Fault::DimensionMismatch,
                            "assignment length does not match row count");
    }
    for (int j : *data.assignment) {
      if (j < 0 || (num_components >= 0 && j >= num_components)) {
        throw ValidationError(Fault::BadArgument, "assignment index out of range");
      }
    }
  }
}

void validate_fitted(const FittedFn& fn) {
  if (fn.is_linear()) {
    if (fn.linear().theta.size() < 1) {
      throw ValidationError(Fault::Empty, "linear fit has empty coefficient vector");
    }
    return;
  }
  const auto& pw = fn.piecewise();
  if (pw.knots.size() < 1 || pw.knots.size() != pw.values.size()) {
    throw ValidationError(Fault::BadKnots, "knots and values must be nonempty and equal length");
  }
  if (pw.knots[0] != 0.0 || pw.values[0] != 0.0) {
    throw ValidationError(Fault::BadKnots, "first knot must anchor f(0)=0");
  }
  for (int k = 1; k < pw.knots.size(); ++k) {
    if (!(pw.knots[k] > pw.knots[k - 1])) {
      throw ValidationError(Fault::BadKnots, "knots must be strictly increasing");
    }
  }
}

void validate_critical_eq(const CriticalEq& eq) {
  if (!(eq.a >= 0.0) || !(eq.b >= 0.0)) {
    throw ValidationError(Fault::NonPositiveValue, "critical equation needs a >= 0 and b >= 0");
  }
  if (!(eq.p > 0.0) || !(eq.p < 2.0)) {
    throw ValidationError(Fault::BadArgument, "complexity exponent p must lie in (0,2)");
  }
  if (eq.a + eq.b <= 0.0) {
    throw ValidationError(Fault::NonPositiveValue, "critical equation needs a + b > 0");
  }
}

double FittedFn::operator()(double x) const {
  if (is_linear()) {
    const auto& theta = linear().theta;
    if (theta.size() != 1) {
      throw ValidationError(Fault::DimensionMismatch,
                            "scalar evaluation needs a 1-d linear fit");
    }
    return theta[0] * x;
  }
  const auto& pw = piecewise();
  const int K = static_cast<int>(pw.knots.size());
  if (x <= pw.knots[0]) return pw.values[0];
  if (x >= pw.knots[K - 1]) return pw.values[K - 1];
  // Binary search for the bracketing knot pair.
  int lo = 0, hi = K - 1;
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    (pw.knots[mid] <= x ? lo : hi) = mid;
  }
  const double t = (x - pw.knots[lo]) / (pw.knots[hi] - pw.knots[lo]);
  return pw.values[lo] + t * (pw.values[hi] - pw.values[lo]);
}

double FittedFn::operator()(const Vec& x) const {
  if (is_linear()) {
    const auto& theta = linear().theta;
    if (theta.size() != x.size()) {
      throw ValidationError(Fault::DimensionMismatch, "dimension mismatch in evaluation");
    }
    return theta.dot(x);
  }
  if (x.size() != 1) {
    throw ValidationError(Fault::DimensionMismatch,
                          "piecewise fits evaluate 1-d inputs only");
  }
  return (*this)(x[0]);
}

}  // namespace mixlearn
