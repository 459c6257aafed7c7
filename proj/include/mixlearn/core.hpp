#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace mixlearn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Tolerance for "weights sum to one" checks throughout the library.
inline constexpr double kWeightSumTol = 1e-12;

enum class Fault {
  WeightSum,
  DimensionMismatch,
  Empty,
  ZeroNoise,
  DegenerateMixture,
  ZeroBn,
  NonPositiveValue,
  SampleTooSmall,
  InvalidMethod,
  BadKnots,
  BadArgument,
};

/// Invalid input detected before any numerical work starts.
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(Fault fault, const std::string& what)
      : std::invalid_argument(what), fault_(fault) {}
  Fault fault() const noexcept { return fault_; }

 private:
  Fault fault_;
};

/// An iterative routine exhausted its budget without meeting its tolerance.
class NoConvergence : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// solve_qp detected a direction of negative curvature in Q.
class NonPsdError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Adaptive quadrature could not reach the requested tolerance in budget.
class QuadratureFailure : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Isotropic Gaussian N(mean, scale^2 I).
struct GaussianComponent {
  Vec mean;
  double scale = 1.0;

  int dim() const { return static_cast<int>(mean.size()); }
};

/// Weighted mixture of isotropic Gaussian covariate components.
struct MixtureModel {
  std::vector<GaussianComponent> components;
  std::vector<double> weights;

  int size() const { return static_cast<int>(components.size()); }
  int dim() const { return components.empty() ? 0 : components.front().dim(); }
};

/// Mixture of hyperplanes: x ~ N(0, nu^2 I_d), label from one of m
/// regressors picked with the mixing weights, plus N(0, zeta^2) noise.
struct HyperplaneMixture {
  double nu = 1.0;
  std::vector<Vec> regressors;
  std::vector<double> weights;
  double zeta = 0.0;

  int size() const { return static_cast<int>(regressors.size()); }
  int dim() const { return regressors.empty() ? 0 : static_cast<int>(regressors.front().size()); }
};

/// Covariate matrix plus labels; assignment records which component
/// generated each row when the sampler knows it.
struct Dataset {
  Mat x;
  Vec y;  // size 0 means labels absent
  std::optional<std::vector<int>> assignment;

  long n() const { return x.rows(); }
  int dim() const { return static_cast<int>(x.cols()); }
  bool has_labels() const { return y.size() > 0; }
};

struct LinearFn {
  Vec theta;
};

/// Piecewise-linear function on [0,1] anchored at f(0)=0: strictly
/// increasing knots starting at 0, one value per knot.
struct PiecewiseLinearFn {
  Vec knots;
  Vec values;
};

struct FittedFn {
  std::variant<LinearFn, PiecewiseLinearFn> fn;

  bool is_linear() const { return std::holds_alternative<LinearFn>(fn); }
  const LinearFn& linear() const { return std::get<LinearFn>(fn); }
  const PiecewiseLinearFn& piecewise() const { return std::get<PiecewiseLinearFn>(fn); }

  /// Evaluate at a scalar point. Piecewise fits interpolate linearly
  /// between knots and extend as constants outside the knot range.
  double operator()(double x) const;
  double operator()(const Vec& x) const;
};

/// The common shape a*delta^p + b*delta = delta^2 of all critical equations.
struct CriticalEq {
  double a = 0.0;  // complexity coefficient
  double p = 1.0;  // complexity exponent, in (0,2)
  double b = 0.0;  // heterogeneity coefficient (2*zeta*gamma)
};

void validate_mixture(const MixtureModel& m);
void validate_hyperplane(const HyperplaneMixture& h);
void validate_dataset(const Dataset& data, int num_components = -1);
void validate_fitted(const FittedFn& fn);
void validate_critical_eq(const CriticalEq& eq);

}  // namespace mixlearn
