#pragma once

#include <variant>
#include <vector>

#include "mixlearn/core.hpp"

namespace mixlearn::optim {

/// Euclidean ball {z : ||z - center|| <= radius}.
struct NormBall {
  Vec center;
  double radius = 1.0;
};

/// Halfspace {z : <normal, z> <= offset}, with a sparse normal so chain
/// constraints over thousands of variables project in O(nnz).
struct HalfSpace {
  std::vector<int> index;
  std::vector<double> coeff;
  double offset = 0.0;
  double norm_sq = 0.0;

  static HalfSpace from_dense(const Vec& normal, double offset);
  static HalfSpace from_sparse(std::vector<int> index, std::vector<double> coeff,
                               double offset);
};

/// Componentwise box {z : lower <= z <= upper}.
struct Box {
  Vec lower;
  Vec upper;
};

/// Equality constraint z[index] == value.
struct FixedCoordinate {
  int index = 0;
  double value = 0.0;
};

using Primitive = std::variant<NormBall, HalfSpace, Box, FixedCoordinate>;

struct ConstraintSet {
  std::vector<Primitive> sets;

  bool empty() const { return sets.empty(); }
  void add(Primitive p) { sets.push_back(std::move(p)); }

  /// Worst geometric violation of any primitive at z (0 when feasible).
  double max_violation(const Vec& z) const;
};

/// Projection onto a single primitive in closed form.
Vec project_primitive(const Vec& v, const Primitive& p);

Vec project_norm_ball(const Vec& v, const Vec& center, double radius);

/// Dykstra alternating projections onto the intersection of the
/// primitives. Throws NoConvergence when max_iter cycles do not reach a
/// point feasible within tol (in particular for empty intersections).
Vec project_intersection(const Vec& v, const ConstraintSet& c, double tol = 1e-8,
                         long max_iter = 200000);

struct SolveReport {
  Vec solution;
  double objective = 0.0;
  double kkt_residual = 0.0;
  long iterations = 0;
  bool converged = false;
};

struct SolveOptions {
  double tol = 1e-8;
  long max_iter = 200000;
  // When set, receives the objective value after every projected step.
  std::vector<double>* objective_trace = nullptr;
};

/// Minimize 0.5 z'Qz + c'z over the intersection of simple convex sets by
/// projected gradient with fixed step 1/lambda_max(Q) (power-iteration
/// estimate) and Dykstra projections. Throws NonPsdError on negative
/// curvature and NoConvergence when the budget runs out.
SolveReport solve_qp(const Mat& Q, const Vec& c, const ConstraintSet& constraints,
                     const SolveOptions& options);

SolveReport solve_qp(const Mat& Q, const Vec& c, const ConstraintSet& constraints,
                     double tol = 1e-8, long max_iter = 200000);

}  // namespace mixlearn::optim
