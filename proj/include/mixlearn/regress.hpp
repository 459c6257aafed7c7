#pragma once

#include <functional>

#include "mixlearn/core.hpp"

namespace mixlearn::regress {

struct HyperplaneFit {
  Vec w_hat;
  double gram_min_eig = 0.0;  // smallest eigenvalue of (1/n) X'X
  long n = 0;
};

struct RiskReport {
  double excess_risk = 0.0;
  Vec w_star;
  double population_floor = 0.0;  // F(w*) mixture floor
};

/// Ordinary least squares; minimum-norm solution when rank-deficient.
FittedFn fit_linear_ls(const Dataset& data);

/// Least-squares fit over L-Lipschitz functions on [0,1] anchored at
/// f(0)=0. Knots are {0} plus the distinct design points; duplicated
/// design points share one knot with summed loss terms. tol bounds the
/// KKT residual, measured as the infinity-norm displacement of one
/// projected-gradient step at the solution.
FittedFn fit_lipschitz(const Dataset& data, double l, double tol = 1e-7);

/// Least-squares fit over convex 1-Lipschitz functions on [0,1] with
/// f(0)=0 (nondecreasing successive slopes capped at |s| <= 1).
FittedFn fit_convex_lipschitz(const Dataset& data, double tol = 1e-7);

/// Mean squared difference between the fit and a reference function at
/// the design points, (1/n) sum (fit(x_i) - f*(x_i))^2.
double insample_error(const FittedFn& fit, const std::function<double(double)>& f_star,
                      const Vec& x);
double insample_error(const FittedFn& fit,
                      const std::function<double(const Vec&)>& f_star, const Mat& x);

/// Global ERM for the mixture of hyperplanes (a plain least-squares
/// solve), with the Gram conditioning diagnostic.
HyperplaneFit fit_hyperplane_erm(const Dataset& data);

/// Excess population risk (nu^2/2)||w_hat - w*||^2 against the weighted
/// regressor mean w* = sum_j a_j w*_j, plus the mixture risk floor.
RiskReport excess_risk_hyperplane(const Vec& w_hat, const HyperplaneMixture& h);

}  // namespace mixlearn::regress
