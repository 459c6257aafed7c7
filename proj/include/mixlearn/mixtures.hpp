#pragma once

#include <functional>

#include "mixlearn/core.hpp"
#include "mixlearn/rng.hpp"

namespace mixlearn::mixtures {

enum class TvMethod { closed_form_1d, quadrature_1d, monte_carlo };

struct HeterogeneityReport {
  Vec gamma_per_component;  // gamma_j = TV(D_j, mixture)
  double gamma = 0.0;       // max_j gamma_j
  double pairwise_diameter = 0.0;
  TvMethod method = TvMethod::quadrature_1d;
  double std_error = 0.0;  // 0 for deterministic methods
};

/// Draws n covariate rows; assignment records the sampled component.
Dataset sample_covariates(const MixtureModel& m, long n, RngStream rng);

/// Draws (x, y) pairs from the hyperplane mixture with Gaussian noise.
Dataset sample_hyperplane_data(const HyperplaneMixture& h, long n, RngStream rng);

double component_pdf_1d(const GaussianComponent& c, double x);
double mixture_pdf_1d(const MixtureModel& m, double x);

/// Half the L1 distance between two 1-d densities on [lo, hi] by
/// adaptive Simpson quadrature. Throws QuadratureFailure when the
/// evaluation budget cannot reach abs_tol.
double tv_distance_1d(const std::function<double(double)>& p,
                      const std::function<double(double)>& q, double lo, double hi,
                      double abs_tol, long max_evals = 4000000);

double tv_distance_1d(const MixtureModel& p, const MixtureModel& q, double abs_tol = 1e-8);
double tv_distance_1d(const GaussianComponent& p, const GaussianComponent& q,
                      double abs_tol = 1e-8);

/// Closed-form TV between equal-scale Gaussians: 2*Phi(|mu1-mu2|/(2*scale)) - 1.
double tv_equal_scale_gaussians(double mean1, double mean2, double scale);

/// TV radius gamma_j = TV(D_j, mixture) for every component, plus the
/// pairwise diameter. Quadrature and closed form need d = 1; Monte Carlo
/// (exact density ratios under mixture sampling) works in any dimension.
HeterogeneityReport gamma_radius(const MixtureModel& m, TvMethod method, long budget,
                                 RngStream rng, double abs_tol = 1e-8);

/// Monte Carlo TV radius of the joint (x, y) distributions of a
/// hyperplane mixture with Gaussian noise (zeta > 0 required).
HeterogeneityReport gamma_radius(const HyperplaneMixture& h, long budget, RngStream rng);

/// Maximum pairwise distance between regressors.
double delta_w(const HyperplaneMixture& h);

/// Pinsker/KL upper bound on the TV radius: nu * delta_w / (sqrt(2) * zeta).
double pinsker_gamma_bound(const HyperplaneMixture& h);

}  // namespace mixlearn::mixtures
