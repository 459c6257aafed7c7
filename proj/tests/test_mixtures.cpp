#include <doctest.h>

#include <cmath>

#include "mixlearn/mixtures.hpp"
#include "oracles.hpp"

using namespace mixlearn;
using namespace mixlearn::mixtures;

namespace {

MixtureModel gaussians_1d(std::initializer_list<double> means,
                          std::initializer_list<double> weights, double scale = 1.0) {
  MixtureModel m;
  for (double mu : means) m.components.push_back({Vec::Constant(1, mu), scale});
  m.weights = weights;
  return m;
}

}  // namespace

TEST_CASE("sample_covariates: single-component law of large numbers") {
  const auto m = gaussians_1d({0.0}, {1.0});
  const auto data = sample_covariates(m, 100000, derive_stream(5, 0));
  CHECK(std::abs(data.x.col(0).mean()) < 3.0 / std::sqrt(100000.0));
  for (int j : *data.assignment) CHECK(j == 0);
}

TEST_CASE("sample_covariates: degenerate weights pin the assignment") {
  const auto m = gaussians_1d({0.0, 50.0}, {1.0, 0.0});
  const auto data = sample_covariates(m, 2000, derive_stream(5, 1));
  for (int j : *data.assignment) CHECK(j == 0);
}

TEST_CASE("sample_covariates: component frequency matches the weights") {
  const auto m = gaussians_1d({0.0, 3.0}, {0.3, 0.7});
  const long n = 100000;
  const auto data = sample_covariates(m, n, derive_stream(5, 2));
  long zeros = 0;
  for (int j : *data.assignment) zeros += j == 0 ? 1 : 0;
  const double freq = static_cast<double>(zeros) / static_cast<double>(n);
  CHECK(std::abs(freq - 0.3) < 3.0 * std::sqrt(0.21 / static_cast<double>(n)));
}

TEST_CASE("sampling is bit-identical for identical streams") {
  const auto m = gaussians_1d({0.0, 3.0}, {0.5, 0.5});
  const auto a = sample_covariates(m, 500, derive_stream(9, 7));
  const auto b = sample_covariates(m, 500, derive_stream(9, 7));
  CHECK((a.x - b.x).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(*a.assignment == *b.assignment);
}

TEST_CASE("sample_hyperplane_data noiseless cases") {
  HyperplaneMixture h;
  h.nu = 1.0;
  h.zeta = 0.0;
  h.regressors = {Vec::Constant(1, 2.0)};
  h.weights = {1.0};
  const auto data = sample_hyperplane_data(h, 100, derive_stream(6, 0));
  for (long i = 0; i < data.n(); ++i) {
    CHECK(data.y[i] == doctest::Approx(2.0 * data.x(i, 0)).epsilon(1e-14));
  }

  HyperplaneMixture flip;
  flip.nu = 1.0;
  flip.zeta = 0.0;
  flip.regressors = {Vec::Constant(1, 1.0), Vec::Constant(1, -1.0)};
  flip.weights = {0.5, 0.5};
  const auto data2 = sample_hyperplane_data(flip, 200, derive_stream(6, 1));
  for (long i = 0; i < data2.n(); ++i) {
    CHECK(std::abs(std::abs(data2.y[i] / data2.x(i, 0)) - 1.0) < 1e-12);
  }
}

TEST_CASE("sample_hyperplane_data noise variance concentrates") {
  HyperplaneMixture h;
  h.nu = 1.0;
  h.zeta = 1.0;
  h.regressors = {Vec::Constant(1, 0.0)};
  h.weights = {1.0};
  const long n = 100000;
  const auto data = sample_hyperplane_data(h, n, derive_stream(6, 2));
  const double var = data.y.squaredNorm() / static_cast<double>(n);
  CHECK(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("tv_distance_1d: identical, moderate, and disjoint Gaussians") {
  const GaussianComponent a{Vec::Constant(1, 0.0), 1.0};
  const GaussianComponent b{Vec::Constant(1, 2.0), 1.0};
  const GaussianComponent far{Vec::Constant(1, 100.0), 1.0};

  CHECK(tv_distance_1d(a, a) == doctest::Approx(0.0).epsilon(1e-9));

  const double oracle = oracles::tv_gaussians_closed_form(0.0, 2.0, 1.0);
  CHECK(std::abs(tv_distance_1d(a, b, 1e-8) - oracle) < 1e-6);
  CHECK(tv_distance_1d(a, b, 1e-8) == doctest::Approx(0.682689).epsilon(1e-5));

  CHECK(std::abs(tv_distance_1d(a, far, 1e-8) - 1.0) < 1e-12);
}

TEST_CASE("tv symmetry and triangle inequality") {
  const GaussianComponent a{Vec::Constant(1, 0.0), 1.0};
  const GaussianComponent b{Vec::Constant(1, 1.3), 0.7};
  const GaussianComponent c{Vec::Constant(1, -0.4), 1.9};
  const double ab = tv_distance_1d(a, b, 1e-8);
  const double ba = tv_distance_1d(b, a, 1e-8);
  CHECK(std::abs(ab - ba) <= 2e-8);
  const double ac = tv_distance_1d(a, c, 1e-8);
  const double cb = tv_distance_1d(c, b, 1e-8);
  CHECK(ab <= ac + cb + 3e-8);
}

TEST_CASE("gamma_radius: single component has zero radius") {
  const auto m = gaussians_1d({0.7}, {1.0});
  const auto report = gamma_radius(m, TvMethod::quadrature_1d, 0, derive_stream(1, 1));
  CHECK(report.gamma == 0.0);
  CHECK(report.pairwise_diameter == 0.0);
}

TEST_CASE("gamma_radius: equal-weight pair has gamma = TV/2") {
  const auto m = gaussians_1d({0.0, 2.0}, {0.5, 0.5});
  const auto report = gamma_radius(m, TvMethod::quadrature_1d, 0, derive_stream(1, 2));
  const double tv = tv_distance_1d(m.components[0], m.components[1], 1e-8);
  CHECK(std::abs(report.gamma - 0.5 * tv) <= 2e-8);
  CHECK(report.gamma == doctest::Approx(0.341345).epsilon(3e-5));
  CHECK(std::abs(report.gamma_per_component[0] - report.gamma_per_component[1]) <= 2e-8);
  CHECK(report.gamma <= report.pairwise_diameter + 1e-12);

  const auto closed = gamma_radius(m, TvMethod::closed_form_1d, 0, derive_stream(1, 3));
  CHECK(std::abs(closed.gamma - report.gamma) <= 1e-7);
  CHECK(closed.std_error == 0.0);
}

TEST_CASE("gamma_radius: mixture convexity for uneven weights") {
  const auto m = gaussians_1d({0.0, 1.7}, {0.3, 0.7});
  const auto report = gamma_radius(m, TvMethod::quadrature_1d, 0, derive_stream(1, 4));
  const double tv = tv_distance_1d(m.components[0], m.components[1], 1e-8);
  // D_1 - mixture = a_2 (D_1 - D_2).
  CHECK(std::abs(report.gamma_per_component[0] - 0.7 * tv) <= 2e-8);
  CHECK(std::abs(report.gamma_per_component[1] - 0.3 * tv) <= 2e-8);
}

TEST_CASE("gamma_radius: Monte Carlo agrees with quadrature in 1-d") {
  const auto m = gaussians_1d({0.0, 2.0}, {0.4, 0.6});
  const auto quad = gamma_radius(m, TvMethod::quadrature_1d, 0, derive_stream(1, 5));
  const auto mc = gamma_radius(m, TvMethod::monte_carlo, 200000, derive_stream(1, 6));
  CHECK(mc.std_error > 0.0);
  CHECK(std::abs(mc.gamma - quad.gamma) <= 4.0 * mc.std_error + 1e-3);
  CHECK(mc.gamma <= mc.pairwise_diameter + 3.0 * mc.std_error);
}

TEST_CASE("gamma_radius: Monte Carlo handles multi-dimensional mixtures") {
  MixtureModel m;
  Vec mu0 = Vec::Zero(3), mu1 = Vec::Zero(3);
  mu1[0] = 2.0;
  m.components = {{mu0, 1.0}, {mu1, 1.0}};
  m.weights = {0.5, 0.5};
  const auto mc = gamma_radius(m, TvMethod::monte_carlo, 300000, derive_stream(1, 7));
  // The pair differs along one axis only, so the 1-d closed form applies.
  const double tv = oracles::tv_gaussians_closed_form(0.0, 2.0, 1.0);
  CHECK(std::abs(mc.gamma - 0.5 * tv) <= 4.0 * mc.std_error + 2e-3);
  CHECK_THROWS_AS(gamma_radius(m, TvMethod::quadrature_1d, 0, derive_stream(1, 8)),
                  ValidationError);
}

TEST_CASE("delta_w maxima") {
  HyperplaneMixture h;
  h.nu = 1.0;
  h.zeta = 1.0;
  h.regressors = {Vec::Constant(2, 0.0)};
  h.weights = {1.0};
  CHECK(delta_w(h) == 0.0);

  Vec a(2), b(2), c(2);
  a << 0, 0;
  b << 3, 4;
  c << 1, 1;
  h.regressors = {a, b, c};
  h.weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  CHECK(delta_w(h) == doctest::Approx(5.0).epsilon(1e-14));

  Vec p(2), q(2);
  p << 1, 0;
  q << -1, 0;
  h.regressors = {p, q};
  h.weights = {0.5, 0.5};
  CHECK(delta_w(h) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("pinsker_gamma_bound formula and zeta guard") {
  HyperplaneMixture h;
  h.nu = 1.0;
  h.zeta = 1.0;
  Vec a(1), b(1);
  a << std::sqrt(2.0) / 2.0;
  b << -std::sqrt(2.0) / 2.0;
  h.regressors = {a, b};
  h.weights = {0.5, 0.5};
  CHECK(pinsker_gamma_bound(h) == doctest::Approx(1.0).epsilon(1e-12));

  h.nu = 2.0;
  a << 0.5;
  b << -0.5;
  h.regressors = {a, b};
  CHECK(pinsker_gamma_bound(h) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

  h.zeta = 0.0;
  try {
    pinsker_gamma_bound(h);
    CHECK(false);
  } catch (const ValidationError& e) {
    CHECK(e.fault() == Fault::ZeroNoise);
  }

  HyperplaneMixture single;
  single.nu = 1.0;
  single.zeta = 1.0;
  single.regressors = {Vec::Constant(1, 3.0)};
  single.weights = {1.0};
  CHECK(pinsker_gamma_bound(single) == 0.0);
}

TEST_CASE("hyperplane joint gamma estimate sits below the Pinsker bound") {
  HyperplaneMixture h;
  h.nu = 1.0;
  h.zeta = 1.0;
  Vec a(2), b(2);
  a << 0.5, 0.0;
  b << -0.5, 0.0;
  h.regressors = {a, b};
  h.weights = {0.5, 0.5};
  const auto report = gamma_radius(h, 200000, derive_stream(1, 9));
  CHECK(report.gamma > 0.0);
  CHECK(report.gamma <= pinsker_gamma_bound(h) + 3.0 * report.std_error);
  CHECK(report.gamma <= report.pairwise_diameter + 3.0 * report.std_error);
}

TEST_CASE("empirical conditional KL matches the Gaussian formula") {
  // E_x <x, w_j - w_j'>^2 / (2 zeta^2) = nu^2 ||w_j - w_j'||^2 / (2 zeta^2).
  HyperplaneMixture h;
  h.nu = 1.3;
  h.zeta = 0.9;
  Vec a(3), b(3);
  a << 0.4, -0.2, 0.1;
  b << -0.3, 0.5, 0.0;
  h.regressors = {a, b};
  h.weights = {0.5, 0.5};
  Rng gen(derive_stream(1, 10));
  const long n = 10000;
  double acc = 0.0, acc_sq = 0.0;
  for (long i = 0; i < n; ++i) {
    const Vec x = h.nu * gen.normal_vector(3);
    const double kl = std::pow(x.dot(a - b), 2) / (2.0 * h.zeta * h.zeta);
    acc += kl;
    acc_sq += kl * kl;
  }
  const double mean = acc / static_cast<double>(n);
  const double se = std::sqrt((acc_sq / n - mean * mean) / static_cast<double>(n));
  const double expected = h.nu * h.nu * (a - b).squaredNorm() / (2.0 * h.zeta * h.zeta);
  CHECK(std::abs(mean - expected) <= 3.0 * se);
}

TEST_CASE("closed form method rejects unsupported configurations") {
  const auto m = gaussians_1d({0.0, 1.0, 2.0}, {0.3, 0.3, 0.4});
  CHECK_THROWS_AS(gamma_radius(m, TvMethod::closed_form_1d, 0, derive_stream(1, 11)),
                  ValidationError);
}
