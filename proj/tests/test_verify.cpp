#include <doctest.h>

#include <cmath>

#include "mixlearn/verify.hpp"

using namespace mixlearn;
using namespace mixlearn::verify;

namespace {

HyperplaneMixture symmetric_pair(int d, double half_gap, double nu = 1.0, double zeta = 1.0) {
  HyperplaneMixture h;
  h.nu = nu;
  h.zeta = zeta;
  Vec plus = Vec::Zero(d), minus = Vec::Zero(d);
  plus[0] = half_gap;
  minus[0] = -half_gap;
  h.regressors = {plus, minus};
  h.weights = {0.5, 0.5};
  return h;
}

}  // namespace

TEST_CASE("laplace_scale_for keeps the coordinate MGF inside the envelope") {
  const double b = laplace_scale_for(1.0, 1.0);
  CHECK(b == doctest::Approx(0.5));
  // MGF of Laplace(b) is 1/(1 - b^2 t^2); envelope exp(t^2 v2 / 2) on |t| <= 1/alpha.
  for (double t : {0.1, 0.4, 0.7, 0.99}) {
    const double mgf = 1.0 / (1.0 - b * b * t * t);
    CHECK(mgf <= std::exp(0.5 * t * t) + 1e-12);
  }
}

TEST_CASE("check_norm_tail trivial grid points cannot violate") {
  Vec grid(3);
  grid << 0.0, 0.1, 0.2;  // bounds here are ~1
  const auto report = check_norm_tail(1.0, 1.0, 1, grid, 2000, derive_stream(41, 0));
  CHECK(report.violations == 0);
  CHECK(report.empirical[0] == 1.0);
  CHECK(report.bound[0] == 1.0);
}

TEST_CASE("check_norm_tail matches the exact Laplace tail at d = 1") {
  Vec grid(1);
  grid << 4.0;
  const long reps = 200000;
  const auto report = check_norm_tail(1.0, 1.0, 1, grid, reps, derive_stream(41, 1));
  // bound = exp(-min(16/2, 4)/4) = exp(-1)
  CHECK(report.bound[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  // exact tail of |Laplace(1/2)| at 4 is exp(-8)
  const double exact = std::exp(-4.0 / laplace_scale_for(1.0, 1.0));
  CHECK(std::abs(report.empirical[0] - exact) < 4.0 * std::sqrt(exact / reps) + 1e-4);
  CHECK(report.empirical[0] < report.bound[0]);
  CHECK(report.violations == 0);
}

TEST_CASE("check_norm_tail stays below the bound across a grid and dimensions") {
  Vec grid(7);
  grid << 0.5, 1.0, 2.0, 4.0, 8.0, 12.0, 16.0;
  for (int d : {1, 4}) {
    const auto report = check_norm_tail(1.0, 1.0, d, grid, 50000, derive_stream(41, 2 + d));
    CHECK(report.violations == 0);
  }
}

TEST_CASE("check_bias_mgf rejects degenerate mixtures") {
  HyperplaneMixture h = symmetric_pair(1, 0.0);
  try {
    check_bias_mgf(h, 10, 4, 100, derive_stream(41, 5));
    CHECK(false);
  } catch (const ValidationError& e) {
    CHECK(e.fault() == Fault::DegenerateMixture);
  }
}

TEST_CASE("check_bias_mgf finds no violations on symmetric pairs") {
  const auto h = symmetric_pair(1, 1.0);
  const auto report = check_bias_mgf(h, 10, 8, 30000, derive_stream(41, 6));
  CHECK(report.violations == 0);
  CHECK(report.replicates == 30000);
  for (long i = 0; i < report.grid.size(); ++i) {
    CHECK(report.grid[i] <= 1.0 / (4.0 * 1.0 * 2.0) + 1e-12);  // cap 1/(4 nu dw)
  }

  const auto h4 = symmetric_pair(4, 1.0);
  const auto report4 = check_bias_mgf(h4, 10, 8, 30000, derive_stream(41, 7));
  CHECK(report4.violations == 0);
}

TEST_CASE("check_wbar degenerate single component never exceeds") {
  HyperplaneMixture h;
  h.nu = 1.0;
  h.zeta = 1.0;
  h.regressors = {Vec::Constant(1, 2.0)};
  h.weights = {1.0};
  const auto report = check_wbar(h, 50, 0.08, 5000, derive_stream(41, 8));
  CHECK(report.empirical[0] == 0.0);
  CHECK(report.violations == 0);
}

TEST_CASE("check_wbar symmetric pair obeys the lemma bound") {
  const auto h = symmetric_pair(1, 1.0);  // delta_w = 2
  const auto report = check_wbar(h, 100, 0.08, 50000, derive_stream(41, 9));
  // bound on ||wbar||^2: (1*4/200) log(100) ~ 0.0921
  CHECK(report.grid[0] == doctest::Approx((4.0 / 200.0) * std::log(100.0)).epsilon(1e-12));
  CHECK(report.empirical[0] <= 0.01 + 3.0 * std::sqrt(0.01 / 50000.0) + 1e-3);
  CHECK(report.violations == 0);
}

TEST_CASE("check_wbar bound scales as 1/n") {
  const auto h = symmetric_pair(1, 1.0);
  const auto r1 = check_wbar(h, 100, 0.08, 100, derive_stream(41, 10));
  const auto r2 = check_wbar(h, 400, 0.08, 100, derive_stream(41, 11));
  CHECK(r2.grid[0] == doctest::Approx(r1.grid[0] / 4.0).epsilon(1e-12));
}

TEST_CASE("verify reports are deterministic for identical seeds") {
  const auto h = symmetric_pair(2, 0.7);
  const auto a = check_bias_mgf(h, 10, 4, 2000, derive_stream(41, 12));
  const auto b = check_bias_mgf(h, 10, 4, 2000, derive_stream(41, 12));
  CHECK((a.empirical - b.empirical).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((a.grid - b.grid).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(a.violations == b.violations);
}
