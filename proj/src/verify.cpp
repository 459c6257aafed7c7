#include "mixlearn/verify.hpp"

#include <algorithm>
#include <cmath>

#include "mixlearn/mixtures.hpp"
#include "mixlearn/running_stat.hpp"

namespace mixlearn::verify {

namespace {

double binomial_se(double p, long n) {
  return std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(n));
}

void check_replicates(long replicates) {
  if (replicates < 1) throw ValidationError(Fault::BadArgument, "replicates must be >= 1");
}

}  // namespace

double laplace_scale_for(double v2, double alpha) {
  if (!(v2 > 0.0) || !(alpha > 0.0)) {
    throw ValidationError(Fault::NonPositiveValue, "v2 and alpha must be positive");
  }
  // Laplace(b) has MGF 1/(1 - b^2 t^2) <= exp(2 b^2 t^2) valid for
  // b^2 t^2 <= 1/2, i.e. a (4b^2, sqrt(2) b)-sub-exponential coordinate.
  // Matching both parameters gives b = min(sqrt(v2)/2, alpha/sqrt(2)).
  return std::min(std::sqrt(v2) / 2.0, alpha / std::sqrt(2.0));
}

TailCheckReport check_norm_tail(double v2, double alpha, int d, const Vec& t_grid,
                                long replicates, RngStream rng) {
  if (d < 1) throw ValidationError(Fault::BadArgument, "d must be >= 1");
  if (t_grid.size() < 1) throw ValidationError(Fault::Empty, "t_grid must be nonempty");
  check_replicates(replicates);
  const double scale = laplace_scale_for(v2, alpha);
  Rng gen(rng);
  std::vector<long> exceed(t_grid.size(), 0);
  for (long rep = 0; rep < replicates; ++rep) {
    double sq = 0.0;
    for (int k = 0; k < d; ++k) {
      const double z = gen.laplace(scale);
      sq += z * z;
    }
    const double norm = std::sqrt(sq);
    for (long g = 0; g < t_grid.size(); ++g) {
      if (norm >= t_grid[g]) ++exceed[g];
    }
  }

  TailCheckReport report;
  report.grid = t_grid;
  report.empirical.resize(t_grid.size());
  report.bound.resize(t_grid.size());
  report.replicates = replicates;
  const double dd = static_cast<double>(d);
  for (long g = 0; g < t_grid.size(); ++g) {
    const double t = t_grid[g];
    report.empirical[g] =
        static_cast<double>(exceed[g]) / static_cast<double>(replicates);
    report.bound[g] =
        std::exp(-0.25 * std::min(t * t / (2.0 * v2 * dd), t / (alpha * dd)));
    const double slack = 3.0 * binomial_se(report.empirical[g], replicates);
    if (report.empirical[g] > report.bound[g] + slack) ++report.violations;
  }
  return report;
}

TailCheckReport check_bias_mgf(const HyperplaneMixture& h, long n, int u_samples,
                               long replicates, RngStream rng) {
  validate_hyperplane(h);
  if (n < 1) throw ValidationError(Fault::BadArgument, "n must be >= 1");
  if (u_samples < 1) throw ValidationError(Fault::BadArgument, "u_samples must be >= 1");
  check_replicates(replicates);
  const double dw = mixtures::delta_w(h);
  if (dw == 0.0) {
    throw ValidationError(Fault::DegenerateMixture,
                          "bias MGF check needs distinct regressors (delta_w > 0)");
  }
  const int d = h.dim();
  Vec w_star = Vec::Zero(d);
  for (int j = 0; j < h.size(); ++j) w_star += h.weights[j] * h.regressors[j];

  const double cap = 1.0 / (4.0 * h.nu * dw);
  Rng gen(rng);
  // Directions drawn uniformly in the admissible ball.
  Mat directions(d, u_samples);
  for (int s = 0; s < u_samples; ++s) {
    Vec dir = gen.normal_vector(d);
    const double norm = dir.norm();
    if (norm > 0.0) dir /= norm;
    const double radius = cap * std::pow(gen.uniform01(), 1.0 / static_cast<double>(d));
    directions.col(s) = radius * dir;
  }

  std::vector<RunningStat> stats(u_samples);
  Vec x(d), z(d), wbar(d), centered(d);
  for (long rep = 0; rep < replicates; ++rep) {
    z.setZero();
    wbar.setZero();
    for (long i = 0; i < n; ++i) {
      const int j = gen.categorical(h.weights);
      const Vec wdiff = h.regressors[j] - w_star;
      for (int k = 0; k < d; ++k) x[k] = h.nu * gen.normal();
      z += x * (x.dot(wdiff) / h.nu);
      wbar += wdiff;
    }
    wbar /= static_cast<double>(n);
    centered = z - static_cast<double>(n) * h.nu * wbar;
    for (int s = 0; s < u_samples; ++s) {
      stats[s].add(std::exp(std::min(700.0, directions.col(s).dot(centered))));
    }
  }

  TailCheckReport report;
  report.grid.resize(u_samples);
  report.empirical.resize(u_samples);
  report.bound.resize(u_samples);
  report.replicates = replicates;
  for (int s = 0; s < u_samples; ++s) {
    const double unorm_sq = directions.col(s).squaredNorm();
    report.grid[s] = std::sqrt(unorm_sq);
    report.empirical[s] = stats[s].mean();
    report.bound[s] =
        std::exp(2.0 * static_cast<double>(n) * h.nu * h.nu * dw * dw * unorm_sq);
    if (report.empirical[s] > report.bound[s] + 3.0 * stats[s].std_error()) {
      ++report.violations;
    }
  }
  return report;
}

TailCheckReport check_wbar(const HyperplaneMixture& h, long n, double fail_prob,
                           long replicates, RngStream rng) {
  validate_hyperplane(h);
  if (n < 1) throw ValidationError(Fault::BadArgument, "n must be >= 1");
  if (!(fail_prob > 0.0) || !(fail_prob < 1.0)) {
    throw ValidationError(Fault::BadArgument, "fail_prob must lie in (0,1)");
  }
  check_replicates(replicates);
  const double dw = mixtures::delta_w(h);
  const int d = h.dim();
  Vec w_star = Vec::Zero(d);
  for (int j = 0; j < h.size(); ++j) w_star += h.weights[j] * h.regressors[j];

  const double bound = (static_cast<double>(d) * dw * dw / (2.0 * static_cast<double>(n))) *
                       std::log(8.0 / fail_prob);
  Rng gen(rng);
  long exceed = 0;
  Vec wbar(d);
  for (long rep = 0; rep < replicates; ++rep) {
    wbar.setZero();
    for (long i = 0; i < n; ++i) {
      const int j = gen.categorical(h.weights);
      wbar += h.regressors[j] - w_star;
    }
    wbar /= static_cast<double>(n);
    if (wbar.squaredNorm() > bound) ++exceed;
  }

  TailCheckReport report;
  report.grid = Vec::Constant(1, bound);
  report.empirical =
      Vec::Constant(1, static_cast<double>(exceed) / static_cast<double>(replicates));
  report.bound = Vec::Constant(1, fail_prob / 8.0);
  report.replicates = replicates;
  const double slack = 3.0 * binomial_se(report.empirical[0], replicates);
  report.violations = report.empirical[0] > report.bound[0] + slack ? 1 : 0;
  return report;
}

}  // namespace mixlearn::verify
