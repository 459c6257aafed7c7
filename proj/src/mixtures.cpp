#include "mixlearn/mixtures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mixlearn/running_stat.hpp"

namespace mixlearn::mixtures {

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

struct SimpsonState {
  const std::function<double(double)>* f = nullptr;
  long evals_left = 0;

  double eval(double x) {
    if (--evals_left < 0) {
      throw QuadratureFailure("adaptive quadrature exhausted its evaluation budget");
    }
    return (*f)(x);
  }
};

double simpson_rec(SimpsonState& state, double a, double fa, double m, double fm, double b,
                   double fb, double whole, double tol, int depth) {
  if (depth > 64) {
    throw QuadratureFailure("adaptive quadrature exceeded the recursion depth limit");
  }
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = state.eval(lm);
  const double frm = state.eval(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return simpson_rec(state, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth + 1) +
         simpson_rec(state, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth + 1);
}

double adaptive_simpson(SimpsonState& state, double a, double b, double tol) {
  const double m = 0.5 * (a + b);
  const double fa = state.eval(a);
  const double fm = state.eval(m);
  const double fb = state.eval(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(state, a, fa, m, fm, b, fb, whole, tol, 0);
}

double log_isotropic_pdf(const Vec& x, const Vec& mean, double scale) {
  const double d = static_cast<double>(x.size());
  const double z2 = (x - mean).squaredNorm() / (scale * scale);
  return -0.5 * z2 - d * std::log(scale) - 0.5 * d * std::log(2.0 * std::numbers::pi);
}

double log_sum_exp(const std::vector<double>& logs) {
  const double top = *std::max_element(logs.begin(), logs.end());
  if (!std::isfinite(top)) return top;
  double acc = 0.0;
  for (double v : logs) acc += std::exp(v - top);
  return top + std::log(acc);
}

}  // namespace

Dataset sample_covariates(const MixtureModel& m, long n, RngStream rng) {
  validate_mixture(m);
  if (n < 1) throw ValidationError(Fault::BadArgument, "n must be >= 1");
  Rng gen(rng);
  const int d = m.dim();
  Dataset data;
  data.x.resize(n, d);
  data.assignment = std::vector<int>(n);
  for (long i = 0; i < n; ++i) {
    const int j = gen.categorical(m.weights);
    const auto& comp = m.components[j];
    for (int k = 0; k < d; ++k) data.x(i, k) = comp.mean[k] + comp.scale * gen.normal();
    (*data.assignment)[i] = j;
  }
  return data;
}

Dataset sample_hyperplane_data(const HyperplaneMixture& h, long n, RngStream rng) {
  validate_hyperplane(h);
  if (n < 1) throw ValidationError(Fault::BadArgument, "n must be >= 1");
  Rng gen(rng);
  const int d = h.dim();
  Dataset data;
  data.x.resize(n, d);
  data.y.resize(n);
  data.assignment = std::vector<int>(n);
  for (long i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) data.x(i, k) = h.nu * gen.normal();
    const int j = gen.categorical(h.weights);
    data.y[i] = data.x.row(i).dot(h.regressors[j]) + h.zeta * gen.normal();
    (*data.assignment)[i] = j;
  }
  return data;
}

double component_pdf_1d(const GaussianComponent& c, double x) {
  const double z = (x - c.mean[0]) / c.scale;
  return std::exp(-0.5 * z * z) / (c.scale * std::sqrt(2.0 * std::numbers::pi));
}

double mixture_pdf_1d(const MixtureModel& m, double x) {
  double acc = 0.0;
  for (std::size_t j = 0; j < m.components.size(); ++j) {
    acc += m.weights[j] * component_pdf_1d(m.components[j], x);
  }
  return acc;
}

double tv_distance_1d(const std::function<double(double)>& p,
                      const std::function<double(double)>& q, double lo, double hi,
                      double abs_tol, long max_evals) {
  if (!(hi > lo)) throw ValidationError(Fault::BadArgument, "empty integration range");
  if (!(abs_tol > 0.0)) {
    throw ValidationError(Fault::NonPositiveValue, "abs_tol must be positive");
  }
  const std::function<double(double)> diff = [&](double x) {
    return 0.5 * std::abs(p(x) - q(x));
  };
  SimpsonState state{&diff, max_evals};
  const double value = adaptive_simpson(state, lo, hi, 0.5 * abs_tol);
  return std::clamp(value, 0.0, 1.0);
}

namespace {

// Integrates 0.5|p - q| with panel boundaries at the component means so
// narrow, well-separated bumps cannot be stepped over.
double tv_between_mixtures(const MixtureModel& p, const MixtureModel& q, double abs_tol) {
  std::vector<double> breaks;
  double sigma_max = 0.0;
  double mean_lo = std::numeric_limits<double>::infinity();
  double mean_hi = -std::numeric_limits<double>::infinity();
  for (const auto* mm : {&p, &q}) {
    for (const auto& c : mm->components) {
      breaks.push_back(c.mean[0]);
      sigma_max = std::max(sigma_max, c.scale);
      mean_lo = std::min(mean_lo, c.mean[0]);
      mean_hi = std::max(mean_hi, c.mean[0]);
    }
  }
  const double lo = mean_lo - 10.0 * sigma_max;
  const double hi = mean_hi + 10.0 * sigma_max;
  breaks.push_back(lo);
  breaks.push_back(hi);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  const std::function<double(double)> diff = [&](double x) {
    return 0.5 * std::abs(mixture_pdf_1d(p, x) - mixture_pdf_1d(q, x));
  };
  SimpsonState state{&diff, 4000000};
  const double panel_tol = 0.5 * abs_tol / static_cast<double>(breaks.size() - 1);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (breaks[i + 1] > breaks[i]) {
      total += adaptive_simpson(state, breaks[i], breaks[i + 1], panel_tol);
    }
  }
  return std::clamp(total, 0.0, 1.0);
}

MixtureModel as_mixture(const GaussianComponent& c) {
  MixtureModel m;
  m.components = {c};
  m.weights = {1.0};
  return m;
}

}  // namespace

double tv_distance_1d(const MixtureModel& p, const MixtureModel& q, double abs_tol) {
  validate_mixture(p);
  validate_mixture(q);
  if (p.dim() != 1 || q.dim() != 1) {
    throw ValidationError(Fault::DimensionMismatch, "quadrature TV needs 1-d densities");
  }
  return tv_between_mixtures(p, q, abs_tol);
}

double tv_distance_1d(const GaussianComponent& p, const GaussianComponent& q,
                      double abs_tol) {
  return tv_distance_1d(as_mixture(p), as_mixture(q), abs_tol);
}

double tv_equal_scale_gaussians(double mean1, double mean2, double scale) {
  if (!(scale > 0.0)) throw ValidationError(Fault::NonPositiveValue, "scale must be positive");
  return 2.0 * normal_cdf(std::abs(mean1 - mean2) / (2.0 * scale)) - 1.0;
}

namespace {

HeterogeneityReport gamma_monte_carlo(const MixtureModel& m, long budget, RngStream rng) {
  const int k = m.size();
  Rng gen(rng);
  std::vector<RunningStat> per_component(k);
  std::vector<RunningStat> per_pair(static_cast<std::size_t>(k) * k);
  std::vector<double> logs(k);
  Vec x(m.dim());
  for (long it = 0; it < budget; ++it) {
    const int j = gen.categorical(m.weights);
    const auto& comp = m.components[j];
    for (int c = 0; c < m.dim(); ++c) x[c] = comp.mean[c] + comp.scale * gen.normal();
    for (int a = 0; a < k; ++a) {
      logs[a] = log_isotropic_pdf(x, m.components[a].mean, m.components[a].scale);
    }
    const double log_mix = [&] {
      std::vector<double> weighted(k);
      for (int a = 0; a < k; ++a) weighted[a] = std::log(std::max(m.weights[a], 1e-300)) + logs[a];
      return log_sum_exp(weighted);
    }();
    for (int a = 0; a < k; ++a) {
      const double ratio = std::exp(logs[a] - log_mix);
      per_component[a].add(0.5 * std::abs(ratio - 1.0));
      for (int b = a + 1; b < k; ++b) {
        const double rb = std::exp(logs[b] - log_mix);
        per_pair[a * k + b].add(0.5 * std::abs(ratio - rb));
      }
    }
  }

  HeterogeneityReport report;
  report.method = TvMethod::monte_carlo;
  report.gamma_per_component.resize(k);
  int best = 0;
  for (int a = 0; a < k; ++a) {
    report.gamma_per_component[a] = per_component[a].mean();
    if (report.gamma_per_component[a] > report.gamma_per_component[best]) best = a;
  }
  report.gamma = report.gamma_per_component[best];
  double diam_se = 0.0;
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b) {
      const auto& stat = per_pair[a * k + b];
      if (stat.mean() >= report.pairwise_diameter) {
        report.pairwise_diameter = stat.mean();
        diam_se = stat.std_error();
      }
    }
  }
  report.std_error = std::max(per_component[best].std_error(), diam_se);
  return report;
}

}  // namespace

HeterogeneityReport gamma_radius(const MixtureModel& m, TvMethod method, long budget,
                                 RngStream rng, double abs_tol) {
  validate_mixture(m);
  const int k = m.size();

  HeterogeneityReport report;
  report.method = method;
  report.gamma_per_component = Vec::Zero(k);
  if (k == 1) return report;

  if (method == TvMethod::monte_carlo) {
    if (budget < 1) throw ValidationError(Fault::BadArgument, "budget must be >= 1");
    return gamma_monte_carlo(m, budget, rng);
  }

  if (m.dim() != 1) {
    throw ValidationError(Fault::InvalidMethod,
                          "quadrature and closed-form methods require d = 1");
  }

  if (method == TvMethod::closed_form_1d) {
    if (k != 2 || m.components[0].scale != m.components[1].scale) {
      throw ValidationError(Fault::InvalidMethod,
                            "closed form covers two equal-scale components only");
    }
    const double tv = tv_equal_scale_gaussians(m.components[0].mean[0],
                                               m.components[1].mean[0],
                                               m.components[0].scale);
    // D_j - mixture = (1 - a_j)(D_j - D_other) for two components.
    report.gamma_per_component[0] = m.weights[1] * tv;
    report.gamma_per_component[1] = m.weights[0] * tv;
    report.gamma = std::max(report.gamma_per_component[0], report.gamma_per_component[1]);
    report.pairwise_diameter = tv;
    return report;
  }

  for (int j = 0; j < k; ++j) {
    report.gamma_per_component[j] =
        tv_between_mixtures(as_mixture(m.components[j]), m, abs_tol);
  }
  report.gamma = report.gamma_per_component.maxCoeff();
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b) {
      report.pairwise_diameter =
          std::max(report.pairwise_diameter,
                   tv_between_mixtures(as_mixture(m.components[a]),
                                       as_mixture(m.components[b]), abs_tol));
    }
  }
  return report;
}

HeterogeneityReport gamma_radius(const HyperplaneMixture& h, long budget, RngStream rng) {
  validate_hyperplane(h);
  if (!(h.zeta > 0.0)) {
    throw ValidationError(Fault::ZeroNoise,
                          "joint TV sampling needs zeta > 0 (densities are singular otherwise)");
  }
  if (budget < 1) throw ValidationError(Fault::BadArgument, "budget must be >= 1");
  const int k = h.size();
  HeterogeneityReport report;
  report.method = TvMethod::monte_carlo;
  report.gamma_per_component = Vec::Zero(k);
  if (k == 1) return report;

  // The covariate factor of the joint density is shared by every
  // component, so density ratios reduce to label-conditional ratios.
  Rng gen(rng);
  std::vector<RunningStat> per_component(k);
  std::vector<RunningStat> per_pair(static_cast<std::size_t>(k) * k);
  std::vector<double> logs(k);
  Vec x(h.dim());
  for (long it = 0; it < budget; ++it) {
    for (int c = 0; c < h.dim(); ++c) x[c] = h.nu * gen.normal();
    const int j = gen.categorical(h.weights);
    const double y = x.dot(h.regressors[j]) + h.zeta * gen.normal();
    for (int a = 0; a < k; ++a) {
      const double z = (y - x.dot(h.regressors[a])) / h.zeta;
      logs[a] = -0.5 * z * z;
    }
    std::vector<double> weighted(k);
    for (int a = 0; a < k; ++a) weighted[a] = std::log(std::max(h.weights[a], 1e-300)) + logs[a];
    const double log_mix = log_sum_exp(weighted);
    for (int a = 0; a < k; ++a) {
      const double ratio = std::exp(logs[a] - log_mix);
      per_component[a].add(0.5 * std::abs(ratio - 1.0));
      for (int b = a + 1; b < k; ++b) {
        const double rb = std::exp(logs[b] - log_mix);
        per_pair[a * k + b].add(0.5 * std::abs(ratio - rb));
      }
    }
  }
  report.gamma_per_component.resize(k);
  int best = 0;
  for (int a = 0; a < k; ++a) {
    report.gamma_per_component[a] = per_component[a].mean();
    if (report.gamma_per_component[a] > report.gamma_per_component[best]) best = a;
  }
  report.gamma = report.gamma_per_component[best];
  double diam_se = 0.0;
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b) {
      const auto& stat = per_pair[a * k + b];
      if (stat.mean() >= report.pairwise_diameter) {
        report.pairwise_diameter = stat.mean();
        diam_se = stat.std_error();
      }
    }
  }
  report.std_error = std::max(per_component[best].std_error(), diam_se);
  return report;
}

double delta_w(const HyperplaneMixture& h) {
  validate_hyperplane(h);
  double worst = 0.0;
  for (std::size_t a = 0; a < h.regressors.size(); ++a) {
    for (std::size_t b = a + 1; b < h.regressors.size(); ++b) {
      worst = std::max(worst, (h.regressors[a] - h.regressors[b]).norm());
    }
  }
  return worst;
}

double pinsker_gamma_bound(const HyperplaneMixture& h) {
  validate_hyperplane(h);
  if (!(h.zeta > 0.0)) {
    throw ValidationError(Fault::ZeroNoise, "Pinsker bound needs zeta > 0");
  }
  return h.nu * delta_w(h) / (std::numbers::sqrt2 * h.zeta);
}

}  // namespace mixlearn::mixtures
