#include "mixlearn/regress.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace mixlearn::regress {

namespace {

// Knot-aggregated least-squares data: {0} plus the distinct design
// points in ascending order; duplicated points pool their loss terms.
struct KnotProblem {
  Vec knots;   // K entries, knots[0] == 0
  Vec counts;  // points per knot
  Vec ysum;    // label sum per knot
  Vec gaps;    // K-1 positive gaps
  long n = 0;
  double y_sq = 0.0;
};

KnotProblem build_knots(const Dataset& data) {
  validate_dataset(data);
  if (!data.has_labels()) {
    throw ValidationError(Fault::Empty, "shape-constrained fits need labels");
  }
  if (data.dim() != 1) {
    throw ValidationError(Fault::DimensionMismatch, "shape-constrained fits need 1-d covariates");
  }
  const long n = data.n();
  std::vector<long> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](long a, long b) { return data.x(a, 0) < data.x(b, 0); });

  std::vector<double> knots{0.0}, counts{0.0}, ysum{0.0};
  for (long idx : order) {
    const double xv = data.x(idx, 0);
    if (xv < 0.0 || xv > 1.0) {
      throw ValidationError(Fault::BadArgument, "design points must lie in [0,1]");
    }
    if (xv > knots.back()) {
      knots.push_back(xv);
      counts.push_back(0.0);
      ysum.push_back(0.0);
    }
    counts.back() += 1.0;
    ysum.back() += data.y[idx];
  }

  KnotProblem kp;
  const long k = static_cast<long>(knots.size());
  kp.knots = Eigen::Map<Vec>(knots.data(), k);
  kp.counts = Eigen::Map<Vec>(counts.data(), k);
  kp.ysum = Eigen::Map<Vec>(ysum.data(), k);
  kp.gaps.resize(k - 1);
  for (long j = 0; j + 1 < k; ++j) kp.gaps[j] = knots[j + 1] - knots[j];
  kp.n = n;
  kp.y_sq = data.y.squaredNorm();
  return kp;
}

// Unweighted pool-adjacent-violators for a nondecreasing fit.
void isotonic_increasing_inplace(Vec& v) {
  const long n = v.size();
  std::vector<double> block_sum;
  std::vector<long> block_cnt;
  block_sum.reserve(n);
  block_cnt.reserve(n);
  for (long i = 0; i < n; ++i) {
    block_sum.push_back(v[i]);
    block_cnt.push_back(1);
    while (block_sum.size() >= 2) {
      const std::size_t k = block_sum.size();
      if (block_sum[k - 2] * static_cast<double>(block_cnt[k - 1]) >
          block_sum[k - 1] * static_cast<double>(block_cnt[k - 2])) {
        block_sum[k - 2] += block_sum[k - 1];
        block_cnt[k - 2] += block_cnt[k - 1];
        block_sum.pop_back();
        block_cnt.pop_back();
      } else {
        break;
      }
    }
  }
  long pos = 0;
  for (std::size_t b = 0; b < block_sum.size(); ++b) {
    const double mean = block_sum[b] / static_cast<double>(block_cnt[b]);
    for (long r = 0; r < block_cnt[b]; ++r) v[pos++] = mean;
  }
}

enum class ShapeMode { lipschitz, convex };

// Shared slope-space machinery. Values at knots 1..K-1 are cumulative
// sums theta_j = sum_{i<=j} gap_i * s_i with the f(0)=0 anchor built in,
// so the class constraints become a box on s (Lipschitz) or an isotonic
// cone intersected with a box (convex), both with exact projections.
struct SlopeProblem {
  const KnotProblem& kp;
  ShapeMode mode;
  double cap;

  long dim() const { return kp.gaps.size(); }

  void values_from_slopes(const Vec& s, Vec& theta) const {
    double acc = 0.0;
    for (long j = 0; j < s.size(); ++j) {
      acc += kp.gaps[j] * s[j];
      theta[j] = acc;
    }
  }

  double objective(const Vec& theta) const {
    double acc = kp.y_sq;
    for (long j = 0; j < theta.size(); ++j) {
      acc += kp.counts[j + 1] * theta[j] * theta[j] - 2.0 * kp.ysum[j + 1] * theta[j];
    }
    return acc / static_cast<double>(kp.n);
  }

  void gradient(const Vec& theta, Vec& grad) const {
    const double scale = 2.0 / static_cast<double>(kp.n);
    double suffix = 0.0;
    for (long j = theta.size() - 1; j >= 0; --j) {
      suffix += scale * (kp.counts[j + 1] * theta[j] - kp.ysum[j + 1]);
      grad[j] = kp.gaps[j] * suffix;
    }
  }

  void project(Vec& s) const {
    if (mode == ShapeMode::convex) isotonic_increasing_inplace(s);
    for (long j = 0; j < s.size(); ++j) s[j] = std::clamp(s[j], -cap, cap);
  }

  // Power iteration on the Hessian H = (2/n) G' D G in operator form:
  // the gradient is affine in s, so H v = grad(theta(v)) - grad(theta(0)).
  double lambda_max() const {
    const long m = dim();
    Vec v(m), theta(m), out(m), zero_grad(m);
    for (long i = 0; i < m; ++i) v[i] = 1.0 + 0.01 * std::sin(1.7 * static_cast<double>(i + 1));
    v.normalize();
    values_from_slopes(Vec::Zero(m), theta);
    gradient(theta, zero_grad);
    double lambda = 0.0;
    for (int it = 0; it < 200; ++it) {
      values_from_slopes(v, theta);
      gradient(theta, out);
      out -= zero_grad;
      const double norm = out.norm();
      if (norm <= 1e-300) return 0.0;
      const double rayleigh = v.dot(out);
      v = out / norm;
      if (it > 4 && std::abs(rayleigh - lambda) <= 1e-12 * std::max(1.0, rayleigh)) {
        return rayleigh;
      }
      lambda = rayleigh;
    }
    return lambda;
  }
};

Vec solve_slopes(const SlopeProblem& problem, double tol, long max_iter) {
  const long m = problem.dim();
  Vec s = Vec::Zero(m);
  if (m == 0) return s;
  const double lambda = problem.lambda_max();
  if (lambda <= 0.0) return s;  // no data on positive knots: zero fit is optimal
  const double step = 1.0 / (lambda * 1.01);

  Vec momentum = s, theta(m), grad(m), candidate(m);
  double t_acc = 1.0;
  problem.values_from_slopes(s, theta);
  double obj_prev = problem.objective(theta);

  const auto pg_step = [&](const Vec& from, Vec& out) {
    problem.values_from_slopes(from, theta);
    problem.gradient(theta, grad);
    out = from - step * grad;
    problem.project(out);
  };

  for (long it = 0; it < max_iter; ++it) {
    pg_step(momentum, candidate);
    problem.values_from_slopes(candidate, theta);
    double obj_new = problem.objective(theta);
    if (obj_new > obj_prev + 1e-12 * std::max(1.0, std::abs(obj_prev))) {
      // Momentum overshoot: restart from the last iterate (plain
      // projected-gradient step, guaranteed non-increasing). The relative
      // slack keeps rounding noise near the optimum from disabling the
      // acceleration.
      t_acc = 1.0;
      pg_step(s, candidate);
      problem.values_from_slopes(candidate, theta);
      obj_new = problem.objective(theta);
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_acc * t_acc));
    momentum = candidate + ((t_acc - 1.0) / t_next) * (candidate - s);
    s = candidate;
    t_acc = t_next;
    obj_prev = obj_new;

    if ((it & 7) == 7 || it + 1 == max_iter) {
      // Stationarity certificate: the displacement of one full projected
      // gradient step. Unlike the gradient-mapping norm this does not get
      // more lenient as 1/lambda_max grows with the knot count.
      pg_step(s, candidate);
      const double residual = (s - candidate).lpNorm<Eigen::Infinity>();
      if (residual <= tol) return s;
    }
  }
  throw NoConvergence("shape-constrained fit did not reach the KKT tolerance");
}

FittedFn fit_shape_constrained(const Dataset& data, ShapeMode mode, double cap, double tol) {
  if (!(tol > 0.0)) throw ValidationError(Fault::NonPositiveValue, "tol must be positive");
  const KnotProblem kp = build_knots(data);
  const SlopeProblem problem{kp, mode, cap};
  const Vec s = solve_slopes(problem, tol, 500000);
  const long k = kp.knots.size();
  Vec values = Vec::Zero(k);
  double acc = 0.0;
  for (long j = 0; j + 1 < k; ++j) {
    acc += kp.gaps[j] * s[j];
    values[j + 1] = acc;
  }
  return FittedFn{PiecewiseLinearFn{kp.knots, values}};
}

}  // namespace

FittedFn fit_linear_ls(const Dataset& data) {
  validate_dataset(data);
  if (!data.has_labels()) {
    throw ValidationError(Fault::Empty, "least squares needs labels");
  }
  Vec theta = data.x.completeOrthogonalDecomposition().solve(data.y);
  return FittedFn{LinearFn{std::move(theta)}};
}

FittedFn fit_lipschitz(const Dataset& data, double l, double tol) {
  if (!(l > 0.0)) {
    throw ValidationError(Fault::NonPositiveValue, "Lipschitz constant must be positive");
  }
  return fit_shape_constrained(data, ShapeMode::lipschitz, l, tol);
}

FittedFn fit_convex_lipschitz(const Dataset& data, double tol) {
  return fit_shape_constrained(data, ShapeMode::convex, 1.0, tol);
}

double insample_error(const FittedFn& fit, const std::function<double(double)>& f_star,
                      const Vec& x) {
  if (x.size() < 1) throw ValidationError(Fault::Empty, "need at least one design point");
  double acc = 0.0;
  for (long i = 0; i < x.size(); ++i) {
    const double diff = fit(x[i]) - f_star(x[i]);
    acc += diff * diff;
  }
  return acc / static_cast<double>(x.size());
}

double insample_error(const FittedFn& fit,
                      const std::function<double(const Vec&)>& f_star, const Mat& x) {
  if (x.rows() < 1) throw ValidationError(Fault::Empty, "need at least one design point");
  double acc = 0.0;
  for (long i = 0; i < x.rows(); ++i) {
    const Vec row = x.row(i).transpose();
    const double diff = fit(row) - f_star(row);
    acc += diff * diff;
  }
  return acc / static_cast<double>(x.rows());
}

HyperplaneFit fit_hyperplane_erm(const Dataset& data) {
  validate_dataset(data);
  if (!data.has_labels()) {
    throw ValidationError(Fault::Empty, "ERM needs labels");
  }
  HyperplaneFit fit;
  fit.w_hat = data.x.completeOrthogonalDecomposition().solve(data.y);
  fit.n = data.n();
  const Mat gram = data.x.transpose() * data.x / static_cast<double>(data.n());
  Eigen::SelfAdjointEigenSolver<Mat> eig(gram);
  fit.gram_min_eig = std::max(0.0, eig.eigenvalues().minCoeff());
  return fit;
}

RiskReport excess_risk_hyperplane(const Vec& w_hat, const HyperplaneMixture& h) {
  validate_hyperplane(h);
  if (w_hat.size() != h.dim()) {
    throw ValidationError(Fault::DimensionMismatch, "w_hat dimension mismatch");
  }
  RiskReport report;
  report.w_star = Vec::Zero(h.dim());
  for (int j = 0; j < h.size(); ++j) report.w_star += h.weights[j] * h.regressors[j];
  const double nu_sq_half = 0.5 * h.nu * h.nu;
  report.excess_risk = nu_sq_half * (w_hat - report.w_star).squaredNorm();
  for (int j = 0; j < h.size(); ++j) {
    report.population_floor +=
        h.weights[j] * nu_sq_half * (report.w_star - h.regressors[j]).squaredNorm();
  }
  return report;
}

}  // namespace mixlearn::regress
