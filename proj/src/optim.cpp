#include "mixlearn/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mixlearn::optim {

HalfSpace HalfSpace::from_dense(const Vec& normal, double offset) {
  std::vector<int> index;
  std::vector<double> coeff;
  for (int i = 0; i < normal.size(); ++i) {
    if (normal[i] != 0.0) {
      index.push_back(i);
      coeff.push_back(normal[i]);
    }
  }
  return from_sparse(std::move(index), std::move(coeff), offset);
}

HalfSpace HalfSpace::from_sparse(std::vector<int> index, std::vector<double> coeff,
                                 double offset) {
  HalfSpace h;
  h.index = std::move(index);
  h.coeff = std::move(coeff);
  h.offset = offset;
  h.norm_sq = 0.0;
  for (double c : h.coeff) h.norm_sq += c * c;
  if (h.norm_sq <= 0.0) {
    throw ValidationError(Fault::BadArgument, "halfspace normal must be nonzero");
  }
  return h;
}

Vec project_norm_ball(const Vec& v, const Vec& center, double radius) {
  if (!(radius > 0.0)) {
    throw ValidationError(Fault::NonPositiveValue, "ball radius must be positive");
  }
  const Vec diff = v - center;
  const double dist = diff.norm();
  if (dist <= radius) return v;
  return center + (radius / dist) * diff;
}

namespace {

double sparse_dot(const HalfSpace& h, const Vec& z) {
  double s = 0.0;
  for (std::size_t k = 0; k < h.index.size(); ++k) s += h.coeff[k] * z[h.index[k]];
  return s;
}

double violation(const Primitive& p, const Vec& z) {
  if (const auto* ball = std::get_if<NormBall>(&p)) {
    return std::max(0.0, (z - ball->center).norm() - ball->radius);
  }
  if (const auto* half = std::get_if<HalfSpace>(&p)) {
    return std::max(0.0, (sparse_dot(*half, z) - half->offset) / std::sqrt(half->norm_sq));
  }
  if (const auto* box = std::get_if<Box>(&p)) {
    double worst = 0.0;
    for (int i = 0; i < z.size(); ++i) {
      worst = std::max(worst, box->lower[i] - z[i]);
      worst = std::max(worst, z[i] - box->upper[i]);
    }
    return worst;
  }
  const auto& fixed = std::get<FixedCoordinate>(p);
  return std::abs(z[fixed.index] - fixed.value);
}

// Dykstra state: halfspace corrections live along the (sparse) normal and
// need only a scalar; fixed coordinates need a scalar; balls and boxes
// keep a dense correction vector.
class DykstraProjector {
 public:
  explicit DykstraProjector(const ConstraintSet& c) : constraints_(c) {
    polyhedral_ = true;
    for (const auto& p : c.sets) {
      if (std::holds_alternative<NormBall>(p)) polyhedral_ = false;
      scalar_corr_.push_back(0.0);
      dense_corr_.emplace_back();
    }
  }

  bool polyhedral() const { return polyhedral_; }

  void reset() {
    std::fill(scalar_corr_.begin(), scalar_corr_.end(), 0.0);
    for (auto& v : dense_corr_) v.setZero();
  }

  // Projects v onto the intersection in place. Returns the worst
  // constraint violation reached. Stops once an entire cycle leaves the
  // iterate untouched: at a Dykstra fixed point every single primitive
  // application reproduces z exactly, so the per-application movement is
  // the right stationarity certificate (end-of-cycle movement can vanish
  // spuriously while the corrections are still evolving).
  double project(Vec& z, double tol, long max_cycles, long* cycles_used = nullptr) {
    const long n = z.size();
    for (std::size_t i = 0; i < constraints_.sets.size(); ++i) {
      const auto& p = constraints_.sets[i];
      if (std::holds_alternative<NormBall>(p) || std::holds_alternative<Box>(p)) {
        if (dense_corr_[i].size() != n) dense_corr_[i] = Vec::Zero(n);
      }
    }
    double worst = std::numeric_limits<double>::infinity();
    long cycle = 0;
    for (; cycle < max_cycles; ++cycle) {
      double applied = 0.0;
      for (std::size_t i = 0; i < constraints_.sets.size(); ++i) {
        applied = std::max(applied, apply_one(constraints_.sets[i], i, z));
      }
      if (applied <= tol) {
        worst = constraints_.max_violation(z);
        if (worst <= tol) {
          ++cycle;
          break;
        }
      }
    }
    if (cycles_used) *cycles_used = cycle;
    if (!std::isfinite(worst)) worst = constraints_.max_violation(z);
    return worst;
  }

 private:
  // Applies one Dykstra step for primitive i and returns the infinity
  // norm of the change it made to z.
  double apply_one(const Primitive& p, std::size_t i, Vec& z) {
    if (const auto* half = std::get_if<HalfSpace>(&p)) {
      // t = z + mu*a; new mu = max(0, (<a,t> - b)/|a|^2); z = t - mu_new*a.
      const double mu = scalar_corr_[i];
      const double along_t = sparse_dot(*half, z) + mu * half->norm_sq;
      const double mu_new = std::max(0.0, (along_t - half->offset) / half->norm_sq);
      const double delta = mu - mu_new;
      double moved = 0.0;
      if (delta != 0.0) {
        for (std::size_t k = 0; k < half->index.size(); ++k) {
          z[half->index[k]] += delta * half->coeff[k];
          moved = std::max(moved, std::abs(delta * half->coeff[k]));
        }
      }
      scalar_corr_[i] = mu_new;
      return moved;
    }
    if (const auto* fixed = std::get_if<FixedCoordinate>(&p)) {
      const double t = z[fixed->index] + scalar_corr_[i];
      const double moved = std::abs(z[fixed->index] - fixed->value);
      z[fixed->index] = fixed->value;
      scalar_corr_[i] = t - fixed->value;
      return moved;
    }
    if (const auto* box = std::get_if<Box>(&p)) {
      Vec& corr = dense_corr_[i];
      double moved = 0.0;
      for (int k = 0; k < z.size(); ++k) {
        const double t = z[k] + corr[k];
        const double proj = std::clamp(t, box->lower[k], box->upper[k]);
        moved = std::max(moved, std::abs(proj - z[k]));
        z[k] = proj;
        corr[k] = t - proj;
      }
      return moved;
    }
    const auto& ball = std::get<NormBall>(p);
    Vec& corr = dense_corr_[i];
    const Vec t = z + corr;
    const Vec next = project_norm_ball(t, ball.center, ball.radius);
    const double moved = (next - z).lpNorm<Eigen::Infinity>();
    corr = t - next;
    z = next;
    return moved;
  }

  const ConstraintSet& constraints_;
  std::vector<double> scalar_corr_;
  std::vector<Vec> dense_corr_;
  bool polyhedral_ = true;
};

double objective_value(const Mat& Q, const Vec& c, const Vec& z) {
  return 0.5 * z.dot(Q * z) + c.dot(z);
}

// Rough radius of the constraint set, used to bound the gradient step:
// targets handed to Dykstra must stay at a scale where double precision
// can still resolve the projection tolerance. Balls and boxes bound the
// set outright; halfspace offsets only matter when nothing else does.
double constraint_scale(const ConstraintSet& c) {
  double bounding = std::numeric_limits<double>::infinity();
  double face = 0.0;
  for (const auto& p : c.sets) {
    if (const auto* ball = std::get_if<NormBall>(&p)) {
      bounding = std::min(bounding, ball->center.lpNorm<Eigen::Infinity>() + ball->radius);
    } else if (const auto* half = std::get_if<HalfSpace>(&p)) {
      face = std::max(face, std::abs(half->offset) / std::sqrt(half->norm_sq));
    } else if (const auto* box = std::get_if<Box>(&p)) {
      double extent = 0.0;
      bool all_finite = true;
      for (int i = 0; i < box->lower.size(); ++i) {
        if (!std::isfinite(box->lower[i]) || !std::isfinite(box->upper[i])) {
          all_finite = false;
          break;
        }
        extent = std::max({extent, std::abs(box->lower[i]), std::abs(box->upper[i])});
      }
      if (all_finite) bounding = std::min(bounding, extent);
    } else {
      face = std::max(face, std::abs(std::get<FixedCoordinate>(p).value));
    }
  }
  return std::isfinite(bounding) ? bounding : face;
}

// Largest eigenvalue of a symmetric PSD matrix by power iteration with a
// deterministic start vector.
double power_iteration_lambda_max(const Mat& Q) {
  const long n = Q.rows();
  Vec v(n);
  for (long i = 0; i < n; ++i) v[i] = 1.0 + 0.01 * std::sin(1.7 * static_cast<double>(i + 1));
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < 300; ++it) {
    Vec w = Q * v;
    const double norm = w.norm();
    if (norm <= 1e-300) return 0.0;
    const double rayleigh = v.dot(w);
    v = w / norm;
    if (it > 4 && std::abs(rayleigh - lambda) <= 1e-13 * std::max(1.0, std::abs(rayleigh))) {
      lambda = rayleigh;
      break;
    }
    lambda = rayleigh;
  }
  return lambda;
}

// Smallest eigenvalue estimate via power iteration on shift*I - Q, with a
// Gershgorin shift so the shifted matrix is PSD regardless of Q.
double lambda_min_estimate(const Mat& Q) {
  const long n = Q.rows();
  double shift = 0.0;
  for (long i = 0; i < n; ++i) {
    double row = 0.0;
    for (long j = 0; j < n; ++j) row += std::abs(Q(i, j));
    shift = std::max(shift, row);
  }
  if (shift == 0.0) return 0.0;
  Mat B = -Q;
  B.diagonal().array() += shift;
  return shift - power_iteration_lambda_max(B);
}

}  // namespace

double ConstraintSet::max_violation(const Vec& z) const {
  double worst = 0.0;
  for (const auto& p : sets) worst = std::max(worst, violation(p, z));
  return worst;
}

Vec project_primitive(const Vec& v, const Primitive& p) {
  if (const auto* ball = std::get_if<NormBall>(&p)) {
    return project_norm_ball(v, ball->center, ball->radius);
  }
  if (const auto* half = std::get_if<HalfSpace>(&p)) {
    const double excess = sparse_dot(*half, v) - half->offset;
    if (excess <= 0.0) return v;
    Vec out = v;
    const double scale = excess / half->norm_sq;
    for (std::size_t k = 0; k < half->index.size(); ++k) {
      out[half->index[k]] -= scale * half->coeff[k];
    }
    return out;
  }
  if (const auto* box = std::get_if<Box>(&p)) {
    Vec out = v;
    for (int i = 0; i < v.size(); ++i) out[i] = std::clamp(v[i], box->lower[i], box->upper[i]);
    return out;
  }
  const auto& fixed = std::get<FixedCoordinate>(p);
  Vec out = v;
  out[fixed.index] = fixed.value;
  return out;
}

Vec project_intersection(const Vec& v, const ConstraintSet& c, double tol, long max_iter) {
  if (c.empty()) return v;
  DykstraProjector projector(c);
  Vec z = v;
  const double worst = projector.project(z, tol, max_iter);
  if (worst > tol) {
    throw NoConvergence("Dykstra projection did not reach feasibility within tolerance; "
                        "the intersection may be empty");
  }
  return z;
}

SolveReport solve_qp(const Mat& Q, const Vec& c, const ConstraintSet& constraints,
                     const SolveOptions& options) {
  const long n = c.size();
  if (Q.rows() != n || Q.cols() != n) {
    throw ValidationError(Fault::DimensionMismatch, "Q must be n x n matching c");
  }
  const Mat Qs = 0.5 * (Q + Q.transpose());

  const double lambda_min = lambda_min_estimate(Qs);
  const double lambda_max = power_iteration_lambda_max(Qs);
  if (lambda_min < -1e-10 * std::max(1.0, std::abs(lambda_max))) {
    throw NonPsdError("negative curvature direction detected in Q");
  }

  // Feasibility probe: Dykstra from the origin with a loose tolerance.
  DykstraProjector projector(constraints);
  Vec z = Vec::Zero(n);
  if (!constraints.empty()) {
    const double probe = projector.project(z, 1e-4, 10000);
    if (probe > 1e-4) {
      throw NoConvergence("feasibility probe failed: constraint set appears empty");
    }
    if (!projector.polyhedral()) projector.reset();
  }

  const bool linear_mode = lambda_max <= 1e-12 * std::max(1.0, c.lpNorm<Eigen::Infinity>());
  const double cnorm = c.norm();
  if (linear_mode && cnorm == 0.0) {
    SolveReport report;
    report.solution = z;
    report.objective = objective_value(Qs, c, z);
    report.kkt_residual = 0.0;
    report.iterations = 0;
    report.converged = true;
    return report;
  }
  const double bounded_step =
      10.0 * (1.0 + constraint_scale(constraints)) / std::max(cnorm, 1e-12);
  double step = linear_mode ? bounded_step
                            : std::min(1.0 / (lambda_max * (1.0 + 1e-9)), bounded_step);
  if (constraints.empty() && !linear_mode) step = 1.0 / (lambda_max * (1.0 + 1e-9));

  const double inner_tol = options.tol * 0.1;
  SolveReport report;
  double prev_objective = std::numeric_limits<double>::infinity();
  long stall = 0;
  for (long it = 0; it < options.max_iter; ++it) {
    Vec target = z - step * (Qs * z + c);
    if (!constraints.empty()) {
      if (!projector.polyhedral()) projector.reset();
      projector.project(target, inner_tol, 200000);
    }
    const double movement = (target - z).lpNorm<Eigen::Infinity>();
    z = target;
    const double objective = objective_value(Qs, c, z);
    if (options.objective_trace) options.objective_trace->push_back(objective);
    // Safeguard against an underestimated lambda_max: persistent ascent
    // means the step is too long.
    if (objective > prev_objective + 1e-12 * std::max(1.0, std::abs(prev_objective))) {
      if (++stall >= 3) {
        step *= 0.5;
        stall = 0;
      }
    } else {
      stall = 0;
    }
    prev_objective = objective;
    report.kkt_residual = movement / step;
    report.iterations = it + 1;
    if (report.kkt_residual <= options.tol) {
      report.converged = true;
      break;
    }
  }
  if (!report.converged) {
    throw NoConvergence("projected gradient did not reach the KKT tolerance in max_iter");
  }
  report.solution = z;
  report.objective = objective_value(Qs, c, z);
  return report;
}

SolveReport solve_qp(const Mat& Q, const Vec& c, const ConstraintSet& constraints,
                     double tol, long max_iter) {
  SolveOptions options;
  options.tol = tol;
  options.max_iter = max_iter;
  return solve_qp(Q, c, constraints, options);
}

}  // namespace mixlearn::optim
