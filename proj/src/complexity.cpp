#include "mixlearn/complexity.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <map>

#include "mixlearn/optim.hpp"
#include "mixlearn/running_stat.hpp"

namespace mixlearn::complexity {

namespace {

void check_draws(long draws) {
  if (draws < 1) throw ValidationError(Fault::BadArgument, "draws must be >= 1");
}

ComplexityEstimate finish(const RunningStat& stat, Kind kind) {
  ComplexityEstimate est;
  est.value = stat.mean();
  est.std_error = stat.std_error();
  est.draws = stat.count();
  est.kind = kind;
  return est;
}

}  // namespace

ComplexityEstimate rademacher_l2(const Mat& x, double w2, long draws, RngStream rng) {
  if (!(w2 > 0.0)) throw ValidationError(Fault::NonPositiveValue, "w2 must be positive");
  if (x.rows() < 1) throw ValidationError(Fault::Empty, "need at least one row");
  check_draws(draws);
  Rng gen(rng);
  const long n = x.rows();
  RunningStat stat;
  Vec sum(x.cols());
  for (long it = 0; it < draws; ++it) {
    sum.setZero();
    for (long i = 0; i < n; ++i) {
      sum += static_cast<double>(gen.pick_sign()) * x.row(i).transpose();
    }
    stat.add(w2 / static_cast<double>(n) * sum.norm());
  }
  return finish(stat, Kind::rademacher_l2);
}

ComplexityEstimate rademacher_l1(const Mat& x, double w1, long draws, RngStream rng) {
  if (!(w1 > 0.0)) throw ValidationError(Fault::NonPositiveValue, "w1 must be positive");
  if (x.rows() < 1) throw ValidationError(Fault::Empty, "need at least one row");
  check_draws(draws);
  Rng gen(rng);
  const long n = x.rows();
  RunningStat stat;
  Vec sum(x.cols());
  for (long it = 0; it < draws; ++it) {
    sum.setZero();
    for (long i = 0; i < n; ++i) {
      sum += static_cast<double>(gen.pick_sign()) * x.row(i).transpose();
    }
    stat.add(w1 / static_cast<double>(n) * sum.lpNorm<Eigen::Infinity>());
  }
  return finish(stat, Kind::rademacher_l1);
}

ComplexityEstimate rademacher_bounded(const Mat& x, double b, long draws, RngStream rng) {
  if (!(b > 0.0)) throw ValidationError(Fault::NonPositiveValue, "b must be positive");
  if (x.rows() < 1) throw ValidationError(Fault::Empty, "need at least one row");
  check_draws(draws);
  // A b-bounded function can pick an arbitrary value per distinct point,
  // so the per-draw supremum groups identical rows.
  std::map<std::vector<double>, std::vector<long>> groups;
  for (long i = 0; i < x.rows(); ++i) {
    std::vector<double> key(x.row(i).begin(), x.row(i).end());
    groups[key].push_back(i);
  }
  Rng gen(rng);
  const long n = x.rows();
  RunningStat stat;
  std::vector<int> signs(n);
  for (long it = 0; it < draws; ++it) {
    for (long i = 0; i < n; ++i) signs[i] = gen.pick_sign();
    double total = 0.0;
    for (const auto& [key, members] : groups) {
      long s = 0;
      for (long i : members) s += signs[i];
      total += std::abs(static_cast<double>(s));
    }
    stat.add(b / static_cast<double>(n) * total);
  }
  return finish(stat, Kind::rademacher_bounded);
}

double rademacher_bound(const RademacherCase& c, long n) {
  if (n < 1) throw ValidationError(Fault::BadArgument, "n must be >= 1");
  const double nn = static_cast<double>(n);
  if (const auto* l2 = std::get_if<L2Case>(&c)) {
    if (!(l2->w2 > 0.0) || !(l2->r > 0.0)) {
      throw ValidationError(Fault::NonPositiveValue, "case parameters must be positive");
    }
    return l2->w2 * l2->r / std::sqrt(nn);
  }
  if (const auto* l1 = std::get_if<L1Case>(&c)) {
    if (!(l1->w1 > 0.0) || !(l1->xinf > 0.0) || l1->d < 1) {
      throw ValidationError(Fault::NonPositiveValue, "case parameters must be positive");
    }
    return l1->xinf * l1->w1 * std::sqrt(2.0 * std::log(static_cast<double>(l1->d)) / nn);
  }
  const auto& bounded = std::get<BoundedCase>(c);
  if (!(bounded.b > 0.0)) {
    throw ValidationError(Fault::NonPositiveValue, "case parameters must be positive");
  }
  return bounded.b;
}

double mixture_rademacher_bound(const std::vector<double>& base,
                                const std::vector<double>& gammas, double bn) {
  if (base.empty() || base.size() != gammas.size()) {
    throw ValidationError(Fault::DimensionMismatch, "base and gammas must match and be nonempty");
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < base.size(); ++j) {
    if (base[j] < 0.0 || gammas[j] < 0.0 || gammas[j] > 1.0 || bn < 0.0) {
      throw ValidationError(Fault::BadArgument, "entries must be nonnegative, gamma in [0,1]");
    }
    best = std::min(best, base[j] + 2.0 * gammas[j] * bn);
  }
  return best;
}

double generalization_bound(double rj, double bn, double gamma_j, double dev) {
  if (rj < 0.0 || bn < 0.0 || gamma_j < 0.0 || dev < 0.0) {
    throw ValidationError(Fault::BadArgument, "inputs must be nonnegative");
  }
  return 2.0 * rj + 4.0 * bn * gamma_j + dev;
}

bool heterogeneity_within_rademacher_threshold(double rj, double bn, double gamma_j) {
  if (bn == 0.0) {
    throw ValidationError(Fault::ZeroBn, "threshold predicate undefined for B(n) = 0");
  }
  return gamma_j <= rj / (2.0 * bn);
}

ComplexityEstimate local_gc_linear(const Mat& x, double delta, long draws, RngStream rng) {
  if (delta < 0.0) throw ValidationError(Fault::NonPositiveValue, "delta must be >= 0");
  if (x.rows() < 1) throw ValidationError(Fault::Empty, "need at least one row");
  check_draws(draws);
  const long n = x.rows();
  Eigen::BDCSVD<Mat> svd(x, Eigen::ComputeThinU);
  const long rank = svd.rank();
  const Mat basis = svd.matrixU().leftCols(rank);  // orthonormal basis of col(X)
  Rng gen(rng);
  RunningStat stat;
  const double scale = delta / std::sqrt(static_cast<double>(n));
  for (long it = 0; it < draws; ++it) {
    const Vec u = gen.normal_vector(static_cast<int>(n));
    const double norm = rank > 0 ? (basis.transpose() * u).norm() : 0.0;
    stat.add(scale * norm);
  }
  return finish(stat, Kind::gaussian_linear);
}

namespace {

optim::ConstraintSet lipschitz_chain_constraints(const Vec& x_sorted, double l,
                                                 double delta) {
  const long n = x_sorted.size();
  optim::ConstraintSet constraints;
  // Chain from the f(0)=0 anchor through the sorted design points.
  double prev = 0.0;
  for (long i = 0; i < n; ++i) {
    const double gap = x_sorted[i] - prev;
    if (i == 0 && gap == 0.0) {
      constraints.add(optim::FixedCoordinate{0, 0.0});
    } else if (i == 0) {
      constraints.add(optim::HalfSpace::from_sparse({0}, {1.0}, l * gap));
      constraints.add(optim::HalfSpace::from_sparse({0}, {-1.0}, l * gap));
    } else {
      const int a = static_cast<int>(i - 1);
      const int b = static_cast<int>(i);
      constraints.add(optim::HalfSpace::from_sparse({a, b}, {-1.0, 1.0}, l * gap));
      constraints.add(optim::HalfSpace::from_sparse({a, b}, {1.0, -1.0}, l * gap));
    }
    prev = x_sorted[i];
  }
  constraints.add(optim::NormBall{Vec::Zero(n),
                                  std::max(delta * std::sqrt(static_cast<double>(n)), 1e-300)});
  return constraints;
}

}  // namespace

double local_gc_lipschitz_one_draw(const Vec& x_sorted, double l, double delta,
                                   const Vec& u, double tol) {
  const long n = x_sorted.size();
  if (n < 1) throw ValidationError(Fault::Empty, "need at least one design point");
  if (u.size() != n) throw ValidationError(Fault::DimensionMismatch, "u must match x");
  if (delta == 0.0) return 0.0;
  const auto constraints = lipschitz_chain_constraints(x_sorted, l, delta);
  const Mat q = Mat::Zero(n, n);
  const Vec c = -u / static_cast<double>(n);
  const auto report = optim::solve_qp(q, c, constraints, tol, 200000);
  // The feasible set is symmetric, so the one-sided maximum equals the
  // supremum of the absolute value.
  return -report.objective;
}

ComplexityEstimate local_gc_lipschitz(const Vec& x_sorted, double l, double delta,
                                      long draws, RngStream rng, double tol) {
  if (!(l > 0.0)) throw ValidationError(Fault::NonPositiveValue, "l must be positive");
  if (delta < 0.0) throw ValidationError(Fault::NonPositiveValue, "delta must be >= 0");
  const long n = x_sorted.size();
  if (n < 1) throw ValidationError(Fault::Empty, "need at least one design point");
  for (long i = 0; i < n; ++i) {
    if (x_sorted[i] < 0.0 || x_sorted[i] > 1.0 ||
        (i + 1 < n && x_sorted[i] > x_sorted[i + 1])) {
      throw ValidationError(Fault::BadArgument, "x must be sorted within [0,1]");
    }
  }
  check_draws(draws);
  Rng gen(rng);
  RunningStat stat;
  for (long it = 0; it < draws; ++it) {
    const Vec u = gen.normal_vector(static_cast<int>(n));
    stat.add(delta == 0.0 ? 0.0 : local_gc_lipschitz_one_draw(x_sorted, l, delta, u, tol));
  }
  return finish(stat, Kind::gaussian_lipschitz);
}

double mixture_gc_bound(const std::vector<double>& base, const std::vector<double>& gammas,
                        double zeta, double delta) {
  if (base.empty() || base.size() != gammas.size()) {
    throw ValidationError(Fault::DimensionMismatch, "base and gammas must match and be nonempty");
  }
  if (zeta < 0.0 || delta < 0.0) {
    throw ValidationError(Fault::BadArgument, "zeta and delta must be nonnegative");
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < base.size(); ++j) {
    if (base[j] < 0.0 || gammas[j] < 0.0) {
      throw ValidationError(Fault::BadArgument, "entries must be nonnegative");
    }
    best = std::min(best, base[j] + 2.0 * zeta * delta * gammas[j]);
  }
  return best;
}

}  // namespace mixlearn::complexity
