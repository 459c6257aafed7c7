#pragma once

#include <variant>
#include <vector>

#include "mixlearn/core.hpp"
#include "mixlearn/rng.hpp"

namespace mixlearn::complexity {

enum class Kind {
  rademacher_l2,
  rademacher_l1,
  rademacher_bounded,
  gaussian_linear,
  gaussian_lipschitz,
};

struct ComplexityEstimate {
  double value = 0.0;
  double std_error = 0.0;
  long draws = 0;
  Kind kind = Kind::rademacher_l2;
};

/// Monte Carlo mean over sign vectors of (w2/n)||sum_i sigma_i x_i||_2,
/// the exact per-draw supremum of the l2-ball linear class.
ComplexityEstimate rademacher_l2(const Mat& x, double w2, long draws, RngStream rng);

/// Same with the l1-ball class: per-draw supremum (w1/n)||sum sigma_i x_i||_inf.
ComplexityEstimate rademacher_l1(const Mat& x, double w1, long draws, RngStream rng);

/// Per-draw supremum of the b-bounded class: (b/n) * sum over groups of
/// identical rows of |sum of their signs|.
ComplexityEstimate rademacher_bounded(const Mat& x, double b, long draws, RngStream rng);

struct L2Case {
  double w2 = 1.0;
  double r = 1.0;
};
struct L1Case {
  double w1 = 1.0;
  double xinf = 1.0;
  int d = 2;
};
struct BoundedCase {
  double b = 1.0;
};
using RademacherCase = std::variant<L2Case, L1Case, BoundedCase>;

/// Closed-form empirical Rademacher complexity bounds B(n) per case:
/// w2*r/sqrt(n), xinf*w1*sqrt(2 log d / n), or b.
double rademacher_bound(const RademacherCase& c, long n);

/// min_j (base_j + 2 * gamma_j * bn).
double mixture_rademacher_bound(const std::vector<double>& base,
                                const std::vector<double>& gammas, double bn);

/// Generalization error bound 2*rj + 4*bn*gamma_j + dev.
double generalization_bound(double rj, double bn, double gamma_j, double dev);

/// Companion predicate gamma_j <= rj / (2 bn); throws on bn = 0.
bool heterogeneity_within_rademacher_threshold(double rj, double bn, double gamma_j);

/// Local Gaussian complexity of the linear class: per draw the exact
/// supremum is (delta/sqrt(n)) * || proj_{col(X)} u || for u ~ N(0, I_n).
ComplexityEstimate local_gc_linear(const Mat& x, double delta, long draws, RngStream rng);

/// Local Gaussian complexity of the Lipschitz class on sorted design
/// points in [0,1]: each draw solves the chain-constrained program
/// max (1/n) sum u_i g_i  s.t.  g anchored at 0, |g_{i+1}-g_i| <= L*gap,
/// (1/n) sum g_i^2 <= delta^2, via optim::solve_qp.
ComplexityEstimate local_gc_lipschitz(const Vec& x_sorted, double l, double delta,
                                      long draws, RngStream rng, double tol = 1e-8);

/// Single-draw supremum used by local_gc_lipschitz; exposed so tests can
/// compare one solve against a brute-force grid.
double local_gc_lipschitz_one_draw(const Vec& x_sorted, double l, double delta,
                                   const Vec& u, double tol = 1e-8);

/// min_j (base_j + 2 * zeta * delta * gamma_j).
double mixture_gc_bound(const std::vector<double>& base, const std::vector<double>& gammas,
                        double zeta, double delta);

}  // namespace mixlearn::complexity
