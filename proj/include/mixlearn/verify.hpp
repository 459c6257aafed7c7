#pragma once

#include "mixlearn/core.hpp"
#include "mixlearn/rng.hpp"

namespace mixlearn::verify {

struct TailCheckReport {
  Vec grid;       // thresholds t (or direction norms for the MGF check)
  Vec empirical;  // tail frequencies, or MGF means for the MGF check
  Vec bound;      // bound values on the same grid
  long violations = 0;
  long replicates = 0;
};

/// Laplace coordinate scale for which d i.i.d. coordinates form a
/// genuinely (v2, alpha)-sub-exponential vector along every direction.
double laplace_scale_for(double v2, double alpha);

/// Empirical tail of ||Z|| for Z with i.i.d. centered Laplace coordinates
/// versus the sub-exponential norm bound
/// exp(-(1/4) min{t^2/(2 v2 d), t/(alpha d)}), with 3-sigma binomial slack.
TailCheckReport check_norm_tail(double v2, double alpha, int d, const Vec& t_grid,
                                long replicates, RngStream rng);

/// Empirical MGF of Z - n*nu*wbar for Z = (1/nu) sum_i x_i x_i' (w*_{j_i} - w*)
/// against exp(2 n nu^2 dw^2 ||u||^2) on directions with ||u|| <= 1/(4 nu dw).
TailCheckReport check_bias_mgf(const HyperplaneMixture& h, long n, int u_samples,
                               long replicates, RngStream rng);

/// Frequency of ||wbar||^2 exceeding (d dw^2 / 2n) log(8/fail_prob),
/// which the mean-of-bounded-vectors lemma caps at fail_prob/8.
TailCheckReport check_wbar(const HyperplaneMixture& h, long n, double fail_prob,
                           long replicates, RngStream rng);

}  // namespace mixlearn::verify
