#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mixlearn/core.hpp"
#include "mixlearn/rates.hpp"
#include "mixlearn/rng.hpp"

namespace mixlearn::bench {

class IoError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Config or CSV syntax problem, with the 1-based offending line.
class ParseError : public std::runtime_error {
 public:
  ParseError(long line, const std::string& what);
  long line() const noexcept { return line_; }

 private:
  long line_;
};

/// Shortest round-trip decimal formatting (NaN serializes as "nan").
std::string format_double(double v);
double parse_double(const std::string& text, long line_for_error);

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  long column_index(const std::string& name) const;  // -1 when absent
  double at(std::size_t row, const std::string& column) const;
};

std::string to_csv(const Table& table);
Table parse_csv(const std::string& text);
void emit_csv(const Table& table, const std::string& path);
Table read_csv(const std::string& path);

enum class Experiment { rate_sweep, heterogeneity_sweep, hyperplane_sweep, complexity_sweep };
enum class ClassKind { linear, lipschitz, convex_lipschitz, holder };
enum class GammaMode { grid, threshold };

struct SweepConfig {
  Experiment experiment = Experiment::rate_sweep;
  ClassKind class_kind = ClassKind::linear;
  std::vector<long> n_grid;
  std::vector<double> gamma_grid{0.0};
  std::vector<double> delta_w_grid;
  GammaMode gamma_mode = GammaMode::grid;
  long replicates = 50;
  std::uint64_t seed = 0;
  double zeta = 1.0;
  double nu = 1.0;
  int d = 1;
  double lipschitz_l = 1.0;
  double holder_alpha = 1.0;
  double rate_multiplier = 1.0;
  double cnoise = 4.0;
  double cbias = 16.0;
  double fail_prob = 0.05;
  double cov_mean = 0.5;   // center of the 1-d covariate family
  double cov_scale = 0.2;  // component scale of the 1-d covariate family
  long draws = 2000;       // complexity sweep Monte Carlo draws
  double w2 = 1.0;
  double w1 = 1.0;
  double gc_delta = 1.0;
  std::optional<MixtureModel> mixture;
  std::optional<HyperplaneMixture> hyperplane;

  rates::FunctionClass function_class() const;
};

SweepConfig parse_config(const std::string& text);
SweepConfig read_config(const std::string& path);
std::string write_config(const SweepConfig& cfg);

const char* to_string(Experiment e);
const char* to_string(ClassKind c);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  long points = 0;
};

/// OLS line through (log x, log y); values must be strictly positive.
RateFit fit_rate_exponent(const Table& rows, const std::string& x_col,
                          const std::string& y_col);

// -- Covariate families used by the sweeps ---------------------------------

/// Two equal-weight Gaussian components on the line, truncated to [0,1]
/// by rejection; the TV heterogeneity is computed on the truncated
/// densities.
struct TruncatedPairFamily {
  double center = 0.5;
  double scale = 0.2;
  double gap = 0.0;  // separation between the two component means

  double component_pdf(int j, double x) const;  // renormalized on [0,1]
  double mixture_pdf(double x) const;
  /// Rejection-samples from component j; consumption of the normal
  /// stream is identical across components when gap == 0.
  double sample(int j, Rng& gen) const;
  double gamma() const;  // quadrature TV radius of the truncated pair
};

/// Calibrates the mean gap of a covariate family to a target TV radius
/// by bisection (tolerance 1e-4 in gamma).
double calibrate_gap_truncated(double center, double scale, double target_gamma);

/// Gap for a target gamma of an equal-weight pair of unit-scale
/// d-dimensional Gaussians separated along the first axis (closed form).
double calibrate_gap_gaussian(double target_gamma);

// -- Sweeps -----------------------------------------------------------------

Table run_rate_sweep(const SweepConfig& cfg, int threads = 1);
Table run_heterogeneity_sweep(const SweepConfig& cfg, int threads = 1);
Table run_hyperplane_sweep(const SweepConfig& cfg, int threads = 1);
Table run_complexity_sweep(const SweepConfig& cfg, int threads = 1);
Table run_sweep(const SweepConfig& cfg, int threads = 1);

struct CheckResult {
  bool pass = true;
  std::string detail;
};

/// Built-in assertions for --check mode: scaling-law slopes, ratio caps,
/// and bound coverage, depending on the experiment type.
CheckResult check_sweep(const SweepConfig& cfg, const Table& table);

/// Writes <csv_path>.manifest.json with the config hash, seed, versions
/// and wall time.
void write_manifest(const std::string& csv_path, const SweepConfig& cfg,
                    double wall_seconds);

}  // namespace mixlearn::bench
