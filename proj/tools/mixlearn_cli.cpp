// Command-line front end: sampling, fitting, complexity estimates, rate
// calculators, config-driven sweeps, and the concentration checks.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>

#include "mixlearn/bench.hpp"
#include "mixlearn/complexity.hpp"
#include "mixlearn/mixtures.hpp"
#include "mixlearn/rates.hpp"
#include "mixlearn/regress.hpp"
#include "mixlearn/verify.hpp"

namespace {

using namespace mixlearn;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitCheckFailed = 4;

void write_table(const bench::Table& table, const std::string& out) {
  if (out.empty()) {
    std::cout << bench::to_csv(table);
  } else {
    bench::emit_csv(table, out);
  }
}

struct GlobalOptions {
  std::uint64_t seed = 0;
  std::string out;
  std::string config;
  int threads = 1;
  bool check = false;
};

bench::SweepConfig load_config(const GlobalOptions& global, bool required) {
  if (global.config.empty()) {
    if (required) throw bench::IoError("--config is required for this subcommand");
    return bench::SweepConfig{};
  }
  return bench::read_config(global.config);
}

int cmd_sample(const GlobalOptions& global, long n, bool hyperplane) {
  bench::SweepConfig cfg = load_config(global, true);
  const std::uint64_t seed = global.seed ? global.seed : cfg.seed;
  bench::Table table;
  Dataset data;
  int d = 0;
  if (hyperplane) {
    if (!cfg.hyperplane) throw bench::IoError("config has no [hyperplane] section");
    data = mixtures::sample_hyperplane_data(*cfg.hyperplane, n, derive_stream(seed, 0));
    d = cfg.hyperplane->dim();
  } else {
    if (!cfg.mixture) throw bench::IoError("config has no [mixture] section");
    data = mixtures::sample_covariates(*cfg.mixture, n, derive_stream(seed, 0));
    d = cfg.mixture->dim();
  }
  for (int k = 0; k < d; ++k) table.columns.push_back("x" + std::to_string(k));
  if (data.has_labels()) table.columns.push_back("y");
  table.columns.push_back("assignment");
  for (long i = 0; i < data.n(); ++i) {
    std::vector<double> row;
    for (int k = 0; k < d; ++k) row.push_back(data.x(i, k));
    if (data.has_labels()) row.push_back(data.y[i]);
    row.push_back(static_cast<double>((*data.assignment)[i]));
    table.rows.push_back(std::move(row));
  }
  write_table(table, global.out);
  return kExitOk;
}

Dataset dataset_from_csv(const std::string& path) {
  const bench::Table table = bench::read_csv(path);
  int d = 0;
  while (table.column_index("x" + std::to_string(d)) >= 0) ++d;
  if (d == 0) throw bench::IoError("dataset needs x0.. columns: " + path);
  const long yi = table.column_index("y");
  Dataset data;
  data.x.resize(static_cast<long>(table.rows.size()), d);
  if (yi >= 0) data.y.resize(static_cast<long>(table.rows.size()));
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    for (int k = 0; k < d; ++k) data.x(i, k) = table.at(i, "x" + std::to_string(k));
    if (yi >= 0) data.y[i] = table.rows[i][yi];
  }
  return data;
}

int cmd_fit(const GlobalOptions& global, const std::string& data_path,
            const std::string& class_name, double lipschitz_l, double tol) {
  const Dataset data = dataset_from_csv(data_path);
  bench::Table table;
  if (class_name == "linear") {
    const FittedFn fit = regress::fit_linear_ls(data);
    table.columns = {"theta"};
    for (long k = 0; k < fit.linear().theta.size(); ++k) {
      table.rows.push_back({fit.linear().theta[k]});
    }
  } else {
    const FittedFn fit = class_name == "lipschitz"
                             ? regress::fit_lipschitz(data, lipschitz_l, tol)
                             : regress::fit_convex_lipschitz(data, tol);
    table.columns = {"knot", "value"};
    const auto& pw = fit.piecewise();
    for (long k = 0; k < pw.knots.size(); ++k) {
      table.rows.push_back({pw.knots[k], pw.values[k]});
    }
  }
  write_table(table, global.out);
  return kExitOk;
}

int cmd_complexity(const GlobalOptions& global, const std::string& kind,
                   const std::string& data_path, long n, long draws, double w2, double w1,
                   double b, double delta, double lipschitz_l) {
  bench::SweepConfig cfg;
  Mat x;
  if (!data_path.empty()) {
    x = dataset_from_csv(data_path).x;
  } else {
    cfg = load_config(global, true);
    if (!cfg.mixture) throw bench::IoError("config has no [mixture] section");
    const std::uint64_t seed = global.seed ? global.seed : cfg.seed;
    x = mixtures::sample_covariates(*cfg.mixture, n, derive_stream(seed, 0)).x;
  }
  const RngStream stream = derive_stream(global.seed, 1);
  complexity::ComplexityEstimate est;
  if (kind == "rademacher_l2") {
    est = complexity::rademacher_l2(x, w2, draws, stream);
  } else if (kind == "rademacher_l1") {
    est = complexity::rademacher_l1(x, w1, draws, stream);
  } else if (kind == "rademacher_bounded") {
    est = complexity::rademacher_bounded(x, b, draws, stream);
  } else if (kind == "gc_linear") {
    est = complexity::local_gc_linear(x, delta, draws, stream);
  } else if (kind == "gc_lipschitz") {
    Vec xs = x.col(0);
    std::sort(xs.begin(), xs.end());
    est = complexity::local_gc_lipschitz(xs, lipschitz_l, delta, draws, stream);
  } else {
    throw bench::IoError("unknown complexity kind: " + kind);
  }
  bench::Table table;
  table.columns = {"value", "std_error", "draws"};
  table.rows.push_back({est.value, est.std_error, static_cast<double>(est.draws)});
  write_table(table, global.out);
  return kExitOk;
}

int cmd_rates(const GlobalOptions& global, const std::string& class_name, double zeta,
              long n, double gamma, int d, double lipschitz_l, double alpha, double nu,
              double delta_w, double fail_prob, double cnoise, double cbias) {
  rates::FunctionClass cls;
  if (class_name == "linear") cls = rates::LinearClass{d};
  else if (class_name == "lipschitz") cls = rates::LipschitzClass{lipschitz_l};
  else if (class_name == "convex_lipschitz") cls = rates::ConvexLipschitzClass{};
  else if (class_name == "holder") cls = rates::HolderClass{alpha};
  else throw bench::IoError("unknown class: " + class_name);

  const auto result = rates::critical_for_class(cls, zeta, n, gamma);
  const double threshold = rates::gamma_threshold(cls, zeta, n);
  bench::Table table;
  table.columns = {"delta_star", "rate", "residual", "gamma_threshold", "hyperplane_bound"};
  double bound = std::numeric_limits<double>::quiet_NaN();
  if (delta_w >= 0.0) {
    bound = rates::hyperplane_error_bound(zeta, d, n, fail_prob, nu, delta_w, cnoise, cbias);
  }
  table.rows.push_back({result.delta_star, result.rate, result.residual, threshold, bound});
  write_table(table, global.out);
  return kExitOk;
}

int cmd_sweep(const GlobalOptions& global) {
  bench::SweepConfig cfg = load_config(global, true);
  if (global.seed) cfg.seed = global.seed;
  const auto start = std::chrono::steady_clock::now();
  const bench::Table table = bench::run_sweep(cfg, global.threads);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_table(table, global.out);
  if (!global.out.empty()) bench::write_manifest(global.out, cfg, elapsed);
  if (global.check) {
    const auto check = bench::check_sweep(cfg, table);
    std::cerr << (check.pass ? "check passed: " : "check FAILED: ") << check.detail << "\n";
    if (!check.pass) return kExitCheckFailed;
  }
  return kExitOk;
}

int cmd_verify(const GlobalOptions& global, long replicates) {
  const std::uint64_t seed = global.seed;
  bench::Table table;
  table.columns = {"check", "d", "n", "m", "violations", "replicates"};
  long total_violations = 0;
  std::uint64_t stream_key = 0;

  Vec t_grid(9);
  t_grid << 0.0, 0.5, 1.0, 2.0, 4.0, 6.0, 8.0, 12.0, 16.0;
  for (int d : {1, 4}) {
    const auto report =
        verify::check_norm_tail(1.0, 1.0, d, t_grid, replicates, derive_stream(seed, stream_key++));
    table.rows.push_back({0.0, static_cast<double>(d), 0.0, 0.0,
                          static_cast<double>(report.violations),
                          static_cast<double>(report.replicates)});
    total_violations += report.violations;
  }

  for (int d : {1, 4}) {
    for (long n : {10L, 100L}) {
      for (int m : {2, 3}) {
        HyperplaneMixture h;
        h.nu = 1.0;
        h.zeta = 1.0;
        Vec plus = Vec::Zero(d), minus = Vec::Zero(d);
        plus[0] = 1.0;
        minus[0] = -1.0;
        if (m == 2) {
          h.regressors = {plus, minus};
          h.weights = {0.5, 0.5};
        } else {
          h.regressors = {plus, minus, Vec::Zero(d)};
          h.weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
        }
        const auto mgf =
            verify::check_bias_mgf(h, n, 8, replicates, derive_stream(seed, stream_key++));
        table.rows.push_back({1.0, static_cast<double>(d), static_cast<double>(n),
                              static_cast<double>(m), static_cast<double>(mgf.violations),
                              static_cast<double>(mgf.replicates)});
        total_violations += mgf.violations;
        const auto wbar =
            verify::check_wbar(h, n, 0.08, replicates, derive_stream(seed, stream_key++));
        table.rows.push_back({2.0, static_cast<double>(d), static_cast<double>(n),
                              static_cast<double>(m), static_cast<double>(wbar.violations),
                              static_cast<double>(wbar.replicates)});
        total_violations += wbar.violations;
      }
    }
  }

  write_table(table, global.out);
  if (global.check && total_violations > 0) {
    std::cerr << "verify FAILED: " << total_violations << " violations\n";
    return kExitCheckFailed;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mixture-data learning theory experiments"};
  app.require_subcommand(1);

  GlobalOptions global;
  app.add_option("--seed", global.seed, "base RNG seed");
  app.add_option("--out", global.out, "output CSV path (stdout when omitted)");
  app.add_option("--config", global.config, "configuration file");
  app.add_option("--threads", global.threads, "worker threads for replicates");
  app.add_flag("--check", global.check, "apply built-in assertions; exit 4 on failure");

  auto* sample = app.add_subcommand("sample", "draw a dataset from the configured model");
  long sample_n = 100;
  bool sample_hyper = false;
  sample->add_option("--n", sample_n, "number of rows");
  sample->add_flag("--hyperplane", sample_hyper, "sample labeled hyperplane data");

  auto* fit = app.add_subcommand("fit", "fit an estimator to a dataset CSV");
  std::string fit_data, fit_class = "linear";
  double fit_l = 1.0, fit_tol = 1e-8;
  fit->add_option("--data", fit_data, "dataset CSV with x0.. and y columns")->required();
  fit->add_option("--class", fit_class, "linear | lipschitz | convex_lipschitz");
  fit->add_option("--lipschitz-l", fit_l, "Lipschitz constant");
  fit->add_option("--tol", fit_tol, "solver KKT tolerance");

  auto* cpx = app.add_subcommand("complexity", "Monte Carlo complexity estimates");
  std::string cpx_kind = "rademacher_l2", cpx_data;
  long cpx_n = 100, cpx_draws = 2000;
  double cpx_w2 = 1.0, cpx_w1 = 1.0, cpx_b = 1.0, cpx_delta = 1.0, cpx_l = 1.0;
  cpx->add_option("--kind", cpx_kind,
                  "rademacher_l2 | rademacher_l1 | rademacher_bounded | gc_linear | gc_lipschitz");
  cpx->add_option("--data", cpx_data, "dataset CSV (otherwise sampled from config)");
  cpx->add_option("--n", cpx_n, "rows to sample when no dataset is given");
  cpx->add_option("--draws", cpx_draws, "Monte Carlo draws");
  cpx->add_option("--w2", cpx_w2, "l2 ball radius");
  cpx->add_option("--w1", cpx_w1, "l1 ball radius");
  cpx->add_option("--b", cpx_b, "bounded class level");
  cpx->add_option("--delta", cpx_delta, "local radius");
  cpx->add_option("--lipschitz-l", cpx_l, "Lipschitz constant");

  auto* rate = app.add_subcommand("rates", "critical equation and threshold calculators");
  std::string rate_class = "linear";
  double rate_zeta = 1.0, rate_gamma = 0.0, rate_l = 1.0, rate_alpha = 1.0;
  double rate_nu = 1.0, rate_dw = -1.0, rate_fail = 0.05, rate_cnoise = 1.0, rate_cbias = 1.0;
  long rate_n = 100;
  int rate_d = 1;
  rate->add_option("--class", rate_class, "linear | lipschitz | convex_lipschitz | holder");
  rate->add_option("--zeta", rate_zeta, "noise scale");
  rate->add_option("--n", rate_n, "sample size");
  rate->add_option("--gamma", rate_gamma, "TV heterogeneity");
  rate->add_option("--d", rate_d, "dimension");
  rate->add_option("--lipschitz-l", rate_l, "Lipschitz constant");
  rate->add_option("--alpha", rate_alpha, "Holder smoothness");
  rate->add_option("--nu", rate_nu, "covariate scale for the hyperplane bound");
  rate->add_option("--delta-w", rate_dw, "regressor spread (enables the hyperplane bound)");
  rate->add_option("--fail-prob", rate_fail, "failure probability");
  rate->add_option("--cnoise", rate_cnoise, "noise term multiplier");
  rate->add_option("--cbias", rate_cbias, "bias term multiplier");

  auto* sweep = app.add_subcommand("sweep", "run the config-driven experiment");

  auto* verify_cmd = app.add_subcommand("verify", "concentration lemma checks");
  long verify_reps = 100000;
  verify_cmd->add_option("--replicates", verify_reps, "Monte Carlo replicates");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*sample) return cmd_sample(global, sample_n, sample_hyper);
    if (*fit) return cmd_fit(global, fit_data, fit_class, fit_l, fit_tol);
    if (*cpx) {
      return cmd_complexity(global, cpx_kind, cpx_data, cpx_n, cpx_draws, cpx_w2, cpx_w1,
                            cpx_b, cpx_delta, cpx_l);
    }
    if (*rate) {
      return cmd_rates(global, rate_class, rate_zeta, rate_n, rate_gamma, rate_d, rate_l,
                       rate_alpha, rate_nu, rate_dw, rate_fail, rate_cnoise, rate_cbias);
    }
    if (*sweep) return cmd_sweep(global);
    if (*verify_cmd) return cmd_verify(global, verify_reps);
  } catch (const bench::ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const bench::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NoConvergence& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const NonPsdError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const QuadratureFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}
