#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "mixlearn/bench.hpp"

using namespace mixlearn;
using namespace mixlearn::bench;

namespace {

std::string minimal_config(const std::string& extra = "") {
  return "experiment = rate_sweep\nclass = linear\nn_grid = 32,64\nreplicates = 4\n"
         "seed = 7\n" +
         extra;
}

}  // namespace

TEST_CASE("fit_rate_exponent recovers exact power laws") {
  Table t;
  t.columns = {"n", "err"};
  for (double n : {100.0, 200.0, 400.0, 800.0}) t.rows.push_back({n, 7.0 / n});
  const auto fit = fit_rate_exponent(t, "n", "err");
  CHECK(std::abs(fit.slope + 1.0) < 1e-12);
  CHECK(fit.r2 >= 1.0 - 1e-12);
  CHECK(fit.points == 4);

  Table t2;
  t2.columns = {"n", "err"};
  for (double n : {100.0, 200.0, 400.0, 800.0}) {
    t2.rows.push_back({n, 3.0 * std::pow(n, -2.0 / 3.0)});
  }
  const auto fit2 = fit_rate_exponent(t2, "n", "err");
  CHECK(std::abs(fit2.slope + 2.0 / 3.0) < 1e-12);
}

TEST_CASE("fit_rate_exponent rejects bad inputs") {
  Table single;
  single.columns = {"n", "err"};
  single.rows.push_back({10.0, 1.0});
  CHECK_THROWS_AS(fit_rate_exponent(single, "n", "err"), ValidationError);

  Table negatives;
  negatives.columns = {"n", "err"};
  negatives.rows.push_back({10.0, 1.0});
  negatives.rows.push_back({20.0, -1.0});
  CHECK_THROWS_AS(fit_rate_exponent(negatives, "n", "err"), ValidationError);
}

TEST_CASE("CSV round trip is byte-identical, including NaN") {
  Table t;
  t.columns = {"a", "b"};
  t.rows.push_back({1.0, 0.1});
  t.rows.push_back({128.0, std::nan("")});
  t.rows.push_back({-0.5, 1e-300});
  const std::string once = to_csv(t);
  const Table parsed = parse_csv(once);
  const std::string twice = to_csv(parsed);
  CHECK(once == twice);
  CHECK(std::isnan(parsed.rows[1][1]));
}

TEST_CASE("CSV parse errors carry line diagnostics") {
  try {
    parse_csv("a,b\n1,2\n3\n");
    CHECK(false);
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(parse_csv("a,b\n1,zzz\n"), ParseError);
}

TEST_CASE("config parses, defaults, and round trips") {
  const SweepConfig cfg = parse_config(minimal_config("zeta = 0.5\ncov_scale = 0.25\n"));
  CHECK(cfg.experiment == Experiment::rate_sweep);
  CHECK(cfg.n_grid == std::vector<long>{32, 64});
  CHECK(cfg.replicates == 4);
  CHECK(cfg.zeta == 0.5);
  CHECK(cfg.gamma_grid == std::vector<double>{0.0});

  const std::string text = write_config(cfg);
  const SweepConfig reparsed = parse_config(text);
  CHECK(write_config(reparsed) == text);
}

TEST_CASE("config with sections round trips") {
  const std::string text = minimal_config() +
                           "\n[mixture]\nweights = 0.5,0.5\nscales = 1,1\nmeans = 0;2\n"
                           "\n[hyperplane]\nnu = 1\nzeta = 0.5\nweights = 0.5,0.5\n"
                           "regressors = 1,0;-1,0\n";
  const SweepConfig cfg = parse_config(text);
  REQUIRE(cfg.mixture.has_value());
  CHECK(cfg.mixture->size() == 2);
  CHECK(cfg.mixture->components[1].mean[0] == 2.0);
  REQUIRE(cfg.hyperplane.has_value());
  CHECK(cfg.hyperplane->dim() == 2);
  const std::string canonical = write_config(cfg);
  CHECK(write_config(parse_config(canonical)) == canonical);
}

TEST_CASE("config errors name the field and line") {
  try {
    parse_config("experiment = rate_sweep\nreplicates = 4\n");
    CHECK(false);
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("n_grid") != std::string::npos);
  }
  try {
    parse_config(minimal_config("definitely_not_a_key = 3\n"));
    CHECK(false);
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("definitely_not_a_key") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config("experiment = bogus\nn_grid = 8\n"), ParseError);
  CHECK_THROWS_AS(parse_config(minimal_config("n_grid = 64,32\n")), ParseError);
}

TEST_CASE("calibrated gaps reproduce their target gamma") {
  // Closed-form calibration for the d-dimensional pair.
  for (double target : {0.05, 0.2, 0.4}) {
    const double gap = calibrate_gap_gaussian(target);
    const double phi = 0.5 * std::erfc(-gap / 2.0 / std::sqrt(2.0));
    CHECK(phi - 0.5 == doctest::Approx(target).epsilon(1e-9));
  }
  // Quadrature calibration for the truncated family.
  for (double target : {0.05, 0.2}) {
    const double gap = calibrate_gap_truncated(0.5, 0.2, target);
    TruncatedPairFamily family{0.5, 0.2, gap};
    CHECK(std::abs(family.gamma() - target) <= 2e-4);
  }
  CHECK(calibrate_gap_truncated(0.5, 0.2, 0.0) == 0.0);
}

TEST_CASE("truncated family sampling matches its density") {
  TruncatedPairFamily family{0.5, 0.2, 0.6};
  Rng gen(derive_stream(55, 0));
  const long n = 200000;
  long below_half = 0;
  for (long i = 0; i < n; ++i) {
    const double v = family.sample(i % 2 == 0 ? 0 : 1, gen);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    if (v < 0.5) ++below_half;
  }
  // The two components are mirror images, so mass below 1/2 is 1/2.
  const double freq = static_cast<double>(below_half) / static_cast<double>(n);
  CHECK(std::abs(freq - 0.5) < 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("rate sweep emits the documented columns and scales with n") {
  SweepConfig cfg = parse_config(minimal_config());
  cfg.d = 2;
  cfg.replicates = 8;
  const Table t = run_rate_sweep(cfg);
  CHECK(t.columns == std::vector<std::string>{"n", "gamma", "median_error", "iqr",
                                              "replicates"});
  CHECK(t.rows.size() == 2);
  CHECK(t.rows[0][0] == 32.0);
  CHECK(t.rows[1][0] == 64.0);
  // Larger n gives a smaller linear in-sample error.
  CHECK(t.rows[1][2] < t.rows[0][2]);
}

TEST_CASE("linear rate sweep reproduces the 1/n exponent") {
  SweepConfig cfg;
  cfg.experiment = Experiment::rate_sweep;
  cfg.class_kind = ClassKind::linear;
  cfg.n_grid = {128, 256, 512, 1024, 2048, 4096};
  cfg.replicates = 50;
  cfg.zeta = 1.0;
  cfg.d = 8;
  cfg.seed = 4;
  const Table t = run_rate_sweep(cfg);
  const RateFit fit = fit_rate_exponent(t, "n", "median_error");
  CHECK(std::abs(fit.slope + 1.0) <= 0.15);
}

TEST_CASE("Lipschitz rate sweep at L = 1 reproduces the -2/3 exponent") {
  SweepConfig cfg;
  cfg.experiment = Experiment::rate_sweep;
  cfg.class_kind = ClassKind::lipschitz;
  cfg.n_grid = {64, 128, 256, 512, 1024, 2048};
  cfg.replicates = 50;
  cfg.zeta = 1.0;
  cfg.lipschitz_l = 1.0;
  cfg.cov_scale = 0.5;
  cfg.seed = 4;
  const Table t = run_rate_sweep(cfg);
  const RateFit fit = fit_rate_exponent(t, "n", "median_error");
  CHECK(std::abs(fit.slope + 2.0 / 3.0) <= 0.15);
}

TEST_CASE("noiseless sweeps give zero error for in-class fixtures") {
  for (auto kind : {ClassKind::linear, ClassKind::lipschitz, ClassKind::convex_lipschitz}) {
    SweepConfig cfg;
    cfg.experiment = Experiment::rate_sweep;
    cfg.class_kind = kind;
    cfg.n_grid = {32, 64};
    cfg.replicates = 4;
    cfg.zeta = 0.0;
    cfg.d = 2;
    cfg.seed = 13;
    const Table t = run_rate_sweep(cfg);
    for (const auto& row : t.rows) {
      CHECK(row[t.column_index("median_error")] <= 1e-10);
    }
  }
}

TEST_CASE("rate sweep refuses the general Holder class") {
  SweepConfig cfg = parse_config(minimal_config("class = holder\nholder_alpha = 1.5\n"));
  CHECK_THROWS_AS(run_rate_sweep(cfg), ValidationError);
}

TEST_CASE("paired heterogeneity sweep has ratio exactly 1 at gamma = 0") {
  SweepConfig cfg = parse_config(
      "experiment = heterogeneity_sweep\nclass = lipschitz\nn_grid = 24,48\n"
      "gamma_grid = 0\nreplicates = 6\nseed = 3\n");
  const Table t = run_heterogeneity_sweep(cfg);
  for (const auto& row : t.rows) {
    CHECK(row[t.column_index("ratio")] == 1.0);
    CHECK(row[t.column_index("error_mixture")] == row[t.column_index("error_base")]);
  }
}

TEST_CASE("sweep reruns are byte-identical") {
  SweepConfig cfg = parse_config(
      "experiment = heterogeneity_sweep\nclass = linear\nn_grid = 16,32\n"
      "gamma_grid = 0,0.1\nreplicates = 5\nseed = 11\n");
  const std::string a = to_csv(run_heterogeneity_sweep(cfg));
  const std::string b = to_csv(run_heterogeneity_sweep(cfg));
  CHECK(a == b);
  // Thread count must not change the result.
  const std::string c = to_csv(run_heterogeneity_sweep(cfg, 3));
  CHECK(a == c);
}

TEST_CASE("hyperplane sweep columns and coverage behavior") {
  SweepConfig cfg = parse_config(
      "experiment = hyperplane_sweep\nclass = linear\nn_grid = 64,128\n"
      "delta_w_grid = 0,0.5\nreplicates = 10\nseed = 2\nd = 2\n");
  const Table t = run_hyperplane_sweep(cfg);
  CHECK(t.rows.size() == 4);
  for (const auto& row : t.rows) {
    const double bound = row[t.column_index("bound")];
    const double frac = row[t.column_index("frac_within_bound")];
    if (std::isfinite(bound)) {
      CHECK(frac >= 0.0);
      CHECK(frac <= 1.0);
    }
    CHECK(row[t.column_index("excess_risk_median")] >= 0.0);
  }
}

TEST_CASE("complexity sweep respects its closed-form bounds") {
  SweepConfig cfg = parse_config(
      "experiment = complexity_sweep\nclass = linear\nn_grid = 16,64\nreplicates = 1\n"
      "seed = 5\nd = 3\ndraws = 500\n");
  const Table t = run_complexity_sweep(cfg);
  const auto check = check_sweep(cfg, t);
  CHECK(check.pass);
  for (const auto& row : t.rows) {
    CHECK(row[t.column_index("rad_l2")] <=
          row[t.column_index("rad_l2_bound")] + 3.0 * row[t.column_index("rad_l2_se")]);
  }
}

TEST_CASE("manifest is written next to the CSV") {
  SweepConfig cfg = parse_config(minimal_config());
  const std::string dir = std::filesystem::temp_directory_path() / "mixlearn_test_out";
  std::filesystem::create_directories(dir);
  const std::string csv = dir + "/table.csv";
  Table t;
  t.columns = {"a"};
  t.rows.push_back({1.0});
  emit_csv(t, csv);
  write_manifest(csv, cfg, 1.25);
  std::ifstream in(csv + ".manifest.json");
  REQUIRE(in.good());
  std::string contents((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  CHECK(contents.find("config_hash") != std::string::npos);
  CHECK(contents.find("fnv1a:") != std::string::npos);
  std::filesystem::remove_all(dir);
}
