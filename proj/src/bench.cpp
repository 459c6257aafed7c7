#include "mixlearn/bench.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <thread>

#include "mixlearn/complexity.hpp"
#include "mixlearn/mixtures.hpp"
#include "mixlearn/regress.hpp"

namespace mixlearn::bench {

namespace {

constexpr double kFitTol = 1e-6;        // shape-constrained solver tolerance in sweeps
constexpr double kGammaCalTol = 1e-4;   // gamma calibration tolerance
constexpr double kTruncGapMax = 1.2;    // largest calibratable mean separation

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double probit(double p) {
  if (!(p > 0.0) || !(p < 1.0)) {
    throw ValidationError(Fault::BadArgument, "probit argument must lie in (0,1)");
  }
  double lo = -13.0, hi = 13.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct SummaryStats {
  double median = 0.0;
  double iqr = 0.0;
};

// Lower-median / lower-quartile convention: deterministic order statistics.
SummaryStats summarize(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t k = values.size();
  SummaryStats s;
  s.median = values[(k - 1) / 2];
  s.iqr = values[3 * (k - 1) / 4] - values[(k - 1) / 4];
  return s;
}

RngStream rep_stream(std::uint64_t seed, std::uint64_t experiment, std::uint64_t grid_a,
                     std::uint64_t grid_b, std::uint64_t rep, std::uint64_t purpose) {
  RngStream s = derive_stream(seed, experiment);
  s = substream(s, grid_a);
  s = substream(s, grid_b);
  s = substream(s, rep);
  return substream(s, purpose);
}

template <typename F>
void parallel_replicates(long reps, int threads, F&& body) {
  threads = std::max(1, threads);
  if (threads == 1) {
    for (long r = 0; r < reps; ++r) body(r);
    return;
  }
  std::atomic<long> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      long r;
      while ((r = next.fetch_add(1)) < reps) body(r);
    });
  }
  for (auto& th : pool) th.join();
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

ParseError::ParseError(long line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

std::string format_double(double v) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, result.ptr);
}

double parse_double(const std::string& text, long line_for_error) {
  const std::string t = trim(text);
  double value = 0.0;
  const auto result = std::from_chars(t.data(), t.data() + t.size(), value);
  if (result.ec != std::errc{} || result.ptr != t.data() + t.size()) {
    throw ParseError(line_for_error, "cannot parse number '" + t + "'");
  }
  return value;
}

long Table::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return static_cast<long>(i);
  }
  return -1;
}

double Table::at(std::size_t row, const std::string& column) const {
  const long idx = column_index(column);
  if (idx < 0 || row >= rows.size()) {
    throw ValidationError(Fault::BadArgument, "table cell out of range: " + column);
  }
  return rows[row][idx];
}

std::string to_csv(const Table& table) {
  std::string out;
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (i) out += ',';
    out += table.columns[i];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_double(row[i]);
    }
    out += '\n';
  }
  return out;
}

Table parse_csv(const std::string& text) {
  Table table;
  std::istringstream in(text);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() && in.eof()) break;
    if (line_no == 1) {
      table.columns = split(trim(line), ',');
      if (table.columns.empty() || table.columns.front().empty()) {
        throw ParseError(1, "missing CSV header");
      }
      continue;
    }
    const auto cells = split(line, ',');
    if (cells.size() != table.columns.size()) {
      throw ParseError(line_no, "expected " + std::to_string(table.columns.size()) +
                                    " fields, found " + std::to_string(cells.size()));
    }
    std::vector<double> row(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) row[i] = parse_double(cells[i], line_no);
    table.rows.push_back(std::move(row));
  }
  if (table.columns.empty()) throw ParseError(1, "empty CSV document");
  return table;
}

void emit_csv(const Table& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << to_csv(table);
  if (!out) throw IoError("write failed: " + path);
}

Table read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

rates::FunctionClass SweepConfig::function_class() const {
  switch (class_kind) {
    case ClassKind::linear:
      return rates::LinearClass{d};
    case ClassKind::lipschitz:
      return rates::LipschitzClass{lipschitz_l};
    case ClassKind::convex_lipschitz:
      return rates::ConvexLipschitzClass{};
    case ClassKind::holder:
      return rates::HolderClass{holder_alpha};
  }
  throw ValidationError(Fault::BadArgument, "unknown class kind");
}

const char* to_string(Experiment e) {
  switch (e) {
    case Experiment::rate_sweep: return "rate_sweep";
    case Experiment::heterogeneity_sweep: return "heterogeneity_sweep";
    case Experiment::hyperplane_sweep: return "hyperplane_sweep";
    case Experiment::complexity_sweep: return "complexity_sweep";
  }
  return "?";
}

const char* to_string(ClassKind c) {
  switch (c) {
    case ClassKind::linear: return "linear";
    case ClassKind::lipschitz: return "lipschitz";
    case ClassKind::convex_lipschitz: return "convex_lipschitz";
    case ClassKind::holder: return "holder";
  }
  return "?";
}

namespace {

Experiment experiment_from(const std::string& s, long line) {
  if (s == "rate_sweep") return Experiment::rate_sweep;
  if (s == "heterogeneity_sweep") return Experiment::heterogeneity_sweep;
  if (s == "hyperplane_sweep") return Experiment::hyperplane_sweep;
  if (s == "complexity_sweep") return Experiment::complexity_sweep;
  throw ParseError(line, "unknown experiment '" + s + "'");
}

ClassKind class_from(const std::string& s, long line) {
  if (s == "linear") return ClassKind::linear;
  if (s == "lipschitz") return ClassKind::lipschitz;
  if (s == "convex_lipschitz") return ClassKind::convex_lipschitz;
  if (s == "holder") return ClassKind::holder;
  throw ParseError(line, "unknown class '" + s + "'");
}

std::vector<double> parse_double_list(const std::string& s, long line) {
  std::vector<double> out;
  for (const auto& cell : split(s, ',')) out.push_back(parse_double(cell, line));
  if (out.empty()) throw ParseError(line, "empty list");
  return out;
}

std::vector<long> parse_long_list(const std::string& s, long line) {
  std::vector<long> out;
  for (double v : parse_double_list(s, line)) {
    if (v != std::floor(v)) throw ParseError(line, "expected integers");
    out.push_back(static_cast<long>(v));
  }
  return out;
}

std::vector<Vec> parse_vector_list(const std::string& s, long line) {
  std::vector<Vec> out;
  for (const auto& part : split(s, ';')) {
    const auto values = parse_double_list(part, line);
    out.push_back(Eigen::Map<const Vec>(values.data(), static_cast<long>(values.size())));
  }
  return out;
}

std::string join_double_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v[i]);
  }
  return out;
}

std::string join_long_list(const std::vector<long>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

std::string join_vector_list(const std::vector<Vec>& vs) {
  std::string out;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (i) out += ';';
    for (long k = 0; k < vs[i].size(); ++k) {
      if (k) out += ',';
      out += format_double(vs[i][k]);
    }
  }
  return out;
}

}  // namespace

SweepConfig parse_config(const std::string& text) {
  SweepConfig cfg;
  cfg.gamma_grid.clear();

  enum class Section { top, mixture, hyperplane };
  Section section = Section::top;
  bool have_n_grid = false;
  bool have_gamma = false;

  // Raw section payloads assembled first, validated at the end.
  std::vector<double> mix_weights, mix_scales, hyp_weights;
  std::vector<Vec> mix_means, hyp_regressors;
  double hyp_nu = 1.0, hyp_zeta = 0.0;
  bool have_mixture = false, have_hyperplane = false;

  std::istringstream in(text);
  std::string raw;
  long line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      if (line == "[mixture]") {
        section = Section::mixture;
        have_mixture = true;
      } else if (line == "[hyperplane]") {
        section = Section::hyperplane;
        have_hyperplane = true;
      } else {
        throw ParseError(line_no, "unknown section " + line);
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(line_no, "empty key");

    if (section == Section::mixture) {
      if (key == "weights") mix_weights = parse_double_list(value, line_no);
      else if (key == "scales") mix_scales = parse_double_list(value, line_no);
      else if (key == "means") mix_means = parse_vector_list(value, line_no);
      else throw ParseError(line_no, "unknown key '" + key + "' in [mixture]");
      continue;
    }
    if (section == Section::hyperplane) {
      if (key == "weights") hyp_weights = parse_double_list(value, line_no);
      else if (key == "regressors") hyp_regressors = parse_vector_list(value, line_no);
      else if (key == "nu") hyp_nu = parse_double(value, line_no);
      else if (key == "zeta") hyp_zeta = parse_double(value, line_no);
      else throw ParseError(line_no, "unknown key '" + key + "' in [hyperplane]");
      continue;
    }

    if (key == "experiment") cfg.experiment = experiment_from(value, line_no);
    else if (key == "class") cfg.class_kind = class_from(value, line_no);
    else if (key == "n_grid") { cfg.n_grid = parse_long_list(value, line_no); have_n_grid = true; }
    else if (key == "gamma_grid") { cfg.gamma_grid = parse_double_list(value, line_no); have_gamma = true; }
    else if (key == "delta_w_grid") cfg.delta_w_grid = parse_double_list(value, line_no);
    else if (key == "gamma_mode") {
      if (value == "grid") cfg.gamma_mode = GammaMode::grid;
      else if (value == "threshold") cfg.gamma_mode = GammaMode::threshold;
      else throw ParseError(line_no, "gamma_mode must be grid or threshold");
    }
    else if (key == "replicates") cfg.replicates = static_cast<long>(parse_double(value, line_no));
    else if (key == "seed") {
      std::uint64_t seed = 0;
      const std::string t = trim(value);
      const auto res = std::from_chars(t.data(), t.data() + t.size(), seed);
      if (res.ec != std::errc{} || res.ptr != t.data() + t.size()) {
        throw ParseError(line_no, "cannot parse seed '" + t + "'");
      }
      cfg.seed = seed;
    }
    else if (key == "zeta") cfg.zeta = parse_double(value, line_no);
    else if (key == "nu") cfg.nu = parse_double(value, line_no);
    else if (key == "d") cfg.d = static_cast<int>(parse_double(value, line_no));
    else if (key == "lipschitz_l") cfg.lipschitz_l = parse_double(value, line_no);
    else if (key == "holder_alpha") cfg.holder_alpha = parse_double(value, line_no);
    else if (key == "rate_multiplier") cfg.rate_multiplier = parse_double(value, line_no);
    else if (key == "cnoise") cfg.cnoise = parse_double(value, line_no);
    else if (key == "cbias") cfg.cbias = parse_double(value, line_no);
    else if (key == "fail_prob") cfg.fail_prob = parse_double(value, line_no);
    else if (key == "cov_mean") cfg.cov_mean = parse_double(value, line_no);
    else if (key == "cov_scale") cfg.cov_scale = parse_double(value, line_no);
    else if (key == "draws") cfg.draws = static_cast<long>(parse_double(value, line_no));
    else if (key == "w2") cfg.w2 = parse_double(value, line_no);
    else if (key == "w1") cfg.w1 = parse_double(value, line_no);
    else if (key == "gc_delta") cfg.gc_delta = parse_double(value, line_no);
    else throw ParseError(line_no, "unknown key '" + key + "'");
  }

  if (!have_n_grid) throw ParseError(line_no, "missing required field n_grid");
  for (std::size_t i = 0; i + 1 < cfg.n_grid.size(); ++i) {
    if (cfg.n_grid[i] >= cfg.n_grid[i + 1]) {
      throw ParseError(line_no, "n_grid must be strictly increasing");
    }
  }
  if (cfg.n_grid.empty() || cfg.n_grid.front() < 1) {
    throw ParseError(line_no, "n_grid entries must be >= 1");
  }
  if (cfg.replicates < 1) throw ParseError(line_no, "replicates must be >= 1");
  if (!have_gamma) cfg.gamma_grid = {0.0};
  if (cfg.experiment == Experiment::heterogeneity_sweep && !have_gamma &&
      cfg.gamma_mode == GammaMode::grid) {
    throw ParseError(line_no, "missing required field gamma_grid");
  }
  if (cfg.experiment == Experiment::hyperplane_sweep && cfg.delta_w_grid.empty()) {
    throw ParseError(line_no, "missing required field delta_w_grid");
  }

  if (have_mixture) {
    MixtureModel m;
    if (mix_means.empty()) throw ParseError(line_no, "[mixture] needs means");
    if (mix_scales.size() != mix_means.size() || mix_weights.size() != mix_means.size()) {
      throw ParseError(line_no, "[mixture] weights/means/scales must align");
    }
    for (std::size_t j = 0; j < mix_means.size(); ++j) {
      m.components.push_back({mix_means[j], mix_scales[j]});
    }
    m.weights = mix_weights;
    validate_mixture(m);
    cfg.mixture = std::move(m);
  }
  if (have_hyperplane) {
    HyperplaneMixture h;
    h.nu = hyp_nu;
    h.zeta = hyp_zeta;
    h.regressors = hyp_regressors;
    h.weights = hyp_weights;
    validate_hyperplane(h);
    cfg.hyperplane = std::move(h);
  }
  return cfg;
}

SweepConfig read_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string write_config(const SweepConfig& cfg) {
  std::string out;
  out += "experiment = " + std::string(to_string(cfg.experiment)) + "\n";
  out += "class = " + std::string(to_string(cfg.class_kind)) + "\n";
  out += "n_grid = " + join_long_list(cfg.n_grid) + "\n";
  out += "gamma_grid = " + join_double_list(cfg.gamma_grid) + "\n";
  if (!cfg.delta_w_grid.empty()) {
    out += "delta_w_grid = " + join_double_list(cfg.delta_w_grid) + "\n";
  }
  out += "gamma_mode = ";
  out += (cfg.gamma_mode == GammaMode::grid ? "grid" : "threshold");
  out += "\n";
  out += "replicates = " + std::to_string(cfg.replicates) + "\n";
  out += "seed = " + std::to_string(cfg.seed) + "\n";
  out += "zeta = " + format_double(cfg.zeta) + "\n";
  out += "nu = " + format_double(cfg.nu) + "\n";
  out += "d = " + std::to_string(cfg.d) + "\n";
  out += "lipschitz_l = " + format_double(cfg.lipschitz_l) + "\n";
  out += "holder_alpha = " + format_double(cfg.holder_alpha) + "\n";
  out += "rate_multiplier = " + format_double(cfg.rate_multiplier) + "\n";
  out += "cnoise = " + format_double(cfg.cnoise) + "\n";
  out += "cbias = " + format_double(cfg.cbias) + "\n";
  out += "fail_prob = " + format_double(cfg.fail_prob) + "\n";
  out += "cov_mean = " + format_double(cfg.cov_mean) + "\n";
  out += "cov_scale = " + format_double(cfg.cov_scale) + "\n";
  out += "draws = " + std::to_string(cfg.draws) + "\n";
  out += "w2 = " + format_double(cfg.w2) + "\n";
  out += "w1 = " + format_double(cfg.w1) + "\n";
  out += "gc_delta = " + format_double(cfg.gc_delta) + "\n";
  if (cfg.mixture) {
    out += "\n[mixture]\n";
    std::vector<double> scales;
    std::vector<Vec> means;
    for (const auto& c : cfg.mixture->components) {
      scales.push_back(c.scale);
      means.push_back(c.mean);
    }
    out += "weights = " + join_double_list(cfg.mixture->weights) + "\n";
    out += "scales = " + join_double_list(scales) + "\n";
    out += "means = " + join_vector_list(means) + "\n";
  }
  if (cfg.hyperplane) {
    out += "\n[hyperplane]\n";
    out += "nu = " + format_double(cfg.hyperplane->nu) + "\n";
    out += "zeta = " + format_double(cfg.hyperplane->zeta) + "\n";
    out += "weights = " + join_double_list(cfg.hyperplane->weights) + "\n";
    out += "regressors = " + join_vector_list(cfg.hyperplane->regressors) + "\n";
  }
  return out;
}

RateFit fit_rate_exponent(const Table& rows, const std::string& x_col,
                          const std::string& y_col) {
  const long xi = rows.column_index(x_col);
  const long yi = rows.column_index(y_col);
  if (xi < 0 || yi < 0) {
    throw ValidationError(Fault::BadArgument, "unknown column for rate fit");
  }
  std::vector<double> lx, ly;
  for (const auto& row : rows.rows) {
    const double x = row[xi];
    const double y = row[yi];
    if (!(x > 0.0) || !(y > 0.0)) {
      throw ValidationError(Fault::NonPositiveValue,
                            "rate fitting needs strictly positive values");
    }
    lx.push_back(std::log(x));
    ly.push_back(std::log(y));
  }
  if (lx.size() < 2) {
    throw ValidationError(Fault::Empty, "rate fitting needs at least two rows");
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx == 0.0) {
    throw ValidationError(Fault::BadArgument, "rate fitting needs distinct x values");
  }
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.points = static_cast<long>(lx.size());
  double ss_res = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
    ss_res += r * r;
  }
  fit.r2 = syy == 0.0 ? 1.0 : std::max(0.0, 1.0 - ss_res / syy);
  return fit;
}

double TruncatedPairFamily::component_pdf(int j, double x) const {
  if (x < 0.0 || x > 1.0) return 0.0;
  const double mu = center + (j == 0 ? -0.5 : 0.5) * gap;
  const double z = normal_cdf((1.0 - mu) / scale) - normal_cdf((0.0 - mu) / scale);
  const double t = (x - mu) / scale;
  return std::exp(-0.5 * t * t) / (scale * std::sqrt(2.0 * std::numbers::pi) * z);
}

double TruncatedPairFamily::mixture_pdf(double x) const {
  return 0.5 * component_pdf(0, x) + 0.5 * component_pdf(1, x);
}

double TruncatedPairFamily::sample(int j, Rng& gen) const {
  const double mu = center + (j == 0 ? -0.5 : 0.5) * gap;
  for (long attempt = 0; attempt < 1000000; ++attempt) {
    const double v = mu + scale * gen.normal();
    if (v >= 0.0 && v <= 1.0) return v;
  }
  throw NoConvergence("truncated sampling rejection loop stalled");
}

double TruncatedPairFamily::gamma() const {
  if (gap == 0.0) return 0.0;
  const auto p = [&](double x) { return component_pdf(0, x); };
  const auto q = [&](double x) { return mixture_pdf(x); };
  return mixtures::tv_distance_1d(p, q, 0.0, 1.0, 1e-7);
}

double calibrate_gap_truncated(double center, double scale, double target_gamma) {
  if (target_gamma < 0.0) throw ValidationError(Fault::BadArgument, "gamma must be >= 0");
  if (target_gamma == 0.0) return 0.0;
  TruncatedPairFamily family{center, scale, kTruncGapMax};
  if (family.gamma() < target_gamma) {
    throw ValidationError(Fault::BadArgument,
                          "target gamma exceeds the calibratable range of the family");
  }
  double lo = 0.0, hi = kTruncGapMax;
  for (int it = 0; it < 60; ++it) {
    family.gap = 0.5 * (lo + hi);
    const double g = family.gamma();
    if (std::abs(g - target_gamma) <= kGammaCalTol) return family.gap;
    (g < target_gamma ? lo : hi) = family.gap;
  }
  return 0.5 * (lo + hi);
}

double calibrate_gap_gaussian(double target_gamma) {
  if (target_gamma < 0.0 || target_gamma >= 0.5) {
    throw ValidationError(Fault::BadArgument,
                          "equal-weight pair gamma must lie in [0, 0.5)");
  }
  if (target_gamma == 0.0) return 0.0;
  // gamma = Phi(gap/2) - 1/2 for unit-scale components split along one axis.
  return 2.0 * probit(target_gamma + 0.5);
}

namespace {

// In-class reference functions. The Lipschitz fixture l*x*(1-x) has
// derivative l*(1-2x), so its Lipschitz constant is exactly l while the
// slope caps stay inactive away from the endpoints; a fixture with
// saturated slopes would be an extreme point of the class and make the
// estimator superefficient (noisy, bimodal error distributions). The
// convex fixture is a smoothed V whose slope runs from -1 to +1, the
// largest slope variation the class admits: it maximizes the effective
// degrees of freedom of the fit, which keeps the replicate error
// distribution concentrated at desk-scale n.
double nonparam_fixture(ClassKind kind, double l, double x) {
  if (kind == ClassKind::lipschitz) return l * x * (1.0 - x);
  constexpr double kKink = 0.5;
  constexpr double kSmooth = 0.02;
  return std::sqrt((x - kKink) * (x - kKink) + kSmooth * kSmooth) -
         std::sqrt(kKink * kKink + kSmooth * kSmooth);
}

struct ArmStreams {
  Rng cov;
  Rng assign;
  Rng noise;
};

ArmStreams make_streams(const SweepConfig& cfg, std::uint64_t grid_a, std::uint64_t grid_b,
                        long rep) {
  const auto exp_id = static_cast<std::uint64_t>(cfg.experiment);
  return ArmStreams{
      Rng(rep_stream(cfg.seed, exp_id, grid_a, grid_b, static_cast<std::uint64_t>(rep), 0)),
      Rng(rep_stream(cfg.seed, exp_id, grid_a, grid_b, static_cast<std::uint64_t>(rep), 1)),
      Rng(rep_stream(cfg.seed, exp_id, grid_a, grid_b, static_cast<std::uint64_t>(rep), 2)),
  };
}

// One linear-regression replicate on the (possibly mixed) d-dimensional
// covariate distribution; base_arm pins component 0.
double linear_replicate(const SweepConfig& cfg, double gap, long n, ArmStreams& streams,
                        bool base_arm) {
  const int d = cfg.d;
  const Vec theta_star = Vec::Ones(d);
  Mat x(n, d);
  const std::vector<double> weights{0.5, 0.5};
  for (long i = 0; i < n; ++i) {
    int j = streams.assign.categorical(weights);
    if (base_arm) j = 0;
    const double shift = (j == 0 ? -0.5 : 0.5) * gap;
    for (int k = 0; k < d; ++k) {
      x(i, k) = (k == 0 ? shift : 0.0) + streams.cov.normal();
    }
  }
  Vec y = x * theta_star;
  for (long i = 0; i < n; ++i) y[i] += cfg.zeta * streams.noise.normal();
  const FittedFn fit = regress::fit_linear_ls(Dataset{x, y, std::nullopt});
  const Vec diff = fit.linear().theta - theta_star;
  return (x * diff).squaredNorm() / static_cast<double>(n);
}

double nonparam_replicate(const SweepConfig& cfg, const TruncatedPairFamily& family, long n,
                          ArmStreams& streams, bool base_arm) {
  Mat x(n, 1);
  Vec y(n);
  const std::vector<double> weights{0.5, 0.5};
  for (long i = 0; i < n; ++i) {
    int j = streams.assign.categorical(weights);
    if (base_arm) j = 0;
    x(i, 0) = family.sample(j, streams.cov);
    y[i] = nonparam_fixture(cfg.class_kind, cfg.lipschitz_l, x(i, 0)) +
           cfg.zeta * streams.noise.normal();
  }
  const Dataset data{x, y, std::nullopt};
  const FittedFn fit = cfg.class_kind == ClassKind::lipschitz
                           ? regress::fit_lipschitz(data, cfg.lipschitz_l, kFitTol)
                           : regress::fit_convex_lipschitz(data, kFitTol);
  const auto f_star = [&](double v) {
    return nonparam_fixture(cfg.class_kind, cfg.lipschitz_l, v);
  };
  return regress::insample_error(fit, f_star, x.col(0));
}

double sweep_gap_for_gamma(const SweepConfig& cfg, double gamma) {
  if (gamma == 0.0) return 0.0;
  if (cfg.class_kind == ClassKind::linear) return calibrate_gap_gaussian(gamma);
  return calibrate_gap_truncated(cfg.cov_mean, cfg.cov_scale, gamma);
}

void check_sweep_config(const SweepConfig& cfg, bool needs_estimator) {
  if (cfg.n_grid.empty()) {
    throw ValidationError(Fault::Empty, "n_grid must be nonempty");
  }
  if (cfg.replicates < 1) {
    throw ValidationError(Fault::BadArgument, "replicates must be >= 1");
  }
  if (needs_estimator && cfg.class_kind == ClassKind::holder) {
    throw ValidationError(Fault::BadArgument,
                          "no fitting procedure for general Holder classes; "
                          "only rate calculators cover them");
  }
}

}  // namespace

Table run_rate_sweep(const SweepConfig& cfg, int threads) {
  check_sweep_config(cfg, true);
  Table table;
  table.columns = {"n", "gamma", "median_error", "iqr", "replicates"};
  for (std::size_t gi = 0; gi < cfg.gamma_grid.size(); ++gi) {
    const double gamma = cfg.gamma_grid[gi];
    const double gap = sweep_gap_for_gamma(cfg, gamma);
    TruncatedPairFamily family{cfg.cov_mean, cfg.cov_scale, gap};
    for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni) {
      const long n = cfg.n_grid[ni];
      std::vector<double> errors(cfg.replicates);
      parallel_replicates(cfg.replicates, threads, [&](long rep) {
        // Streams are keyed without the n index: grid points reuse the
        // same replicate draws as nested prefixes (common random
        // numbers), which smooths the fitted log-log rate lines.
        ArmStreams streams = make_streams(cfg, gi, 0, rep);
        errors[rep] = cfg.class_kind == ClassKind::linear
                          ? linear_replicate(cfg, gap, n, streams, false)
                          : nonparam_replicate(cfg, family, n, streams, false);
      });
      const SummaryStats stats = summarize(errors);
      table.rows.push_back({static_cast<double>(n), gamma, stats.median, stats.iqr,
                            static_cast<double>(cfg.replicates)});
    }
  }
  return table;
}

Table run_heterogeneity_sweep(const SweepConfig& cfg, int threads) {
  check_sweep_config(cfg, true);
  Table table;
  table.columns = {"n", "gamma", "error_mixture", "error_base", "ratio"};
  for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni) {
    const long n = cfg.n_grid[ni];
    std::vector<double> gammas = cfg.gamma_grid;
    if (cfg.gamma_mode == GammaMode::threshold) {
      gammas = {rates::gamma_threshold(cfg.function_class(), cfg.zeta, n)};
    }
    for (std::size_t gi = 0; gi < gammas.size(); ++gi) {
      const double gamma = gammas[gi];
      const double gap = sweep_gap_for_gamma(cfg, gamma);
      TruncatedPairFamily family{cfg.cov_mean, cfg.cov_scale, gap};
      std::vector<double> mix_err(cfg.replicates), base_err(cfg.replicates);
      parallel_replicates(cfg.replicates, threads, [&](long rep) {
        // Paired seeding: both arms re-open identical streams, so the
        // gamma = 0 arms observe byte-identical data. The n index stays
        // out of the key so grid points share replicate draws.
        ArmStreams mix_streams = make_streams(cfg, gi, 0, rep);
        mix_err[rep] = cfg.class_kind == ClassKind::linear
                           ? linear_replicate(cfg, gap, n, mix_streams, false)
                           : nonparam_replicate(cfg, family, n, mix_streams, false);
        ArmStreams base_streams = make_streams(cfg, gi, 0, rep);
        base_err[rep] = cfg.class_kind == ClassKind::linear
                            ? linear_replicate(cfg, gap, n, base_streams, true)
                            : nonparam_replicate(cfg, family, n, base_streams, true);
      });
      const double med_mix = summarize(mix_err).median;
      const double med_base = summarize(base_err).median;
      table.rows.push_back({static_cast<double>(n), gamma, med_mix, med_base,
                            med_mix / med_base});
    }
  }
  return table;
}

Table run_hyperplane_sweep(const SweepConfig& cfg, int threads) {
  check_sweep_config(cfg, false);
  if (cfg.delta_w_grid.empty()) {
    throw ValidationError(Fault::Empty, "delta_w_grid must be nonempty");
  }
  Table table;
  table.columns = {"n",     "delta_w",           "excess_risk_median",
                   "bound", "frac_within_bound", "base_excess_median"};
  const int d = cfg.d;
  for (std::size_t wi = 0; wi < cfg.delta_w_grid.size(); ++wi) {
    const double dw = cfg.delta_w_grid[wi];
    HyperplaneMixture h;
    h.nu = cfg.nu;
    h.zeta = cfg.zeta;
    Vec w0 = Vec::Zero(d), w1 = Vec::Zero(d);
    w0[0] = 0.5 * dw;
    w1[0] = -0.5 * dw;
    h.regressors = {w0, w1};
    h.weights = {0.5, 0.5};
    HyperplaneMixture h_base;
    h_base.nu = cfg.nu;
    h_base.zeta = cfg.zeta;
    h_base.regressors = {w0};
    h_base.weights = {1.0};

    for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni) {
      const long n = cfg.n_grid[ni];
      std::vector<double> excess(cfg.replicates), base_excess(cfg.replicates);
      parallel_replicates(cfg.replicates, threads, [&](long rep) {
        ArmStreams streams = make_streams(cfg, wi, 0, rep);
        Mat x(n, d);
        Vec y_mix(n), y_base(n);
        const std::vector<double> weights{0.5, 0.5};
        for (long i = 0; i < n; ++i) {
          for (int k = 0; k < d; ++k) x(i, k) = cfg.nu * streams.cov.normal();
          const int j = streams.assign.categorical(weights);
          const double noise = cfg.zeta * streams.noise.normal();
          const Vec& w = j == 0 ? w0 : w1;
          y_mix[i] = x.row(i).dot(w) + noise;
          y_base[i] = x.row(i).dot(w0) + noise;
        }
        const auto fit_mix = regress::fit_hyperplane_erm(Dataset{x, y_mix, std::nullopt});
        excess[rep] = regress::excess_risk_hyperplane(fit_mix.w_hat, h).excess_risk;
        const auto fit_base = regress::fit_hyperplane_erm(Dataset{x, y_base, std::nullopt});
        base_excess[rep] =
            regress::excess_risk_hyperplane(fit_base.w_hat, h_base).excess_risk;
      });
      double bound = std::numeric_limits<double>::quiet_NaN();
      double frac = std::numeric_limits<double>::quiet_NaN();
      try {
        bound = rates::hyperplane_error_bound(cfg.zeta, d, n, cfg.fail_prob, cfg.nu, dw,
                                              cfg.cnoise, cfg.cbias);
        long within = 0;
        for (double e : excess) {
          if (e <= bound) ++within;
        }
        frac = static_cast<double>(within) / static_cast<double>(cfg.replicates);
      } catch (const ValidationError&) {
        // n below the sample requirement: report NaN bound, no coverage.
      }
      table.rows.push_back({static_cast<double>(n), dw, summarize(excess).median, bound,
                            frac, summarize(base_excess).median});
    }
  }
  return table;
}

Table run_complexity_sweep(const SweepConfig& cfg, int threads) {
  check_sweep_config(cfg, false);
  (void)threads;  // the inner estimators are already draw-parallel safe
  Table table;
  table.columns = {"n",      "rad_l2",        "rad_l2_se", "rad_l2_bound",
                   "rad_l1", "rad_l1_se",     "rad_l1_bound",
                   "gc_linear", "gc_linear_se"};
  const auto exp_id = static_cast<std::uint64_t>(cfg.experiment);
  for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni) {
    const long n = cfg.n_grid[ni];
    Mat x;
    if (cfg.mixture) {
      x = mixtures::sample_covariates(*cfg.mixture, n,
                                      rep_stream(cfg.seed, exp_id, 0, ni, 0, 0))
              .x;
    } else {
      Rng gen(rep_stream(cfg.seed, exp_id, 0, ni, 0, 0));
      x.resize(n, cfg.d);
      for (long i = 0; i < n; ++i) {
        for (int k = 0; k < cfg.d; ++k) x(i, k) = gen.normal();
      }
    }
    const auto l2 = complexity::rademacher_l2(
        x, cfg.w2, cfg.draws, rep_stream(cfg.seed, exp_id, 1, ni, 0, 1));
    const auto l1 = complexity::rademacher_l1(
        x, cfg.w1, cfg.draws, rep_stream(cfg.seed, exp_id, 2, ni, 0, 2));
    const auto gc = complexity::local_gc_linear(
        x, cfg.gc_delta, cfg.draws, rep_stream(cfg.seed, exp_id, 3, ni, 0, 3));
    double r_max = 0.0, xinf = 0.0;
    for (long i = 0; i < n; ++i) {
      r_max = std::max(r_max, x.row(i).norm());
      xinf = std::max(xinf, x.row(i).lpNorm<Eigen::Infinity>());
    }
    const double l2_bound =
        complexity::rademacher_bound(complexity::L2Case{cfg.w2, r_max}, n);
    const double l1_bound = complexity::rademacher_bound(
        complexity::L1Case{cfg.w1, xinf, static_cast<int>(x.cols())}, n);
    table.rows.push_back({static_cast<double>(n), l2.value, l2.std_error, l2_bound,
                          l1.value, l1.std_error, l1_bound, gc.value, gc.std_error});
  }
  return table;
}

Table run_sweep(const SweepConfig& cfg, int threads) {
  switch (cfg.experiment) {
    case Experiment::rate_sweep: return run_rate_sweep(cfg, threads);
    case Experiment::heterogeneity_sweep: return run_heterogeneity_sweep(cfg, threads);
    case Experiment::hyperplane_sweep: return run_hyperplane_sweep(cfg, threads);
    case Experiment::complexity_sweep: return run_complexity_sweep(cfg, threads);
  }
  throw ValidationError(Fault::BadArgument, "unknown experiment");
}

namespace {

struct SlopeBand {
  double target;
  double tol;
};

SlopeBand slope_band(ClassKind kind, double alpha) {
  switch (kind) {
    case ClassKind::linear: return {-1.0, 0.15};
    case ClassKind::lipschitz: return {-2.0 / 3.0, 0.15};
    case ClassKind::convex_lipschitz: return {-0.8, 0.2};
    case ClassKind::holder: return {-2.0 * alpha / (1.0 + 2.0 * alpha), 0.2};
  }
  return {0.0, 0.0};
}

void append_detail(std::string& detail, const std::string& piece) {
  if (!detail.empty()) detail += "; ";
  detail += piece;
}

}  // namespace

CheckResult check_sweep(const SweepConfig& cfg, const Table& table) {
  CheckResult result;
  if (cfg.experiment == Experiment::rate_sweep) {
    Table homogeneous;
    homogeneous.columns = table.columns;
    for (const auto& row : table.rows) {
      if (row[table.column_index("gamma")] == 0.0) homogeneous.rows.push_back(row);
    }
    if (homogeneous.rows.size() < 2) {
      append_detail(result.detail, "no homogeneous points to fit; slope check skipped");
      return result;
    }
    const RateFit fit = fit_rate_exponent(homogeneous, "n", "median_error");
    const SlopeBand band = slope_band(cfg.class_kind, cfg.holder_alpha);
    const bool slope_ok = std::abs(fit.slope - band.target) <= band.tol;
    const bool r2_ok = fit.r2 >= 0.98;
    result.pass = slope_ok && r2_ok;
    append_detail(result.detail,
                  "slope " + format_double(fit.slope) + " vs " + format_double(band.target) +
                      " +/- " + format_double(band.tol) + ", r2 " + format_double(fit.r2));
    return result;
  }

  if (cfg.experiment == Experiment::heterogeneity_sweep) {
    for (const auto& row : table.rows) {
      const double gamma = row[table.column_index("gamma")];
      const double ratio = row[table.column_index("ratio")];
      if (!(ratio <= 4.0)) {
        result.pass = false;
        append_detail(result.detail, "ratio " + format_double(ratio) + " > 4 at n=" +
                                         format_double(row[table.column_index("n")]));
      }
      if (gamma == 0.0 && ratio != 1.0) {
        result.pass = false;
        append_detail(result.detail, "paired gamma=0 ratio is " + format_double(ratio));
      }
    }
    if (result.pass) append_detail(result.detail, "all ratios <= 4");
    return result;
  }

  if (cfg.experiment == Experiment::hyperplane_sweep) {
    // Group rows per delta_w arm.
    std::map<double, Table> arms;
    for (const auto& row : table.rows) {
      Table& arm = arms[row[table.column_index("delta_w")]];
      arm.columns = table.columns;
      arm.rows.push_back(row);
    }
    for (auto& [dw, arm] : arms) {
      if (arm.rows.size() >= 2) {
        const RateFit fit = fit_rate_exponent(arm, "n", "excess_risk_median");
        if (std::abs(fit.slope + 1.0) > 0.2) {
          result.pass = false;
          append_detail(result.detail, "delta_w=" + format_double(dw) + " slope " +
                                           format_double(fit.slope) + " outside -1 +/- 0.2");
        } else {
          append_detail(result.detail, "delta_w=" + format_double(dw) + " slope " +
                                           format_double(fit.slope));
        }
      }
      const double threshold = rates::delta_w_threshold(cfg.zeta, cfg.nu);
      for (const auto& row : arm.rows) {
        const double frac = row[table.column_index("frac_within_bound")];
        if (std::isfinite(frac) && frac < 0.95) {
          result.pass = false;
          append_detail(result.detail,
                        "bound coverage " + format_double(frac) + " < 0.95 at n=" +
                            format_double(row[table.column_index("n")]));
        }
        if (dw <= threshold + 1e-12) {
          const double mix = row[table.column_index("excess_risk_median")];
          const double base = row[table.column_index("base_excess_median")];
          if (!(mix <= 4.0 * base)) {
            result.pass = false;
            append_detail(result.detail,
                          "mixture/base excess ratio " + format_double(mix / base) +
                              " > 4 below the delta_w threshold");
          }
        }
      }
    }
    return result;
  }

  // complexity_sweep: estimates must respect the closed-form bounds.
  for (const auto& row : table.rows) {
    const double l2 = row[table.column_index("rad_l2")];
    const double l2_slack = 3.0 * row[table.column_index("rad_l2_se")];
    if (l2 > row[table.column_index("rad_l2_bound")] + l2_slack) {
      result.pass = false;
      append_detail(result.detail, "rademacher_l2 exceeds its bound");
    }
    if (cfg.d >= 2 || (cfg.mixture && cfg.mixture->dim() >= 2)) {
      const double l1 = row[table.column_index("rad_l1")];
      const double l1_slack = 3.0 * row[table.column_index("rad_l1_se")];
      if (l1 > row[table.column_index("rad_l1_bound")] + l1_slack) {
        result.pass = false;
        append_detail(result.detail, "rademacher_l1 exceeds its bound");
      }
    }
  }
  if (result.pass) append_detail(result.detail, "estimates within bounds");
  return result;
}

void write_manifest(const std::string& csv_path, const SweepConfig& cfg,
                    double wall_seconds) {
  nlohmann::json manifest;
  const std::string canonical = write_config(cfg);
  char hash_hex[32];
  const auto res =
      std::to_chars(hash_hex, hash_hex + sizeof(hash_hex), fnv1a(canonical), 16);
  manifest["config_hash"] = "fnv1a:" + std::string(hash_hex, res.ptr);
  manifest["seed"] = cfg.seed;
  manifest["experiment"] = to_string(cfg.experiment);
  manifest["version"] = "0.1.0";
  manifest["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." +
                              std::to_string(EIGEN_MAJOR_VERSION) + "." +
                              std::to_string(EIGEN_MINOR_VERSION);
  manifest["wall_time_seconds"] = wall_seconds;
  manifest["output"] = csv_path;
  manifest["notes"] =
      "ratio assertions use a fixed multiplier of 4; the underlying order "
      "statements leave their constants unspecified";
  std::ofstream out(csv_path + ".manifest.json", std::ios::binary);
  if (!out) throw IoError("cannot write manifest for " + csv_path);
  out << manifest.dump(2) << "\n";
}

}  // namespace mixlearn::bench
