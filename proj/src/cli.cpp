#include "emgm/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "emgm/deviation.hpp"
#include "emgm/experiments.hpp"
#include "emgm/rng.hpp"

namespace emgm {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Kind { kInt, kSeed, kDouble, kString, kIntList, kDoubleList, kStringList };

struct KeyInfo {
  Kind kind;
  const char* help;
};

const std::map<std::string, KeyInfo>& key_table() {
  static const std::map<std::string, KeyInfo> table = {
      {"d", {Kind::kIntList, "dimension (comma-separated list for sweeps)"}},
      {"s", {Kind::kDoubleList, "signal strength ||theta*||, along the first axis (list for sweeps)"}},
      {"n", {Kind::kIntList, "sample size (list for sweeps)"}},
      {"replicates", {Kind::kInt, "Monte Carlo replicates per grid point"}},
      {"seed", {Kind::kSeed, "master seed"}},
      {"init", {Kind::kString, "initializer: random, spectral, fixed or zero"}},
      {"c0", {Kind::kDouble, "radius constant of the random-sphere initializer"}},
      {"theta0", {Kind::kDoubleList, "starting point, comma-separated"}},
      {"max-iters", {Kind::kInt, "iteration cap (default ceil(c-iter * sqrt(n)))"}},
      {"c-iter", {Kind::kDouble, "constant of the default iteration cap"}},
      {"rel-tol", {Kind::kDouble, "relative step tolerance"}},
      {"threads", {Kind::kInt, "worker threads, 0 for one per core"}},
      {"out", {Kind::kString, "output directory"}},
      {"steps", {Kind::kInt, "number of iterations"}},
      {"alpha0", {Kind::kDouble, "initial signal coordinate"}},
      {"beta0", {Kind::kDouble, "initial orthogonal coordinate"}},
      {"w", {Kind::kDouble, "relative Lipschitz constant of the sandwich"}},
      {"burn-in", {Kind::kInt, "EM steps before the probe window"}},
      {"extra", {Kind::kInt, "length of the probe window"}},
      {"directions", {Kind::kInt, "probe directions"}},
      {"radii", {Kind::kInt, "probe radii per direction"}},
      {"estimators", {Kind::kStringList, "estimators to compare: em, spectral, zero"}},
  };
  return table;
}

struct Command {
  const char* name;
  const char* description;
  json defaults;
};

const std::vector<Command>& commands() {
  static const std::vector<Command> list = {
      {"trajectory",
       "One sample EM run, every step written out",
       {{"d", {1}}, {"s", {1.0}}, {"n", {10000}}, {"seed", 0}, {"init", "random"}, {"c0", 1.0},
        {"c-iter", 10.0}, {"rel-tol", 1e-8}, {"out", "out"}}},
      {"rate-sweep",
       "Final EM loss over a grid of (n, d, s) with log-log slope fits",
       {{"d", {1}}, {"s", {1.0}}, {"n", {1000, 10000, 100000}}, {"replicates", 20}, {"seed", 0},
        {"init", "random"}, {"c0", 1.0}, {"c-iter", 10.0}, {"rel-tol", 1e-8}, {"threads", 0}, {"out", "out"}}},
      {"risk-compare",
       "Monte Carlo risk of EM, the spectral estimator and zero",
       {{"d", {10}}, {"s", {0.1, 0.3, 1.0}}, {"n", {100000}}, {"replicates", 100}, {"seed", 0},
        {"init", "random"}, {"c0", 1.0}, {"c-iter", 10.0}, {"rel-tol", 1e-8}, {"threads", 0},
        {"estimators", {"em", "spectral", "zero"}}, {"out", "out"}}},
      {"population",
       "Population EM in (alpha, beta) coordinates",
       {{"s", {0.35}}, {"alpha0", 0.1}, {"beta0", 0.7}, {"steps", 60}, {"seed", 0}, {"out", "out"}}},
      {"sandwich",
       "Upper and lower sandwich sequences of the 1-D population map",
       {{"s", {1.0}}, {"theta0", {0.5}}, {"w", 0.05}, {"steps", 100}, {"seed", 0}, {"out", "out"}}},
      {"deviation",
       "Relative Lipschitz deviation between sample and population maps",
       {{"d", {2}}, {"s", {1.0}}, {"n", {10000}}, {"directions", 32}, {"radii", 24}, {"seed", 0}, {"out", "out"}}},
      {"mle-probe",
       "Contraction ratios of EM towards its limit",
       {{"d", {2}}, {"s", {1.0}}, {"n", {100000}}, {"seed", 0}, {"init", "random"}, {"c0", 1.0},
        {"burn-in", 5}, {"extra", 20}, {"out", "out"}}},
      {"figure2", "Population runs from (0.1, 0.7) and (0.1, 0.1) at s = 0.35", {{"seed", 0}, {"out", "out"}}},
      {"sublinear", "1-D population EM at s = 0 and its log-log slope", {{"steps", 10000}, {"seed", 0}, {"out", "out"}}},
  };
  return list;
}

std::string in_quotes(std::string_view s) { return "\"" + std::string(s) + "\""; }

[[noreturn]] void bad_value(const std::string& where, const char* expected, const std::string& got) {
  throw ValidationError(where + ": expected " + expected + ", got " + got);
}

std::int64_t parse_integer(const std::string& where, std::string_view text) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec == std::errc() && ptr == text.data() + text.size()) return v;
  // Accept integral values written in floating-point form, such as 1e6.
  char* end = nullptr;
  const std::string owned(text);
  const double x = std::strtod(owned.c_str(), &end);
  if (!owned.empty() && *end == '\0' && std::isfinite(x) && x == std::floor(x) && std::abs(x) <= 0x1p53)
    return static_cast<std::int64_t>(x);
  bad_value(where, "an integer", in_quotes(text));
}

double parse_double(const std::string& where, std::string_view text) {
  const std::string owned(text);
  char* end = nullptr;
  const double x = std::strtod(owned.c_str(), &end);
  if (owned.empty() || *end != '\0' || !std::isfinite(x)) bad_value(where, "a finite number", in_quotes(text));
  return x;
}

std::vector<std::string> split(std::string_view text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    parts.emplace_back(text.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return parts;
}

// Flag text → canonical JSON value.
json from_flag(const std::string& key, Kind kind, const std::string& text) {
  const std::string where = "--" + key;
  auto list = [&](auto parse) {
    json arr = json::array();
    for (const auto& part : split(text)) arr.push_back(parse(part));
    return arr;
  };
  switch (kind) {
    case Kind::kInt:
      return parse_integer(where, text);
    case Kind::kSeed: {
      std::uint64_t v = 0;
      const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc() || ptr != text.data() + text.size()) bad_value(where, "an unsigned integer", in_quotes(text));
      return v;
    }
    case Kind::kDouble:
      return parse_double(where, text);
    case Kind::kString:
      return text;
    case Kind::kIntList:
      return list([&](const std::string& p) { return parse_integer(where, p); });
    case Kind::kDoubleList:
      return list([&](const std::string& p) { return parse_double(where, p); });
    case Kind::kStringList:
      return list([](const std::string& p) { return p; });
  }
  return {};
}

// Config file value → canonical JSON value.
json from_file(const std::string& key, Kind kind, const json& v) {
  const std::string where = "config key " + in_quotes(key);
  auto integer = [&](const json& x) -> json {
    if (x.is_number_integer()) return x;
    if (x.is_number_float()) {
      const double f = x.get<double>();
      if (f == std::floor(f) && std::abs(f) <= 0x1p53) return static_cast<std::int64_t>(f);
    }
    bad_value(where, "an integer", x.dump());
  };
  auto number = [&](const json& x) -> json {
    if (!x.is_number()) bad_value(where, "a number", x.dump());
    return x.get<double>();
  };
  auto string = [&](const json& x) -> json {
    if (!x.is_string()) bad_value(where, "a string", x.dump());
    return x;
  };
  auto list = [&](auto element) {
    json arr = json::array();
    if (v.is_array()) {
      if (v.empty()) bad_value(where, "a non-empty list", v.dump());
      for (const auto& x : v) arr.push_back(element(x));
    } else {
      arr.push_back(element(v));
    }
    return arr;
  };
  switch (kind) {
    case Kind::kInt:
      return integer(v);
    case Kind::kSeed:
      if (!v.is_number_unsigned()) bad_value(where, "an unsigned integer", v.dump());
      return v;
    case Kind::kDouble:
      return number(v);
    case Kind::kString:
      return string(v);
    case Kind::kIntList:
      return list(integer);
    case Kind::kDoubleList:
      return list(number);
    case Kind::kStringList:
      return list(string);
  }
  return {};
}

void merge_config_file(json& resolved, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file", path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config file " + path + " is not valid JSON (byte " + std::to_string(e.byte) + ")");
  }
  if (!doc.is_object()) throw ValidationError("config file " + path + " must hold a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (!resolved.contains(key)) throw ValidationError("config key " + in_quotes(key) + " is not used by this command");
    resolved[key] = from_file(key, key_table().at(key).kind, value);
  }
}

// ---- typed access to the resolved settings ----

int get_int(const json& cfg, const char* key) {
  const auto v = cfg.at(key).get<std::int64_t>();
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
    throw ValidationError(std::string(key) + " is out of range");
  return static_cast<int>(v);
}

template <class T>
T single(const json& cfg, const char* key) {
  const auto& arr = cfg.at(key);
  if (arr.size() != 1) throw ValidationError(std::string(key) + " takes a single value for this command");
  return arr.front().get<T>();
}

Vector get_vector(const json& cfg, const char* key) {
  const auto values = cfg.at(key).get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

InitSpec get_init(const json& cfg) {
  InitSpec init;
  const auto name = cfg.at("init").get<std::string>();
  const auto kind = parse_init_kind(name);
  if (!kind) throw ValidationError("init must be random, spectral, fixed or zero, got " + in_quotes(name));
  init.kind = *kind;
  init.c0 = cfg.at("c0").get<double>();
  if (cfg.contains("theta0") && !cfg.at("theta0").is_null()) init.fixed_value = get_vector(cfg, "theta0");
  init.validate();
  return init;
}

std::optional<int> get_max_iters(const json& cfg) {
  if (!cfg.contains("max-iters") || cfg.at("max-iters").is_null()) return std::nullopt;
  return get_int(cfg, "max-iters");
}

ExperimentConfig get_experiment(const json& cfg) {
  ExperimentConfig config;
  for (const int d : cfg.at("d").get<std::vector<int>>())
    for (const double s : cfg.at("s").get<std::vector<double>>())
      for (const auto n : cfg.at("n").get<std::vector<std::int64_t>>()) config.grid.push_back({n, d, s});
  config.replicates = get_int(cfg, "replicates");
  config.init = get_init(cfg);
  config.max_iters = get_max_iters(cfg);
  config.c_iter = cfg.at("c-iter").get<double>();
  config.rel_tol = cfg.at("rel-tol").get<double>();
  config.master_seed = cfg.at("seed").get<std::uint64_t>();
  config.threads = get_int(cfg, "threads");
  config.validate();
  return config;
}

struct Sample {
  ModelSpec spec;
  Eigen::Index n;
  std::uint64_t seed;
};

// One dataset per single-run command, seeded like replicate 0 of grid point 0
// in a sweep with the same master seed.
Sample get_sample(const json& cfg) {
  const int d = single<int>(cfg, "d");
  const double s = single<double>(cfg, "s");
  const auto n = single<std::int64_t>(cfg, "n");
  if (d < 1) throw ValidationError("d must be at least 1");
  if (n < 2) throw ValidationError("n must be at least 2");
  if (!(s >= 0.0)) throw ValidationError("s must be nonnegative");
  return {ModelSpec::along_first_axis(d, s), n, replicate_seed(cfg.at("seed").get<std::uint64_t>(), 0, 0)};
}

// ---- output ----

struct Context {
  const json& cfg;
  bool dry_run;
  std::ostream& out;
  fs::path dir;

  [[nodiscard]] fs::path path(const char* name) const { return dir / name; }
};

// Prints the resolved plan and returns true under --dry-run.
bool plan(const Context& ctx, std::string_view command, const std::vector<fs::path>& outputs) {
  if (!ctx.dry_run) return false;
  ctx.out << "dry-run " << command << ' ' << ctx.cfg.dump() << " ->";
  for (const auto& p : outputs) ctx.out << ' ' << p.string();
  ctx.out << '\n';
  return true;
}

std::ofstream open_output(const fs::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream f(path);
  if (!f) throw IoError("cannot open output file", path.string());
  f << std::setprecision(17);
  return f;
}

void finish(std::ofstream& f, const fs::path& path) {
  f.close();
  if (!f) throw IoError("failed writing output file", path.string());
}

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// A bare line chart: frame, min/max tick labels, one polyline per series.
void write_svg(const fs::path& path, const std::string& title, const std::vector<Series>& series, bool log_axes) {
  constexpr double kW = 640, kH = 400, kL = 70, kR = 20, kT = 40, kB = 50;
  auto tx = [&](double v) { return log_axes ? std::log10(v) : v; };
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (log_axes && (s.x[i] <= 0 || s.y[i] <= 0)) continue;
      x0 = std::min(x0, tx(s.x[i])), x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, tx(s.y[i])), y1 = std::max(y1, tx(s.y[i]));
    }
  if (!(x0 < x1)) x1 = x0 + 1;
  if (!(y0 < y1)) y1 = y0 + 1;
  auto px = [&](double v) { return kL + (tx(v) - x0) / (x1 - x0) * (kW - kL - kR); };
  auto py = [&](double v) { return kH - kB - (tx(v) - y0) / (y1 - y0) * (kH - kT - kB); };
  auto label = [&](double v) {
    std::ostringstream s;
    s << std::setprecision(4) << (log_axes ? std::pow(10.0, v) : v);
    return s.str();
  };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  auto f = open_output(path);
  f << std::setprecision(6);
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  f << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  f << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  f << "<rect x=\"" << kL << "\" y=\"" << kT << "\" width=\"" << kW - kL - kR << "\" height=\"" << kH - kT - kB
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  f << "<text x=\"" << kL << "\" y=\"" << kH - kB + 16 << "\" text-anchor=\"middle\">" << label(x0) << "</text>\n";
  f << "<text x=\"" << kW - kR << "\" y=\"" << kH - kB + 16 << "\" text-anchor=\"middle\">" << label(x1)
    << "</text>\n";
  f << "<text x=\"" << kL - 6 << "\" y=\"" << kH - kB << "\" text-anchor=\"end\">" << label(y0) << "</text>\n";
  f << "<text x=\"" << kL - 6 << "\" y=\"" << kT + 10 << "\" text-anchor=\"end\">" << label(y1) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = colors[k % std::size(colors)];
    f << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (log_axes && (s.x[i] <= 0 || s.y[i] <= 0)) continue;
      f << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
    }
    f << "\"/>\n";
    f << "<text x=\"" << kL + 10 << "\" y=\"" << kT + 18 + 16 * static_cast<double>(k) << "\" fill=\"" << color
      << "\">" << s.label << "</text>\n";
  }
  f << "</svg>\n";
  finish(f, path);
}

std::vector<double> iota_vector(std::size_t count) {
  std::vector<double> t(count);
  for (std::size_t i = 0; i < count; ++i) t[i] = static_cast<double>(i);
  return t;
}

std::string pass(bool ok) { return ok ? "pass" : "fail"; }

// ---- commands ----

int run_trajectory(const Context& ctx) {
  const auto sample = get_sample(ctx.cfg);
  InitSpec init = get_init(ctx.cfg);
  init.seed = derive_seed(sample.seed, 1);
  if (init.fixed_value && init.fixed_value->size() != sample.spec.dim())
    throw ValidationError("theta0 length does not match d");
  const auto max_iters = get_max_iters(ctx.cfg);
  const double rel_tol = ctx.cfg.at("rel-tol").get<double>();
  const StopRule stop = max_iters ? StopRule{*max_iters, rel_tol}
                                  : StopRule::for_sample_size(sample.n, ctx.cfg.at("c-iter").get<double>(), rel_tol);
  stop.validate();
  const auto csv = ctx.path("trajectory.csv");
  if (plan(ctx, "trajectory", {csv})) return kExitOk;

  const Dataset data = sample_dataset(sample.spec, sample.n, sample.seed);
  const Vector theta0 = initialize(init, data);
  Trajectory traj;
  if (data.dim() == 1)
    traj = run_em(BinnedScalarKernel(data), theta0, stop, sample.spec, {.store_iterates = true});
  else
    traj = run_em(DenseKernel(data), theta0, stop, sample.spec, {.store_iterates = true});
  auto f = open_output(csv);
  write_trajectory_csv(f, traj);
  finish(f, csv);
  ctx.out << "trajectory: final_loss=" << traj.loss.back() << " steps=" << traj.steps()
          << " stop=" << to_string(traj.stop_reason) << " -> " << csv.string() << '\n';
  return kExitOk;
}

int run_rate_sweep(const Context& ctx) {
  ExperimentConfig config = get_experiment(ctx.cfg);
  const auto csv = ctx.path("rate_sweep.csv");
  const fs::path summary = summary_path_for(csv.string());
  const auto svg = ctx.path("rate_sweep.svg");
  if (plan(ctx, "rate-sweep", {csv, summary, svg})) return kExitOk;

  config.output_path = csv.string();
  const ExperimentResult result = rate_sweep(config);
  std::vector<Series> series;
  for (const auto& fit : result.fits) {
    std::ostringstream name;
    name << "d=" << fit.d << " s=" << fit.s;
    series.push_back({name.str(), fit.n, fit.mean_loss});
  }
  if (!series.empty()) write_svg(svg, "mean final loss against n", series, true);

  ctx.out << "rate-sweep:";
  if (result.fits.empty()) {
    ctx.out << " mean_loss=" << result.summary.front().mean_loss;
  } else {
    for (const auto& fit : result.fits) ctx.out << " slope(d=" << fit.d << ",s=" << fit.s << ")=" << fit.fit.slope;
  }
  ctx.out << " -> " << csv.string() << '\n';
  return kExitOk;
}

int run_risk_compare(const Context& ctx) {
  const ExperimentConfig config = get_experiment(ctx.cfg);
  std::vector<Estimator> estimators;
  for (const auto& name : ctx.cfg.at("estimators").get<std::vector<std::string>>()) {
    if (name == "em")
      estimators.push_back(Estimator::kEm);
    else if (name == "spectral")
      estimators.push_back(Estimator::kSpectral);
    else if (name == "zero")
      estimators.push_back(Estimator::kZero);
    else
      throw ValidationError("estimators must be em, spectral or zero, got " + in_quotes(name));
  }
  const auto csv = ctx.path("risk_compare.csv");
  if (plan(ctx, "risk-compare", {csv})) return kExitOk;

  const RiskResult result = risk_compare(config, estimators);
  auto f = open_output(csv);
  write_risk_csv(f, result);
  finish(f, csv);
  const GridPoint& last = config.grid.back();
  ctx.out << "risk-compare: at n=" << last.n << " d=" << last.d << " s=" << last.s;
  for (const auto e : estimators) ctx.out << ' ' << to_string(e) << '=' << result.mean_loss(last, e);
  ctx.out << " -> " << csv.string() << '\n';
  return kExitOk;
}

void write_states(const fs::path& path, const std::vector<PopulationState>& states) {
  auto f = open_output(path);
  f << "t,alpha,beta\n";
  for (std::size_t t = 0; t < states.size(); ++t) f << t << ',' << states[t].alpha << ',' << states[t].beta << '\n';
  finish(f, path);
}

int run_population(const Context& ctx) {
  const double s = single<double>(ctx.cfg, "s");
  const PopulationState init{ctx.cfg.at("alpha0").get<double>(), ctx.cfg.at("beta0").get<double>()};
  const int steps = get_int(ctx.cfg, "steps");
  if (steps < 0) throw ValidationError("steps must be nonnegative");
  if (!(s >= 0.0)) throw ValidationError("s must be nonnegative");
  if (init.beta < 0.0) throw ValidationError("beta0 must be nonnegative");
  const auto csv = ctx.path("population.csv");
  if (plan(ctx, "population", {csv})) return kExitOk;

  const auto states = population_trajectory(init, s, steps);
  write_states(csv, states);
  ctx.out << "population: final_alpha=" << states.back().alpha << " final_beta=" << states.back().beta << " -> "
          << csv.string() << '\n';
  return kExitOk;
}

int run_sandwich(const Context& ctx) {
  const double s = single<double>(ctx.cfg, "s");
  const double theta0 = single<double>(ctx.cfg, "theta0");
  const double w = ctx.cfg.at("w").get<double>();
  const int steps = get_int(ctx.cfg, "steps");
  if (steps < 0) throw ValidationError("steps must be nonnegative");
  if (!(s >= 0.0)) throw ValidationError("s must be nonnegative");
  if (!(w >= 0.0)) throw ValidationError("w must be nonnegative");
  if (!(theta0 >= 0.0)) throw ValidationError("theta0 must be nonnegative");
  const auto csv = ctx.path("sandwich.csv");
  if (plan(ctx, "sandwich", {csv})) return kExitOk;

  const auto seq = sandwich_sequences(theta0, s, w, steps);
  auto f = open_output(csv);
  f << "t,lower,upper\n";
  for (std::size_t t = 0; t < seq.upper.size(); ++t) f << t << ',' << seq.lower[t] << ',' << seq.upper[t] << '\n';
  finish(f, csv);
  ctx.out << "sandwich: final_lower=" << seq.lower.back() << " final_upper=" << seq.upper.back() << " -> "
          << csv.string() << '\n';
  return kExitOk;
}

int run_deviation(const Context& ctx) {
  const auto sample = get_sample(ctx.cfg);
  ProbeGrid grid;
  grid.directions = get_int(ctx.cfg, "directions");
  grid.radii = get_int(ctx.cfg, "radii");
  grid.seed = derive_seed(sample.seed, 3);
  if (grid.directions < 1 || grid.radii < 1) throw ValidationError("directions and radii must be at least 1");
  const auto csv = ctx.path("deviation.csv");
  if (plan(ctx, "deviation", {csv})) return kExitOk;

  const Dataset data = sample_dataset(sample.spec, sample.n, sample.seed);
  const DeviationProbe probe = relative_lipschitz_probe(data, sample.spec, grid);
  auto f = open_output(csv);
  write_probe_csv(f, probe);
  finish(f, csv);
  ctx.out << "deviation: sup_ratio=" << probe.sup_ratio;
  if (data.dim() == 1) ctx.out << " w1=" << w1_squared_empirical(data, sample.spec);
  ctx.out << " -> " << csv.string() << '\n';
  return kExitOk;
}

int run_mle_probe(const Context& ctx) {
  const auto sample = get_sample(ctx.cfg);
  InitSpec init = get_init(ctx.cfg);
  init.seed = derive_seed(sample.seed, 1);
  const int burn_in = get_int(ctx.cfg, "burn-in");
  const int extra = get_int(ctx.cfg, "extra");
  if (burn_in < 1 || extra < 1) throw ValidationError("burn-in and extra must be at least 1");
  if (init.fixed_value && init.fixed_value->size() != sample.spec.dim())
    throw ValidationError("theta0 length does not match d");
  const auto csv = ctx.path("mle_probe.csv");
  if (plan(ctx, "mle-probe", {csv})) return kExitOk;

  const Dataset data = sample_dataset(sample.spec, sample.n, sample.seed);
  const MleProbeResult probe = mle_contraction_probe(data, sample.spec, init, burn_in, extra);
  auto f = open_output(csv);
  f << "t,ratio\n";
  for (std::size_t i = 0; i < probe.ratios.size(); ++i) f << burn_in + static_cast<int>(i) << ',' << probe.ratios[i] << '\n';
  finish(f, csv);
  ctx.out << "mle-probe: max_ratio=" << probe.max_ratio << " fitted_c=" << probe.fitted_c
          << " achieved_gap=" << probe.achieved_gap;
  if (probe.truncated) ctx.out << " truncated";
  if (probe.below_signal_scale) ctx.out << " below_signal_scale";
  ctx.out << " -> " << csv.string() << '\n';
  return kExitOk;
}

int run_figure2(const Context& ctx) {
  const auto a = ctx.path("figure2_non_monotone.csv");
  const auto b = ctx.path("figure2_monotone.csv");
  const auto summary = ctx.path("figure2.json");
  const auto svg = ctx.path("figure2.svg");
  if (plan(ctx, "figure2", {a, b, summary, svg})) return kExitOk;

  const Figure2Result r = figure2_reproduction();
  write_states(a, r.non_monotone);
  write_states(b, r.monotone);
  auto alphas = [](const std::vector<PopulationState>& v) {
    std::vector<double> out;
    for (const auto& p : v) out.push_back(p.alpha);
    return out;
  };
  write_svg(svg, "alpha_t at s = 0.35",
            {{"from (0.1, 0.7)", iota_vector(r.non_monotone.size()), alphas(r.non_monotone)},
             {"from (0.1, 0.1)", iota_vector(r.monotone.size()), alphas(r.monotone)}},
            false);
  json doc = {{"flag_a", r.flag_a},
              {"flag_b", r.flag_b},
              {"beta_nonincreasing", r.beta_nonincreasing},
              {"final_alpha_non_monotone", r.non_monotone.back().alpha},
              {"final_alpha_monotone", r.monotone.back().alpha}};
  auto f = open_output(summary);
  f << doc.dump(2) << '\n';
  finish(f, summary);
  ctx.out << "figure2: flag_a=" << pass(r.flag_a) << " flag_b=" << pass(r.flag_b)
          << " beta_nonincreasing=" << pass(r.beta_nonincreasing) << " -> " << summary.string() << '\n';
  return kExitOk;
}

int run_sublinear(const Context& ctx) {
  const int steps = get_int(ctx.cfg, "steps");
  if (steps < 200) throw ValidationError("steps must be at least 200 for the fit window starting at t = 100");
  const auto csv = ctx.path("sublinear.csv");
  const auto svg = ctx.path("sublinear.svg");
  if (plan(ctx, "sublinear", {csv, svg})) return kExitOk;

  const SublinearResult r = sublinear_rate_probe(default_rule(), steps);
  auto f = open_output(csv);
  f << "t,theta\n";
  for (std::size_t t = 0; t < r.theta.size(); ++t) f << t << ',' << r.theta[t] << '\n';
  finish(f, csv);
  write_svg(svg, "theta_t at s = 0", {{"theta_t", iota_vector(r.theta.size()), r.theta}}, true);
  ctx.out << "sublinear: slope=" << r.fit.slope << " slope_stderr=" << r.fit.slope_stderr << " -> " << csv.string()
          << '\n';
  return kExitOk;
}

int dispatch(std::string_view name, const Context& ctx) {
  if (name == "trajectory") return run_trajectory(ctx);
  if (name == "rate-sweep") return run_rate_sweep(ctx);
  if (name == "risk-compare") return run_risk_compare(ctx);
  if (name == "population") return run_population(ctx);
  if (name == "sandwich") return run_sandwich(ctx);
  if (name == "deviation") return run_deviation(ctx);
  if (name == "mle-probe") return run_mle_probe(ctx);
  if (name == "figure2") return run_figure2(ctx);
  return run_sublinear(ctx);
}

}  // namespace

int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"EM for the symmetric two-component Gaussian mixture: experiments and probes", "emgm"};
  app.require_subcommand(1, 1);

  struct Bound {
    CLI::App* sub;
    const Command* command;
    std::map<std::string, std::string> raw;
    std::string config;
    bool dry_run = false;
  };
  std::vector<Bound> bound(commands().size());
  for (std::size_t i = 0; i < commands().size(); ++i) {
    const Command& c = commands()[i];
    Bound& b = bound[i];
    b.command = &c;
    b.sub = app.add_subcommand(c.name, c.description);
    for (const auto& [key, value] : c.defaults.items()) {
      std::ostringstream help;
      help << key_table().at(key).help << " [" << value.dump() << "]";
      b.sub->add_option("--" + key, b.raw[key], help.str());
    }
    // Optional keys without a default value.
    if (c.defaults.contains("init")) b.sub->add_option("--theta0", b.raw["theta0"], key_table().at("theta0").help);
    if (c.defaults.contains("c-iter"))
      b.sub->add_option("--max-iters", b.raw["max-iters"], key_table().at("max-iters").help);
    b.sub->add_option("--config", b.config, "JSON file of settings; flags override it");
    b.sub->add_flag("--dry-run", b.dry_run, "validate and print the resolved plan without computing");
  }

  CLI::App* selected = &app;
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    for (auto& b : bound)
      if (b.sub->parsed()) selected = b.sub;
    out << selected->help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    for (auto& b : bound)
      if (b.sub->parsed()) selected = b.sub;
    err << "error: " << e.what() << "\n\n" << selected->help();
    return kExitValidation;
  }

  auto it = std::find_if(bound.begin(), bound.end(), [](const Bound& b) { return b.sub->parsed(); });
  Bound& b = *it;
  out << std::setprecision(17);
  try {
    json resolved = b.command->defaults;
    if (resolved.contains("init")) resolved["theta0"] = nullptr;
    if (resolved.contains("c-iter")) resolved["max-iters"] = nullptr;
    if (!b.config.empty()) merge_config_file(resolved, b.config);
    for (const auto& [key, text] : b.raw)
      if (b.sub->count("--" + key) > 0) resolved[key] = from_flag(key, key_table().at(key).kind, text);
    const Context ctx{resolved, b.dry_run, out, fs::path(resolved.at("out").get<std::string>())};
    return dispatch(b.command->name, ctx);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumeric;
  }
}

}  // namespace emgm
