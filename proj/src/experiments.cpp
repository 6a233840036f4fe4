#include "emgm/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <thread>

#include "emgm/rng.hpp"

namespace emgm {

namespace {

std::unique_ptr<MapKernel> make_kernel(const Dataset& data) {
  if (data.dim() == 1) return std::make_unique<BinnedScalarKernel>(data);
  return std::make_unique<DenseKernel>(data);
}

InitSpec init_for(const InitSpec& base, std::uint64_t seed) {
  InitSpec init = base;
  init.seed = derive_seed(seed, 1);
  return init;
}

std::ofstream open_for_writing(const std::string& path) {
  const std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream out(p);
  if (!out) throw IoError("cannot open output file", path);
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (grid.empty()) throw std::invalid_argument("experiment grid is empty");
  if (replicates < 1) throw std::invalid_argument("replicates must be at least 1");
  for (const auto& p : grid) {
    if (p.n < 2) throw std::invalid_argument("every n must be at least 2");
    if (p.d < 1) throw std::invalid_argument("every d must be at least 1");
    if (!(p.s >= 0.0) || !std::isfinite(p.s)) throw std::invalid_argument("every s must be finite and nonnegative");
    if (init.kind == InitKind::kFixed && init.fixed_value && init.fixed_value->size() != p.d)
      throw std::invalid_argument("theta0 length does not match d");
  }
  init.validate();
  if (max_iters && *max_iters < 1) throw std::invalid_argument("max_iters must be at least 1");
  if (!max_iters && !(c_iter > 0.0)) throw std::invalid_argument("c_iter must be positive");
  if (!(rel_tol >= 0.0)) throw std::invalid_argument("rel_tol must be nonnegative");
  if (threads < 0) throw std::invalid_argument("threads must be nonnegative");
}

StopRule ExperimentConfig::stop_for(const GridPoint& point) const {
  if (max_iters) return StopRule{*max_iters, rel_tol};
  return StopRule::for_sample_size(point.n, c_iter, rel_tol);
}

std::uint64_t replicate_seed(std::uint64_t master, std::size_t grid_index, int replicate) noexcept {
  return derive_seed(derive_seed(master, grid_index), static_cast<std::uint64_t>(replicate));
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads) : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          const std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

ExperimentResult rate_sweep(const ExperimentConfig& config) {
  config.validate();
  // Fail on an unwritable path before spending any compute.
  if (!config.output_path.empty()) open_for_writing(config.output_path);

  const auto reps = static_cast<std::size_t>(config.replicates);
  ExperimentResult result;
  result.rows.resize(config.grid.size() * reps);
  parallel_for(result.rows.size(), config.threads, [&](std::size_t idx) {
    const std::size_t g = idx / reps;
    const int k = static_cast<int>(idx % reps);
    const GridPoint& point = config.grid[g];
    const auto spec = ModelSpec::along_first_axis(point.d, point.s);
    const std::uint64_t seed = replicate_seed(config.master_seed, g, k);
    const Dataset data = sample_dataset(spec, point.n, seed);
    const Vector theta0 = initialize(init_for(config.init, seed), data);
    const auto kernel = make_kernel(data);
    const RunSummary run = run_em_summary(*kernel, theta0, config.stop_for(point), spec);
    result.rows[idx] = {point, k, run.final_loss, run.steps, run.final_loglik, run.initial_loglik, run.stop_reason};
  });

  for (std::size_t g = 0; g < config.grid.size(); ++g) {
    std::vector<double> losses;
    double iters = 0.0;
    for (std::size_t k = 0; k < reps; ++k) {
      losses.push_back(result.rows[g * reps + k].final_loss);
      iters += result.rows[g * reps + k].iters;
    }
    result.summary.push_back({config.grid[g], mean(losses), median(losses), iters / static_cast<double>(reps),
                              config.stop_for(config.grid[g]).max_iters});
  }

  std::map<std::pair<int, double>, std::map<Eigen::Index, double>> groups;
  std::vector<std::pair<int, double>> order;
  for (const auto& ps : result.summary) {
    const auto key = std::make_pair(ps.point.d, ps.point.s);
    if (!groups.contains(key)) order.push_back(key);
    groups[key][ps.point.n] = ps.mean_loss;
  }
  for (const auto& key : order) {
    const auto& by_n = groups[key];
    if (by_n.size() < 2) continue;
    SlopeFit sf{key.first, key.second, {}, {}, {}};
    for (const auto& [n, loss_mean] : by_n) {
      sf.n.push_back(static_cast<double>(n));
      sf.mean_loss.push_back(loss_mean);
    }
    if (std::all_of(sf.mean_loss.begin(), sf.mean_loss.end(), [](double v) { return v > 0.0; }))
      sf.fit = fit_loglog(sf.n, sf.mean_loss);
    else
      sf.fit.slope = sf.fit.slope_stderr = std::nan("");
    result.fits.push_back(std::move(sf));
  }

  if (!config.output_path.empty()) save_result(result, config.output_path);
  return result;
}

void write_result_csv(std::ostream& out, const ExperimentResult& result) {
  const auto old_precision = out.precision(17);
  out << "n,d,s,replicate,final_loss,iters,final_loglik\n";
  for (const auto& r : result.rows)
    out << r.point.n << ',' << r.point.d << ',' << r.point.s << ',' << r.replicate << ',' << r.final_loss << ','
        << r.iters << ',' << r.final_loglik << '\n';
  out.precision(old_precision);
}

void write_summary_json(std::ostream& out, const ExperimentResult& result) {
  nlohmann::ordered_json doc;
  doc["points"] = nlohmann::ordered_json::array();
  for (const auto& p : result.summary)
    doc["points"].push_back({{"n", p.point.n},
                             {"d", p.point.d},
                             {"s", p.point.s},
                             {"mean_loss", p.mean_loss},
                             {"median_loss", p.median_loss},
                             {"mean_iters", p.mean_iters},
                             {"iteration_budget", p.iteration_budget}});
  doc["fits"] = nlohmann::ordered_json::array();
  for (const auto& f : result.fits) {
    nlohmann::ordered_json entry = {{"d", f.d}, {"s", f.s}, {"n", f.n}, {"mean_loss", f.mean_loss}};
    // JSON has no NaN; a fit that could not be made is null.
    auto number = [](double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(); };
    entry["slope"] = number(f.fit.slope);
    entry["slope_stderr"] = number(f.fit.slope_stderr);
    doc["fits"].push_back(std::move(entry));
  }
  out << doc.dump(2) << '\n';
}

std::string summary_path_for(const std::string& csv_path) {
  std::filesystem::path p(csv_path);
  p.replace_extension(".summary.json");
  return p.string();
}

std::string save_result(const ExperimentResult& result, const std::string& csv_path) {
  {
    auto out = open_for_writing(csv_path);
    write_result_csv(out, result);
    if (!out.flush()) throw IoError("write failed", csv_path);
  }
  const std::string json_path = summary_path_for(csv_path);
  auto out = open_for_writing(json_path);
  write_summary_json(out, result);
  if (!out.flush()) throw IoError("write failed", json_path);
  return json_path;
}

std::string_view to_string(Estimator e) noexcept {
  switch (e) {
    case Estimator::kEm: return "em";
    case Estimator::kSpectral: return "spectral";
    case Estimator::kZero: return "zero";
  }
  return "unknown";
}

double RiskResult::mean_loss(const GridPoint& point, Estimator e) const {
  for (const auto& s : summary)
    if (s.point == point && s.estimator == e) return s.mean_loss;
  throw std::out_of_range("no such grid point and estimator");
}

RiskResult risk_compare(const ExperimentConfig& config, const std::vector<Estimator>& estimators) {
  config.validate();
  if (estimators.empty()) throw std::invalid_argument("no estimators requested");
  if (!config.output_path.empty()) open_for_writing(config.output_path);

  const auto reps = static_cast<std::size_t>(config.replicates);
  const std::size_t per_task = estimators.size();
  RiskResult result;
  result.rows.resize(config.grid.size() * reps * per_task);
  parallel_for(config.grid.size() * reps, config.threads, [&](std::size_t idx) {
    const std::size_t g = idx / reps;
    const int k = static_cast<int>(idx % reps);
    const GridPoint& point = config.grid[g];
    const auto spec = ModelSpec::along_first_axis(point.d, point.s);
    const std::uint64_t seed = replicate_seed(config.master_seed, g, k);
    const Dataset data = sample_dataset(spec, point.n, seed);
    for (std::size_t e = 0; e < per_task; ++e) {
      double l = 0.0;
      switch (estimators[e]) {
        case Estimator::kEm: {
          const Vector theta0 = initialize(init_for(config.init, seed), data);
          l = run_em_summary(*make_kernel(data), theta0, config.stop_for(point), spec).final_loss;
          break;
        }
        case Estimator::kSpectral: l = loss(spectral_init(data, derive_seed(seed, 2)), spec.theta_star()); break;
        case Estimator::kZero: l = loss(Vector::Zero(point.d), spec.theta_star()); break;
      }
      result.rows[idx * per_task + e] = {point, k, estimators[e], l};
    }
  });

  for (std::size_t g = 0; g < config.grid.size(); ++g)
    for (std::size_t e = 0; e < per_task; ++e) {
      std::vector<double> losses;
      for (std::size_t k = 0; k < reps; ++k) losses.push_back(result.rows[(g * reps + k) * per_task + e].loss);
      result.summary.push_back({config.grid[g], estimators[e], mean(losses)});
    }

  if (!config.output_path.empty()) {
    auto out = open_for_writing(config.output_path);
    write_risk_csv(out, result);
    if (!out.flush()) throw IoError("write failed", config.output_path);
  }
  return result;
}

void write_risk_csv(std::ostream& out, const RiskResult& result) {
  const auto old_precision = out.precision(17);
  out << "n,d,s,replicate,estimator,loss\n";
  for (const auto& r : result.rows)
    out << r.point.n << ',' << r.point.d << ',' << r.point.s << ',' << r.replicate << ',' << to_string(r.estimator)
        << ',' << r.loss << '\n';
  out.precision(old_precision);
}

MleProbeResult mle_contraction_probe(const Dataset& data, const ModelSpec& spec, const InitSpec& init, int burn_in,
                                     int extra) {
  if (burn_in < 1 || extra < 1) throw std::invalid_argument("burn_in and extra must be positive");
  if (spec.dim() != data.dim()) throw std::invalid_argument("model and data dimensions differ");
  MleProbeResult out;
  const double n = static_cast<double>(data.size());
  const double ln = std::log(n);
  out.below_signal_scale = spec.norm() < std::pow(data.dim() * ln * ln * ln / n, 0.25);

  const StopRule stop{burn_in + extra + 50, 0.0};
  const auto kernel = make_kernel(data);
  const Trajectory traj = run_em(*kernel, initialize(init, data), stop, spec, {.store_iterates = true});
  out.mle_proxy = traj.final_iterate;

  const auto& it = traj.iterates;
  const std::size_t first = static_cast<std::size_t>(burn_in);
  const std::size_t last = std::min(it.size() - 1, first + static_cast<std::size_t>(extra));
  double log_sum = 0.0;
  for (std::size_t t = first; t < last; ++t) {
    const double here = (it[t] - out.mle_proxy).norm();
    if (here < 1e-14) {
      out.truncated = true;
      break;
    }
    const double ratio = (it[t + 1] - out.mle_proxy).norm() / here;
    out.ratios.push_back(ratio);
    out.max_ratio = std::max(out.max_ratio, ratio);
    log_sum += std::log(ratio);
  }
  if (last < first + static_cast<std::size_t>(extra)) out.truncated = true;
  if (out.ratios.empty()) {
    out.geometric_mean = out.fitted_c = std::nan("");
  } else {
    out.geometric_mean = std::exp(log_sum / static_cast<double>(out.ratios.size()));
    out.fitted_c = spec.norm() > 0.0 ? -std::log(out.geometric_mean) / (spec.norm() * spec.norm()) : std::nan("");
  }
  out.achieved_gap = loss(it[std::min(last, it.size() - 1)], out.mle_proxy);
  return out;
}

Figure2Result figure2_reproduction(const QuadratureRule& rule) {
  constexpr double s = 0.35;
  constexpr int steps = 60;
  Figure2Result out;
  out.non_monotone = population_trajectory({0.1, 0.7}, s, steps, rule);
  out.monotone = population_trajectory({0.1, 0.1}, s, steps, rule);

  const auto& a = out.non_monotone;
  const double min_alpha =
      std::min_element(a.begin(), a.end(), [](const auto& x, const auto& y) { return x.alpha < y.alpha; })->alpha;
  out.flag_a = min_alpha < a.front().alpha && std::abs(a.back().alpha - s) <= 1e-2;

  const auto& b = out.monotone;
  bool nondecreasing = true;
  for (std::size_t t = 1; t < b.size(); ++t) nondecreasing = nondecreasing && b[t].alpha >= b[t - 1].alpha - 1e-9;
  out.flag_b = nondecreasing && std::abs(b.back().alpha - s) <= 1e-2;

  out.beta_nonincreasing = true;
  for (const auto* run : {&a, &b})
    for (std::size_t t = 2; t < run->size(); ++t)
      out.beta_nonincreasing = out.beta_nonincreasing && (*run)[t].beta <= (*run)[t - 1].beta + 1e-9;
  return out;
}

SublinearResult sublinear_rate_probe(const QuadratureRule& rule, int steps) {
  constexpr int kFirst = 100;
  if (steps <= kFirst) throw std::invalid_argument("sublinear probe needs more than 100 steps");
  SublinearResult out;
  out.theta.reserve(static_cast<std::size_t>(steps) + 1);
  out.theta.push_back(1.0);
  out.strictly_decreasing_positive = true;
  for (int t = 0; t < steps; ++t) {
    const double next = f_pop(out.theta.back(), 0.0, rule);
    out.strictly_decreasing_positive = out.strictly_decreasing_positive && next > 0.0 && next < out.theta.back();
    out.theta.push_back(next);
  }
  std::vector<double> t_axis, th;
  for (int t = kFirst; t <= steps; ++t) {
    t_axis.push_back(t);
    th.push_back(out.theta[static_cast<std::size_t>(t)]);
  }
  out.fit = fit_loglog(t_axis, th);
  return out;
}

}  // namespace emgm
