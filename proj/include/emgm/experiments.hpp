#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "emgm/initializers.hpp"
#include "emgm/population.hpp"
#include "emgm/sample_em.hpp"
#include "emgm/stats.hpp"

namespace emgm {

/// Raised when an output file cannot be created or written.
class IoError : public std::runtime_error {
 public:
  IoError(const std::string& what, std::string path) : std::runtime_error(what + ": " + path), path_(std::move(path)) {}
  [[nodiscard]] const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

struct GridPoint {
  Eigen::Index n = 0;
  int d = 1;
  double s = 0.0;
  bool operator==(const GridPoint&) const = default;
};

struct ExperimentConfig {
  std::vector<GridPoint> grid;
  int replicates = 1;
  InitSpec init;
  /// Fixed iteration cap; when absent the cap is ⌈c_iter·√n⌉ per grid point.
  std::optional<int> max_iters;
  double c_iter = 10.0;
  double rel_tol = 1e-8;
  std::uint64_t master_seed = 0;
  /// Result CSV path; the summary JSON goes next to it. Empty: nothing is written.
  std::string output_path;
  /// Worker threads; 0 means one per hardware thread.
  int threads = 0;

  void validate() const;
  [[nodiscard]] StopRule stop_for(const GridPoint& point) const;
};

/// seed(g, k) = derive_seed(derive_seed(master, g), k).
[[nodiscard]] std::uint64_t replicate_seed(std::uint64_t master, std::size_t grid_index, int replicate) noexcept;

struct ResultRow {
  GridPoint point;
  int replicate = 0;
  double final_loss = 0.0;
  int iters = 0;
  double final_loglik = 0.0;
  double initial_loglik = 0.0;
  StopReason stop_reason = StopReason::kMaxIters;
};

struct PointSummary {
  GridPoint point;
  double mean_loss = 0.0;
  double median_loss = 0.0;
  double mean_iters = 0.0;
  int iteration_budget = 0;
};

/// Slope of log(mean loss) against log n for one (d, s).
struct SlopeFit {
  int d = 1;
  double s = 0.0;
  std::vector<double> n;
  std::vector<double> mean_loss;
  LinearFit fit;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;  ///< ordered by (grid point, replicate)
  std::vector<PointSummary> summary;
  std::vector<SlopeFit> fits;  ///< only for (d, s) with at least two distinct n
};

/// Runs fn(0..count−1) over `threads` workers. Each index runs exactly once;
/// the first exception is rethrown after all workers stop.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

/// For every grid point and replicate: sample, initialize, run EM, record the
/// endpoint. The d = 1 runs use the binned kernel. Writes the CSV and summary
/// JSON when output_path is set.
[[nodiscard]] ExperimentResult rate_sweep(const ExperimentConfig& config);

/// Header n,d,s,replicate,final_loss,iters,final_loglik.
void write_result_csv(std::ostream& out, const ExperimentResult& result);
/// {"points": [...], "fits": [{"d", "s", "n", "mean_loss", "slope", "slope_stderr"}, ...]}.
void write_summary_json(std::ostream& out, const ExperimentResult& result);
/// Writes both files; returns the summary path. Throws IoError.
std::string save_result(const ExperimentResult& result, const std::string& csv_path);

/// Summary JSON path for a result CSV path: "dir/name.csv" → "dir/name.summary.json".
[[nodiscard]] std::string summary_path_for(const std::string& csv_path);

enum class Estimator { kEm, kSpectral, kZero };
[[nodiscard]] std::string_view to_string(Estimator e) noexcept;

struct RiskRow {
  GridPoint point;
  int replicate = 0;
  Estimator estimator = Estimator::kEm;
  double loss = 0.0;
};

struct RiskSummary {
  GridPoint point;
  Estimator estimator = Estimator::kEm;
  double mean_loss = 0.0;
};

struct RiskResult {
  std::vector<RiskRow> rows;
  std::vector<RiskSummary> summary;
  [[nodiscard]] double mean_loss(const GridPoint& point, Estimator e) const;
};

/// Monte Carlo risk of several estimators on common datasets. EM starts from
/// config.init and is scored at its stop time.
[[nodiscard]] RiskResult risk_compare(const ExperimentConfig& config, const std::vector<Estimator>& estimators);

/// Header n,d,s,replicate,estimator,loss.
void write_risk_csv(std::ostream& out, const RiskResult& result);

struct MleProbeResult {
  std::vector<double> ratios;  ///< ‖θ_{t+1} − θ_∞‖ / ‖θ_t − θ_∞‖ for t in the window
  double max_ratio = 0.0;
  double geometric_mean = 0.0;
  double fitted_c = 0.0;  ///< −log(geometric_mean) / ‖θ*‖²
  Vector mle_proxy;
  double achieved_gap = 0.0;  ///< loss(θ_{burn_in+extra}, θ_∞)
  bool truncated = false;     ///< window cut short by ‖θ_t − θ_∞‖ < 1e−14
  bool below_signal_scale = false;  ///< ‖θ*‖ < (d log³n / n)^{1/4}
};

/// Runs burn_in + extra + 50 EM steps and treats the last iterate as θ_∞.
[[nodiscard]] MleProbeResult mle_contraction_probe(const Dataset& data, const ModelSpec& spec, const InitSpec& init,
                                                   int burn_in, int extra);

struct Figure2Result {
  std::vector<PopulationState> non_monotone;  ///< from (0.1, 0.7)
  std::vector<PopulationState> monotone;      ///< from (0.1, 0.1)
  bool flag_a = false;  ///< min α_t < α₀ and final α within 1e−2 of s
  bool flag_b = false;  ///< α_t non-decreasing within 1e−9 and final α within 1e−2 of s
  bool beta_nonincreasing = false;  ///< both runs, after t = 1, within 1e−9
};

[[nodiscard]] Figure2Result figure2_reproduction(const QuadratureRule& rule = default_rule());

struct SublinearResult {
  std::vector<double> theta;  ///< θ_0..θ_T
  LinearFit fit;              ///< log θ_t on log t over t ∈ [100, T]
  bool strictly_decreasing_positive = false;
};

/// 1-D population EM at s = 0 from θ₀ = 1.
[[nodiscard]] SublinearResult sublinear_rate_probe(const QuadratureRule& rule = default_rule(), int steps = 10000);

}  // namespace emgm
