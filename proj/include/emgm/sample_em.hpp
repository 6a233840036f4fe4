#pragma once

#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "emgm/model.hpp"

namespace emgm {

enum class StopReason { kMaxIters, kRelChange, kDiverged };

[[nodiscard]] std::string_view to_string(StopReason reason) noexcept;

/// Stop when t reaches max_iters or ‖θ_{t+1} − θ_t‖ ≤ rel_tol·max(‖θ_t‖, 1e−30).
struct StopRule {
  int max_iters = 1000;
  double rel_tol = 1e-8;

  /// max_iters = ⌈c_iter·√n⌉.
  [[nodiscard]] static StopRule for_sample_size(Eigen::Index n, double c_iter = 10.0, double rel_tol = 1e-8);

  void validate() const;
};

/// Per-step record of an EM run: entry t describes θ_t, t = 0..T.
struct Trajectory {
  std::vector<Vector> iterates;  ///< empty unless requested
  std::vector<double> alpha;     ///< ⟨θ_t, η*⟩
  std::vector<double> beta;      ///< ‖θ_t − α_t η*‖
  std::vector<double> loss;      ///< ℓ(θ_t, θ*)
  std::vector<double> loglik;    ///< ℓ_n(θ_t)
  Vector final_iterate;
  StopReason stop_reason = StopReason::kMaxIters;

  /// Number of EM steps T.
  [[nodiscard]] int steps() const noexcept { return static_cast<int>(alpha.size()) - 1; }
};

/// CSV with header t,alpha,beta,loss,loglik[,theta_0..theta_{d-1}].
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

/// Signal and orthogonal coordinates of θ relative to the model direction.
/// For θ* = 0 the signal coordinate is 0 and the orthogonal one is ‖θ‖.
struct Decomposition {
  double alpha;
  double beta;
};
[[nodiscard]] Decomposition decompose(const Vector& theta, const ModelSpec& spec);

/// Evaluates the sample EM map f_n and ℓ_n for one dataset.
class MapKernel {
 public:
  virtual ~MapKernel() = default;
  [[nodiscard]] virtual MapEvaluation evaluate(const Vector& theta, Evaluate what) const = 0;
  [[nodiscard]] virtual const Dataset& data() const noexcept = 0;
};

/// Direct pass over every sample. Holds a reference: the dataset must outlive it.
class DenseKernel final : public MapKernel {
 public:
  explicit DenseKernel(const Dataset& data) noexcept : data_(data) {}
  [[nodiscard]] MapEvaluation evaluate(const Vector& theta, Evaluate what) const override {
    return evaluate_map(data_, theta, what);
  }
  [[nodiscard]] const Dataset& data() const noexcept override { return data_; }

 private:
  const Dataset& data_;
};

/// One-dimensional kernel that compresses |y_i| into bins of fixed width and
/// keeps the power sums of the offsets from each bin center. A step then
/// costs O(bins · order²) instead of O(n): the map and the log-likelihood are
/// summed through Taylor expansions of tanh and log cosh about the centers,
/// whose coefficients follow from t' = θ(1 − t²).
///
/// The truncation error is below 1e−15 relative while |θ|·width/π ≤ kMaxRatio;
/// beyond that the kernel falls back to the dense pass. Holds a reference to the dataset.
class BinnedScalarKernel final : public MapKernel {
 public:
  static constexpr double kDefaultWidth = 0.05;
  static constexpr int kDefaultOrder = 12;
  static constexpr double kMaxRatio = 0.05;

  explicit BinnedScalarKernel(const Dataset& data, double width = kDefaultWidth, int order = kDefaultOrder);

  [[nodiscard]] MapEvaluation evaluate(const Vector& theta, Evaluate what) const override;
  [[nodiscard]] const Dataset& data() const noexcept override { return data_; }
  [[nodiscard]] std::size_t bins() const noexcept { return centers_.size(); }

 private:
  const Dataset& data_;
  double width_;
  int order_;
  std::vector<double> centers_;
  Eigen::MatrixXd power_sums_;  // bins × (order + 2)
};

/// f_n(θ) = (1/n) Σ y_i tanh⟨θ, y_i⟩.
[[nodiscard]] Vector em_map(const Dataset& data, const Vector& theta);

/// J_n(θ) = (1/n) Σ y_i y_iᵀ sech²⟨θ, y_i⟩.
[[nodiscard]] Eigen::MatrixXd em_jacobian(const Dataset& data, const Vector& theta);

struct RunOptions {
  bool store_iterates = false;
};

/// Iterates θ_{t+1} = f_n(θ_t) from theta0 until the stop rule fires, recording
/// every field of the trajectory. A non-finite iterate ends the run with kDiverged
/// and is not recorded.
[[nodiscard]] Trajectory run_em(const MapKernel& kernel, const Vector& theta0, const StopRule& stop,
                                const ModelSpec& spec, RunOptions options = {});
[[nodiscard]] Trajectory run_em(const Dataset& data, const Vector& theta0, const StopRule& stop,
                                const ModelSpec& spec, RunOptions options = {});

/// Endpoints of an EM run without per-step bookkeeping; the same iterates as run_em.
struct RunSummary {
  Vector final_iterate;
  int steps = 0;
  StopReason stop_reason = StopReason::kMaxIters;
  double initial_loglik = 0.0;
  double final_loglik = 0.0;
  double final_loss = 0.0;
};
[[nodiscard]] RunSummary run_em_summary(const MapKernel& kernel, const Vector& theta0, const StopRule& stop,
                                        const ModelSpec& spec);

}  // namespace emgm
