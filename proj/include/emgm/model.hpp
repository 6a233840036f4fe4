#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace emgm {

using Vector = Eigen::VectorXd;
/// n × d, column-major: the EM kernels stream coordinates, not rows.
using SampleMatrix = Eigen::MatrixXd;

/// Raised when an iterative numerical routine fails to meet its tolerance.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ground truth of the symmetric mixture ½N(−θ*, I) + ½N(θ*, I).
class ModelSpec {
 public:
  explicit ModelSpec(Vector theta_star);

  /// θ* = s·e₁ in dimension d.
  static ModelSpec along_first_axis(int d, double s);

  [[nodiscard]] const Vector& theta_star() const noexcept { return theta_star_; }
  [[nodiscard]] int dim() const noexcept { return static_cast<int>(theta_star_.size()); }
  [[nodiscard]] double norm() const noexcept { return norm_; }
  /// Unit vector θ*/‖θ*‖, or the zero vector when θ* = 0.
  [[nodiscard]] const Vector& direction() const noexcept { return direction_; }

 private:
  Vector theta_star_;
  double norm_;
  Vector direction_;
};

/// n draws from P_θ*, immutable once generated.
class Dataset {
 public:
  Dataset(SampleMatrix samples, std::uint64_t seed, ModelSpec spec,
          std::optional<std::vector<signed char>> labels = std::nullopt);

  [[nodiscard]] const SampleMatrix& samples() const noexcept { return samples_; }
  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] const ModelSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] Eigen::Index size() const noexcept { return samples_.rows(); }
  [[nodiscard]] int dim() const noexcept { return static_cast<int>(samples_.cols()); }
  /// Latent signs X_i, present only when requested at sampling time.
  [[nodiscard]] const std::optional<std::vector<signed char>>& labels() const noexcept { return labels_; }
  /// (1/n) Σ ‖y_i‖².
  [[nodiscard]] double mean_squared_norm() const noexcept { return mean_sq_norm_; }

 private:
  SampleMatrix samples_;
  std::uint64_t seed_;
  ModelSpec spec_;
  std::optional<std::vector<signed char>> labels_;
  double mean_sq_norm_;
};

struct SampleOptions {
  bool retain_labels = false;
};

/// Row i is X_i θ* + Z_i, where Z_i uses Philox blocks 0..⌈d/2⌉−1 of row i
/// and the sign X_i uses block ⌈d/2⌉. Bit-identical for equal arguments.
[[nodiscard]] Dataset sample_dataset(const ModelSpec& spec, Eigen::Index n, std::uint64_t seed,
                                     SampleOptions options = {});

/// log cosh(x) = |x| + log(1 + e^{−2|x|}) − log 2, finite for any finite x.
[[nodiscard]] double logcosh(double x) noexcept;

/// min(‖a − b‖, ‖a + b‖).
[[nodiscard]] double loss(const Vector& theta_hat, const Vector& theta);

/// f_n(θ) together with ℓ_n(θ), from a single pass over the data.
struct MapEvaluation {
  Vector map;
  double loglik = 0.0;
};

enum class Evaluate { kMap, kMapAndLoglik };

/// Fused kernel: (1/n) Σ y_i tanh⟨θ, y_i⟩ and, unless skipped, the average
/// log-density ℓ_n(θ). With Evaluate::kMap the loglik field is NaN.
[[nodiscard]] MapEvaluation evaluate_map(const Dataset& data, const Vector& theta,
                                         Evaluate what = Evaluate::kMapAndLoglik);

[[nodiscard]] double log_likelihood(const Dataset& data, const Vector& theta);

/// ∇ℓ_n(θ) = f_n(θ) − θ, computed from the same kernel as em_map.
[[nodiscard]] Vector grad_log_likelihood(const Dataset& data, const Vector& theta);

/// χ²(P_θ ‖ P_0) = cosh(‖θ‖²) − 1.
[[nodiscard]] double chi2_to_standard(const Vector& theta);

void require_finite(const Vector& v, const char* what);
void require_dim(const Dataset& data, const Vector& theta);

}  // namespace emgm
