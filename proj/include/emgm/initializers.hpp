#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "emgm/model.hpp"

namespace emgm {

enum class InitKind { kRandomSphere, kSpectral, kFixed, kZero };

[[nodiscard]] std::string_view to_string(InitKind kind) noexcept;
/// Accepts the CLI spellings random, spectral, fixed, zero (and random_sphere).
[[nodiscard]] std::optional<InitKind> parse_init_kind(std::string_view name) noexcept;

struct InitSpec {
  InitKind kind = InitKind::kRandomSphere;
  double c0 = 1.0;
  std::optional<Vector> fixed_value;
  std::uint64_t seed = 0;

  void validate() const;
};

/// c0·(d·log n / n)^{1/4}·η, η uniform on the unit sphere (normalized Gaussian).
[[nodiscard]] Vector random_sphere_init(int d, Eigen::Index n, double c0, std::uint64_t seed);

struct EigenPair {
  double value = 0.0;
  Vector vector;
  double residual = 0.0;  ///< ‖Aη − λη‖
  int iterations = 0;
};

/// Top eigenpair of a symmetric PSD matrix by power iteration (on A^32) from
/// a seed-derived Gaussian start. Stops once the Rayleigh quotient moves by at
/// most 1e−10·λ and the residual is at most 1e−8·λ; throws NumericError after
/// max_iters.
[[nodiscard]] EigenPair power_iteration(const Eigen::MatrixXd& a, std::uint64_t seed, int max_iters = 10000);

/// √((λ̂ − 1)₊)·η̂ for the top eigenpair of (1/n) Σ y_i y_iᵀ. The sign is arbitrary.
[[nodiscard]] Vector spectral_init(const Dataset& data, std::uint64_t seed = 0);

/// Starting point for `data` as described by `spec`.
[[nodiscard]] Vector initialize(const InitSpec& spec, const Dataset& data);

}  // namespace emgm
