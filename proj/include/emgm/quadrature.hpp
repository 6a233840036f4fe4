#pragma once

#include <cmath>
#include <numbers>
#include <vector>

namespace emgm {

/// Gauss–Hermite rule for ∫ g(x) e^{−x²} dx ≈ Σ w_i g(x_i); Σ w_i = √π.
class QuadratureRule {
 public:
  /// Nodes by Newton iteration on the orthonormal Hermite recurrence.
  static QuadratureRule gauss_hermite(int order);

  [[nodiscard]] const std::vector<double>& nodes() const noexcept { return nodes_; }
  [[nodiscard]] const std::vector<double>& weights() const noexcept { return weights_; }
  [[nodiscard]] int order() const noexcept { return static_cast<int>(nodes_.size()); }

  /// E[g(Z)] for Z ~ N(0, 1).
  template <class G>
  [[nodiscard]] double expect_normal(G&& g) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) acc += weights_[i] * g(std::numbers::sqrt2 * nodes_[i]);
    return acc / std::sqrt(std::numbers::pi);
  }

 private:
  QuadratureRule(std::vector<double> nodes, std::vector<double> weights)
      : nodes_(std::move(nodes)), weights_(std::move(weights)) {}

  std::vector<double> nodes_;
  std::vector<double> weights_;
};

/// Default order for map evaluations; kVerificationOrder for cross-checks.
inline constexpr int kDefaultOrder = 80;
inline constexpr int kVerificationOrder = 160;

/// Shared immutable rules of the two standard orders.
[[nodiscard]] const QuadratureRule& default_rule();
[[nodiscard]] const QuadratureRule& verification_rule();

/// Gauss–Legendre nodes and weights on [−1, 1].
struct LegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
[[nodiscard]] LegendreRule gauss_legendre(int order);

/// E[tanh U] and E[sech² U] for U ~ N(mu, sigma²).
struct TanhMoments {
  double tanh = 0.0;
  double sech2 = 0.0;
};

/// For sigma ≤ 1/2 the Hermite rule is applied directly (the poles of tanh sit
/// at least π standard deviations off the real axis). Wider laws are
/// integrated over u = mu + sigma·z in unit-width Gauss–Legendre panels on
/// [−20, 20], with tanh = ±1 beyond (error below 1e−16).
[[nodiscard]] TanhMoments tanh_moments(double mu, double sigma, const QuadratureRule& rule);

/// Φ(x), standard normal CDF.
[[nodiscard]] inline double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
/// φ(x), standard normal density.
[[nodiscard]] inline double normal_pdf(double x) noexcept {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace emgm
