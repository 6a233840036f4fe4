#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "emgm/model.hpp"
#include "emgm/quadrature.hpp"

namespace emgm {

/// Population EM map in d dimensions: with θ = αη* + βξ it returns
/// F(α, β)η* + G(α, β)ξ. For θ* = 0 every direction is equivalent and the
/// result is G(0, ‖θ‖)·θ/‖θ‖.
[[nodiscard]] Vector population_map_ddim(const Vector& theta, const ModelSpec& spec,
                                         const QuadratureRule& rule = default_rule());

/// Random directions × log-spaced radii in [min_radius, max_radius].
/// max_radius defaults to 10(√d + ‖θ*‖).
struct ProbeGrid {
  int directions = 32;
  int radii = 24;
  double min_radius = 1e-3;
  std::optional<double> max_radius;
  std::uint64_t seed = 0;
};

struct DeviationProbe {
  std::vector<Vector> grid;
  std::vector<int> direction_id;
  std::vector<double> radius;
  std::vector<double> ratios;  ///< ‖f_n(θ) − f(θ)‖ / ‖θ‖
  double sup_ratio = 0.0;
};

[[nodiscard]] std::vector<Vector> make_probe_grid(int d, double s, const ProbeGrid& spec);

[[nodiscard]] DeviationProbe relative_lipschitz_probe(const Dataset& data, const ModelSpec& spec,
                                                      const ProbeGrid& grid = {},
                                                      const QuadratureRule& rule = default_rule());

/// Same, on caller-supplied probes (nonzero, length d).
[[nodiscard]] DeviationProbe relative_lipschitz_probe(const Dataset& data, const ModelSpec& spec,
                                                      const std::vector<Vector>& probes,
                                                      const QuadratureRule& rule = default_rule());

/// CSV with header direction_id,radius,ratio.
void write_probe_csv(std::ostream& out, const DeviationProbe& probe);

/// W₁ between the empirical law of y_i² and the law of Y² for d = 1, i.e.
/// ∫₀^∞ |F_n(t) − F(t)| dt with F(t) = Φ(√t − s) + Φ(√t + s) − 1.
///
/// Substituting t = u² turns each gap between consecutive |y_(k)| into a
/// smooth integrand 2u·|k/n − F(u²)| that changes sign at most once; the
/// crossing is located by bisection and each side integrated with
/// Gauss–Legendre panels. The part beyond max|y_i| has a closed form.
[[nodiscard]] double w1_squared_empirical(const Dataset& data, const ModelSpec& spec);

/// sup_θ |x tanh(xθ) − y tanh(yθ)| / |θ| = |x² − y²|, attained as θ → 0.
[[nodiscard]] double tanh_sup_ratio(double x, double y) noexcept;

/// |x tanh(xθ) − y tanh(yθ)| / |θ| for θ ≠ 0.
[[nodiscard]] double tanh_ratio(double x, double y, double theta) noexcept;

/// Numeric supremum of tanh_ratio over θ ∈ {±10^k : k ∈ [−6, 2]} and a fine
/// linear grid on [−10, 10]. Used to check the closed form.
[[nodiscard]] double tanh_sup_ratio_search(double x, double y);

}  // namespace emgm
