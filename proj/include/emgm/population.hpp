#pragma once

#include <vector>

#include "emgm/quadrature.hpp"

namespace emgm {

/// Coordinates of a population iterate: alpha along η*, beta ≥ 0 orthogonal to it.
struct PopulationState {
  double alpha = 0.0;
  double beta = 0.0;

  friend bool operator==(const PopulationState&, const PopulationState&) = default;
};

/// Population maps for the mixture V ~ ½N(−s, 1) + ½N(s, 1), W ~ N(0, 1)
/// independent of V.
///
/// With U = αV + βW, Gaussian conditioning and Stein's identity reduce both
/// two-dimensional expectations to moments of U on one component
/// (U ~ N(αs, α² + β²)):
///   F(α, β) = E[V tanh U] = s·E[tanh U] + α·E[sech² U]
///   G(α, β) = E[W tanh U] = β·E[sech² U]
/// The −s component gives the same values because tanh is odd.
[[nodiscard]] double F_pop(double alpha, double beta, double s, const QuadratureRule& rule = default_rule());
[[nodiscard]] double G_pop(double alpha, double beta, double s, const QuadratureRule& rule = default_rule());

struct FGValue {
  double F = 0.0;
  double G = 0.0;
};
/// Both maps from one quadrature pass.
[[nodiscard]] FGValue FG_pop(double alpha, double beta, double s, const QuadratureRule& rule = default_rule());

/// One-dimensional population EM map f(θ) = E[V tanh(θV)] = F(θ, 0).
[[nodiscard]] double f_pop(double theta, double s, const QuadratureRule& rule = default_rule());

/// q(θ) = f(θ)/θ, with the limit 1 + s² at θ = 0.
[[nodiscard]] double q_pop(double theta, double s, const QuadratureRule& rule = default_rule());

/// Reference evaluations used to cross-check the reduced forms above.
namespace reference {
/// f via the change of measure E[g(V)] = e^{−s²/2} E[g(Z) cosh(sZ)].
/// Reliable for s ≤ 3 and |θ| ≤ 1.
[[nodiscard]] double f_pop_change_of_measure(double theta, double s, const QuadratureRule& rule);
/// F and G by tensor-product Hermite quadrature over (V, W). Reliable while
/// α² + β² ≤ 1.
[[nodiscard]] FGValue FG_pop_tensor(double alpha, double beta, double s, const QuadratureRule& rule);
}  // namespace reference

/// States (α_t, β_t) for t = 0..steps under (α, β) ↦ (F, G).
[[nodiscard]] std::vector<PopulationState> population_trajectory(PopulationState init, double s, int steps,
                                                                 const QuadratureRule& rule = default_rule());

/// The θ ≥ 0 with q(θ) = c; 0 when c ≥ 1 + s². Bisection to 1e−10.
[[nodiscard]] double invert_q(double c, double s, const QuadratureRule& rule = default_rule());

struct SandwichSequences {
  std::vector<double> upper;
  std::vector<double> lower;
};

/// upper_{t+1} = f(upper_t) + w·upper_t and lower_{t+1} = max(0, f(lower_t) − w·lower_t),
/// both started at theta0, t = 0..steps.
[[nodiscard]] SandwichSequences sandwich_sequences(double theta0, double s, double w, int steps,
                                                   const QuadratureRule& rule = default_rule());

}  // namespace emgm
