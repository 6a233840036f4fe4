#include "emgm/population.hpp"

#include <cmath>
#include <stdexcept>

namespace emgm {

FGValue FG_pop(double alpha, double beta, double s, const QuadratureRule& rule) {
  if (beta < 0.0) throw std::invalid_argument("beta must be nonnegative");
  if (alpha < 0.0) {
    const FGValue mirrored = FG_pop(-alpha, beta, s, rule);
    return {-mirrored.F, mirrored.G};
  }
  const double sigma = std::hypot(alpha, beta);
  if (sigma == 0.0) return {};
  if (alpha == 0.0) return {0.0, beta * tanh_moments(0.0, beta, rule).sech2};
  const TanhMoments m = tanh_moments(alpha * s, sigma, rule);
  return {s * m.tanh + alpha * m.sech2, beta * m.sech2};
}

double F_pop(double alpha, double beta, double s, const QuadratureRule& rule) {
  return FG_pop(alpha, beta, s, rule).F;
}

double G_pop(double alpha, double beta, double s, const QuadratureRule& rule) {
  return FG_pop(alpha, beta, s, rule).G;
}

double f_pop(double theta, double s, const QuadratureRule& rule) { return FG_pop(theta, 0.0, s, rule).F; }

double q_pop(double theta, double s, const QuadratureRule& rule) {
  if (theta == 0.0) return 1.0 + s * s;
  return f_pop(theta, s, rule) / theta;
}

namespace reference {

double f_pop_change_of_measure(double theta, double s, const QuadratureRule& rule) {
  return std::exp(-0.5 * s * s) *
         rule.expect_normal([&](double z) { return z * std::tanh(theta * z) * std::cosh(s * z); });
}

FGValue FG_pop_tensor(double alpha, double beta, double s, const QuadratureRule& rule) {
  FGValue out;
  for (const double center : {s, -s}) {
    out.F += 0.5 * rule.expect_normal([&](double z) {
      const double v = center + z;
      return rule.expect_normal([&](double w) { return v * std::tanh(alpha * v + beta * w); });
    });
    out.G += 0.5 * rule.expect_normal([&](double z) {
      const double v = center + z;
      return rule.expect_normal([&](double w) { return w * std::tanh(alpha * v + beta * w); });
    });
  }
  return out;
}

}  // namespace reference

std::vector<PopulationState> population_trajectory(PopulationState init, double s, int steps,
                                                   const QuadratureRule& rule) {
  if (steps < 1) throw std::invalid_argument("population_trajectory: steps must be at least 1");
  std::vector<PopulationState> states;
  states.reserve(static_cast<std::size_t>(steps) + 1);
  states.push_back(init);
  for (int t = 0; t < steps; ++t) {
    const auto [alpha, beta] = states.back();
    const FGValue next = FG_pop(alpha, beta, s, rule);
    states.push_back({next.F, next.G});
  }
  return states;
}

double invert_q(double c, double s, const QuadratureRule& rule) {
  if (!(c > 0.0)) throw std::invalid_argument("invert_q: target must be positive");
  if (c >= 1.0 + s * s) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (q_pop(hi, s, rule) >= c) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) throw std::invalid_argument("invert_q: target below the range of q");
  }
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (q_pop(mid, s, rule) >= c)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

SandwichSequences sandwich_sequences(double theta0, double s, double w, int steps, const QuadratureRule& rule) {
  if (!(theta0 > 0.0)) throw std::invalid_argument("sandwich_sequences: theta0 must be positive");
  if (w < 0.0) throw std::invalid_argument("sandwich_sequences: w must be nonnegative");
  if (steps < 1) throw std::invalid_argument("sandwich_sequences: steps must be at least 1");
  SandwichSequences out;
  out.upper.reserve(static_cast<std::size_t>(steps) + 1);
  out.lower.reserve(static_cast<std::size_t>(steps) + 1);
  out.upper.push_back(theta0);
  out.lower.push_back(theta0);
  for (int t = 0; t < steps; ++t) {
    const double up = out.upper.back();
    const double lo = out.lower.back();
    out.upper.push_back(f_pop(up, s, rule) + w * up);
    out.lower.push_back(lo > 0.0 ? std::max(0.0, f_pop(lo, s, rule) - w * lo) : 0.0);
  }
  return out;
}

}  // namespace emgm
