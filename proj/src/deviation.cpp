#include "emgm/deviation.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "emgm/population.hpp"
#include "emgm/rng.hpp"
#include "emgm/sample_em.hpp"

namespace emgm {

namespace {

constexpr std::uint32_t kProbeTag = 0x61;
constexpr double kPanelWidth = 0.125;
constexpr int kW1Order = 8;

// P(|Y| ≤ u) for Y ~ ½N(−s, 1) + ½N(s, 1).
double abs_cdf(double u, double s) noexcept { return normal_cdf(u - s) + normal_cdf(u + s) - 1.0; }

// ∫_a^b 2u (c − abs_cdf(u)) du on a piece where the sign is fixed.
double signed_piece(double a, double b, double c, double s, const LegendreRule& rule) {
  if (b <= a) return 0.0;
  const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / kPanelWidth)));
  const double h = (b - a) / panels;
  double acc = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double mid = a + (k + 0.5) * h;
    double part = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double u = mid + 0.5 * h * rule.nodes[i];
      part += rule.weights[i] * 2.0 * u * (c - abs_cdf(u, s));
    }
    acc += 0.5 * h * part;
  }
  return acc;
}

// ∫_a^b 2u |c − abs_cdf(u)| du; abs_cdf is increasing so there is at most one crossing.
double abs_piece(double a, double b, double c, double s, const LegendreRule& rule) {
  const double ga = c - abs_cdf(a, s);
  const double gb = c - abs_cdf(b, s);
  if (ga * gb >= 0.0) return std::abs(signed_piece(a, b, c, s, rule));
  double lo = a, hi = b;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if ((c - abs_cdf(mid, s)) * ga > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  const double cross = 0.5 * (lo + hi);
  return std::abs(signed_piece(a, cross, c, s, rule)) + std::abs(signed_piece(cross, b, c, s, rule));
}

// ∫_U^∞ 2u Q(u − m) du with A = U − m.
double upper_tail(double u, double m) noexcept {
  const double a = u - m;
  const double q = normal_cdf(-a);
  const double phi = normal_pdf(a);
  return (1.0 - a * a) * q + a * phi + 2.0 * m * (phi - a * q);
}

}  // namespace

Vector population_map_ddim(const Vector& theta, const ModelSpec& spec, const QuadratureRule& rule) {
  require_finite(theta, "theta");
  if (theta.size() != spec.dim()) throw std::invalid_argument("theta has the wrong length");
  const double s = spec.norm();
  if (s == 0.0) {
    const double r = theta.norm();
    if (r == 0.0) return Vector::Zero(theta.size());
    return G_pop(0.0, r, 0.0, rule) / r * theta;
  }
  const Vector& eta = spec.direction();
  const double alpha = theta.dot(eta);
  const Vector rest = theta - alpha * eta;
  const double beta = rest.norm();
  const FGValue fg = FG_pop(alpha, beta, s, rule);
  Vector out = fg.F * eta;
  if (beta > 0.0) out += fg.G / beta * rest;
  return out;
}

std::vector<Vector> make_probe_grid(int d, double s, const ProbeGrid& spec) {
  if (d < 1) throw std::invalid_argument("dimension must be positive");
  if (spec.directions < 1 || spec.radii < 1) throw std::invalid_argument("probe grid must be non-empty");
  const double r_max = spec.max_radius.value_or(10.0 * (std::sqrt(static_cast<double>(d)) + s));
  if (!(spec.min_radius > 0.0) || !(r_max >= spec.min_radius)) throw std::invalid_argument("probe radii must be positive");

  const NormalStream stream(spec.seed, kProbeTag);
  std::vector<Vector> grid;
  grid.reserve(static_cast<std::size_t>(spec.directions) * static_cast<std::size_t>(spec.radii));
  Vector dir(d);
  for (int k = 0; k < spec.directions; ++k) {
    std::uint64_t row = static_cast<std::uint64_t>(k) << 20;
    do stream.normals(row++, dir.data(), static_cast<std::size_t>(d));
    while (dir.norm() == 0.0);
    dir.normalize();
    for (int j = 0; j < spec.radii; ++j) {
      const double frac = spec.radii == 1 ? 1.0 : static_cast<double>(j) / (spec.radii - 1);
      grid.push_back(spec.min_radius * std::pow(r_max / spec.min_radius, frac) * dir);
    }
  }
  return grid;
}

DeviationProbe relative_lipschitz_probe(const Dataset& data, const ModelSpec& spec, const std::vector<Vector>& probes,
                                        const QuadratureRule& rule) {
  if (spec.dim() != data.dim()) throw std::invalid_argument("model and data dimensions differ");
  DeviationProbe out;
  out.grid = probes;
  out.ratios.reserve(probes.size());
  for (const Vector& theta : probes) {
    require_dim(data, theta);
    const double r = theta.norm();
    if (r == 0.0) throw std::invalid_argument("probe grid must exclude the zero vector");
    const double ratio = (em_map(data, theta) - population_map_ddim(theta, spec, rule)).norm() / r;
    out.ratios.push_back(ratio);
    out.radius.push_back(r);
    out.direction_id.push_back(0);
    out.sup_ratio = std::max(out.sup_ratio, ratio);
  }
  return out;
}

DeviationProbe relative_lipschitz_probe(const Dataset& data, const ModelSpec& spec, const ProbeGrid& grid,
                                        const QuadratureRule& rule) {
  DeviationProbe out = relative_lipschitz_probe(data, spec, make_probe_grid(data.dim(), spec.norm(), grid), rule);
  for (std::size_t i = 0; i < out.direction_id.size(); ++i)
    out.direction_id[i] = static_cast<int>(i / static_cast<std::size_t>(grid.radii));
  return out;
}

void write_probe_csv(std::ostream& out, const DeviationProbe& probe) {
  const auto old_precision = out.precision(17);
  out << "direction_id,radius,ratio\n";
  for (std::size_t i = 0; i < probe.ratios.size(); ++i)
    out << probe.direction_id[i] << ',' << probe.radius[i] << ',' << probe.ratios[i] << '\n';
  out.precision(old_precision);
}

double w1_squared_empirical(const Dataset& data, const ModelSpec& spec) {
  if (data.dim() != 1) throw std::invalid_argument("w1_squared_empirical needs one-dimensional data");
  static const LegendreRule rule = gauss_legendre(kW1Order);
  const double s = spec.norm();
  std::vector<double> a(static_cast<std::size_t>(data.size()));
  for (Eigen::Index i = 0; i < data.size(); ++i) a[static_cast<std::size_t>(i)] = std::abs(data.samples()(i, 0));
  std::sort(a.begin(), a.end());

  const double n = static_cast<double>(a.size());
  double total = abs_piece(0.0, a.front(), 0.0, s, rule);
  for (std::size_t k = 1; k < a.size(); ++k) total += abs_piece(a[k - 1], a[k], static_cast<double>(k) / n, s, rule);
  total += upper_tail(a.back(), s) + upper_tail(a.back(), -s);
  return total;
}

double tanh_sup_ratio(double x, double y) noexcept { return std::abs((x - y) * (x + y)); }

double tanh_ratio(double x, double y, double theta) noexcept {
  return std::abs(x * std::tanh(x * theta) - y * std::tanh(y * theta)) / std::abs(theta);
}

double tanh_sup_ratio_search(double x, double y) {
  double best = 0.0;
  for (int i = 0; i <= 800; ++i) {
    const double t = std::pow(10.0, -6.0 + 0.01 * i);
    best = std::max({best, tanh_ratio(x, y, t), tanh_ratio(x, y, -t)});
  }
  for (int i = -10000; i <= 10000; ++i)
    if (i != 0) best = std::max(best, tanh_ratio(x, y, 1e-3 * i));
  return best;
}

}  // namespace emgm
