#include "emgm/quadrature.hpp"

#include <algorithm>
#include <stdexcept>

#include "emgm/model.hpp"

namespace emgm {

namespace {

constexpr double kHermiteMaxSigma = 0.5;
constexpr double kTanhCutoff = 20.0;
constexpr double kSigmaSpan = 12.0;
constexpr int kPanelOrder = 16;

struct TanhSech2 {
  double tanh;
  double sech2;
};

inline TanhSech2 tanh_sech2(double u) noexcept {
  const double e = std::exp(-2.0 * std::abs(u));
  const double t = (1.0 - e) / (1.0 + e);
  return {u < 0.0 ? -t : t, 4.0 * e / ((1.0 + e) * (1.0 + e))};
}

}  // namespace

QuadratureRule QuadratureRule::gauss_hermite(int order) {
  if (order < 1) throw std::invalid_argument("quadrature order must be positive");
  const int n = order;
  const double pim4 = 1.0 / std::pow(std::numbers::pi, 0.25);
  std::vector<double> x(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
  const int half = (n + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < half; ++i) {
    // Asymptotic starting guesses for the largest roots, then extrapolation.
    if (i == 0)
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    else if (i == 1)
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    else if (i == 2)
      z = 1.86 * z - 0.86 * x[0];
    else if (i == 3)
      z = 1.91 * z - 0.91 * x[1];
    else
      z = 2.0 * z - x[static_cast<std::size_t>(i - 2)];

    double deriv = 0.0;
    bool converged = false;
    for (int it = 0; it < 100; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1.0)) * p2 - std::sqrt(j / (j + 1.0)) * p3;
      }
      deriv = std::sqrt(2.0 * n) * p2;
      const double prev = z;
      z = prev - p1 / deriv;
      if (std::abs(z - prev) <= 1e-15 * std::max(1.0, std::abs(z))) {
        converged = true;
        break;
      }
    }
    if (!converged) throw NumericError("Gauss-Hermite root did not converge");
    x[static_cast<std::size_t>(i)] = z;
    x[static_cast<std::size_t>(n - 1 - i)] = -z;
    w[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(n - 1 - i)] = 2.0 / (deriv * deriv);
  }
  std::reverse(x.begin(), x.end());
  std::reverse(w.begin(), w.end());
  if (n % 2 == 1) x[static_cast<std::size_t>(n / 2)] = 0.0;
  return QuadratureRule(std::move(x), std::move(w));
}

const QuadratureRule& default_rule() {
  static const QuadratureRule rule = QuadratureRule::gauss_hermite(kDefaultOrder);
  return rule;
}

const QuadratureRule& verification_rule() {
  static const QuadratureRule rule = QuadratureRule::gauss_hermite(kVerificationOrder);
  return rule;
}

LegendreRule gauss_legendre(int order) {
  if (order < 1) throw std::invalid_argument("quadrature order must be positive");
  const int n = order;
  LegendreRule rule{std::vector<double>(static_cast<std::size_t>(n)), std::vector<double>(static_cast<std::size_t>(n))};
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double deriv = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
      }
      deriv = n * (z * p1 - p2) / (z * z - 1.0);
      const double prev = z;
      z = prev - p1 / deriv;
      if (std::abs(z - prev) <= 1e-16) break;
    }
    const auto lo = static_cast<std::size_t>(i), hi = static_cast<std::size_t>(n - 1 - i);
    rule.nodes[lo] = -z;
    rule.nodes[hi] = z;
    rule.weights[lo] = rule.weights[hi] = 2.0 / ((1.0 - z * z) * deriv * deriv);
  }
  return rule;
}

TanhMoments tanh_moments(double mu, double sigma, const QuadratureRule& rule) {
  if (sigma < 0.0) throw std::invalid_argument("tanh_moments: sigma must be nonnegative");
  if (sigma <= kHermiteMaxSigma) {
    TanhMoments m;
    const auto& x = rule.nodes();
    const auto& w = rule.weights();
    for (std::size_t i = 0; i < x.size(); ++i) {
      const auto v = tanh_sech2(mu + sigma * std::numbers::sqrt2 * x[i]);
      m.tanh += w[i] * v.tanh;
      m.sech2 += w[i] * v.sech2;
    }
    const double norm = 1.0 / std::sqrt(std::numbers::pi);
    return {m.tanh * norm, m.sech2 * norm};
  }

  static const LegendreRule panel = gauss_legendre(kPanelOrder);
  TanhMoments m;
  // Mass beyond ±cutoff sees tanh = ±1 and sech² = 0.
  m.tanh = normal_cdf((mu - kTanhCutoff) / sigma) - normal_cdf((-kTanhCutoff - mu) / sigma);
  const double a = std::max(-kTanhCutoff, mu - kSigmaSpan * sigma);
  const double b = std::min(kTanhCutoff, mu + kSigmaSpan * sigma);
  if (a >= b) return m;
  const int panels = static_cast<int>(std::ceil(b - a));
  const double h = (b - a) / panels;
  for (int k = 0; k < panels; ++k) {
    const double mid = a + (k + 0.5) * h;
    for (std::size_t i = 0; i < panel.nodes.size(); ++i) {
      const double u = mid + 0.5 * h * panel.nodes[i];
      const double density = normal_pdf((u - mu) / sigma) / sigma;
      const double wt = 0.5 * h * panel.weights[i] * density;
      const auto v = tanh_sech2(u);
      m.tanh += wt * v.tanh;
      m.sech2 += wt * v.sech2;
    }
  }
  return m;
}

}  // namespace emgm
