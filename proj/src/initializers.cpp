#include "emgm/initializers.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "emgm/rng.hpp"

namespace emgm {

namespace {

constexpr std::uint32_t kSphereTag = 0x51;
constexpr std::uint32_t kPowerTag = 0x52;
constexpr int kSquarings = 5;

Vector gaussian_direction(int d, std::uint64_t seed, std::uint32_t tag) {
  const NormalStream stream(seed, tag);
  Vector v(d);
  // A zero draw has probability zero; the guard only keeps the contract total.
  for (std::uint64_t row = 0;; ++row) {
    stream.normals(row, v.data(), static_cast<std::size_t>(d));
    const double norm = v.norm();
    if (norm > 0.0) return v / norm;
  }
}

}  // namespace

std::string_view to_string(InitKind kind) noexcept {
  switch (kind) {
    case InitKind::kRandomSphere: return "random";
    case InitKind::kSpectral: return "spectral";
    case InitKind::kFixed: return "fixed";
    case InitKind::kZero: return "zero";
  }
  return "unknown";
}

std::optional<InitKind> parse_init_kind(std::string_view name) noexcept {
  if (name == "random" || name == "random_sphere") return InitKind::kRandomSphere;
  if (name == "spectral") return InitKind::kSpectral;
  if (name == "fixed") return InitKind::kFixed;
  if (name == "zero") return InitKind::kZero;
  return std::nullopt;
}

void InitSpec::validate() const {
  if (!(c0 > 0.0) || !std::isfinite(c0)) throw std::invalid_argument("c0 must be positive");
  if ((kind == InitKind::kFixed) != fixed_value.has_value())
    throw std::invalid_argument("theta0 is required for, and only for, the fixed initializer");
  if (fixed_value) require_finite(*fixed_value, "theta0");
}

Vector random_sphere_init(int d, Eigen::Index n, double c0, std::uint64_t seed) {
  if (d < 1) throw std::invalid_argument("dimension must be positive");
  if (n < 2) throw std::invalid_argument("random sphere init needs n >= 2");
  if (!(c0 > 0.0)) throw std::invalid_argument("c0 must be positive");
  const double nn = static_cast<double>(n);
  const double radius = c0 * std::pow(d * std::log(nn) / nn, 0.25);
  return radius * gaussian_direction(d, seed, kSphereTag);
}

EigenPair power_iteration(const Eigen::MatrixXd& a, std::uint64_t seed, int max_iters) {
  if (a.rows() != a.cols() || a.rows() == 0) throw std::invalid_argument("power iteration needs a square matrix");
  const int d = static_cast<int>(a.rows());
  EigenPair out;
  out.vector = gaussian_direction(d, seed, kPowerTag);
  if (a.cwiseAbs().maxCoeff() == 0.0) return out;

  // Iterating with A^32 instead of A raises the eigenvalue ratio to the 32nd
  // power; sample covariances near the null have top gaps of order 1e-3.
  Eigen::MatrixXd step = a / a.norm();
  for (int k = 0; k < kSquarings; ++k) {
    step = step * step;
    step /= step.norm();
  }
  step = 0.5 * (step + step.transpose());

  out.value = out.vector.dot(a * out.vector);
  for (int it = 1; it <= max_iters; ++it) {
    const Vector next = step * out.vector;
    const double norm = next.norm();
    if (norm == 0.0) {
      // Start vector in the null space; nudge it with a fresh direction.
      out.vector = gaussian_direction(d, derive_seed(seed, static_cast<std::uint64_t>(it)), kPowerTag);
      continue;
    }
    out.vector = next / norm;
    const Vector image = a * out.vector;
    const double previous = out.value;
    out.value = out.vector.dot(image);
    out.residual = (image - out.value * out.vector).norm();
    out.iterations = it;
    if (std::abs(out.value - previous) <= 1e-10 * out.value && out.residual <= 1e-8 * out.value) return out;
  }
  throw NumericError("power iteration did not converge: residual " + std::to_string(out.residual) + " at lambda " +
                     std::to_string(out.value));
}

Vector spectral_init(const Dataset& data, std::uint64_t seed) {
  const auto& y = data.samples();
  const Eigen::MatrixXd cov = (y.transpose() * y) / static_cast<double>(data.size());
  const EigenPair top = power_iteration(cov, seed);
  if (top.value <= 1.0) return Vector::Zero(data.dim());
  return std::sqrt(top.value - 1.0) * top.vector;
}

Vector initialize(const InitSpec& spec, const Dataset& data) {
  spec.validate();
  switch (spec.kind) {
    case InitKind::kRandomSphere: return random_sphere_init(data.dim(), data.size(), spec.c0, spec.seed);
    case InitKind::kSpectral: return spectral_init(data, spec.seed);
    case InitKind::kFixed:
      if (spec.fixed_value->size() != data.dim()) throw std::invalid_argument("theta0 has the wrong length");
      return *spec.fixed_value;
    case InitKind::kZero: return Vector::Zero(data.dim());
  }
  throw std::invalid_argument("unknown initializer");
}

}  // namespace emgm
