#include "emgm/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "emgm/rng.hpp"

namespace emgm {

namespace {

constexpr Eigen::Index kBlockRows = 1024;

const double kLog2 = std::numbers::ln2;
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

}  // namespace

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw std::invalid_argument(std::string(what) + " must be finite");
}

void require_dim(const Dataset& data, const Vector& theta) {
  require_finite(theta, "theta");
  if (theta.size() != data.dim())
    throw std::invalid_argument("theta has length " + std::to_string(theta.size()) + ", data dimension is " +
                                std::to_string(data.dim()));
}

ModelSpec::ModelSpec(Vector theta_star) : theta_star_(std::move(theta_star)) {
  if (theta_star_.size() < 1) throw std::invalid_argument("model dimension must be at least 1");
  require_finite(theta_star_, "theta_star");
  norm_ = theta_star_.norm();
  direction_ = norm_ > 0.0 ? Vector(theta_star_ / norm_) : Vector::Zero(theta_star_.size());
}

ModelSpec ModelSpec::along_first_axis(int d, double s) {
  if (d < 1) throw std::invalid_argument("model dimension must be at least 1");
  Vector v = Vector::Zero(d);
  v[0] = s;
  return ModelSpec(std::move(v));
}

Dataset::Dataset(SampleMatrix samples, std::uint64_t seed, ModelSpec spec,
                 std::optional<std::vector<signed char>> labels)
    : samples_(std::move(samples)), seed_(seed), spec_(std::move(spec)), labels_(std::move(labels)) {
  if (samples_.rows() < 1) throw std::invalid_argument("dataset needs at least one sample");
  if (samples_.cols() != spec_.dim()) throw std::invalid_argument("sample dimension does not match model");
  if (!samples_.allFinite()) throw std::invalid_argument("samples must be finite");
  mean_sq_norm_ = samples_.squaredNorm() / static_cast<double>(samples_.rows());
}

Dataset sample_dataset(const ModelSpec& spec, Eigen::Index n, std::uint64_t seed, SampleOptions options) {
  if (n < 1) throw std::invalid_argument("sample size must be at least 1");
  const int d = spec.dim();
  const auto sign_block = static_cast<std::uint32_t>((d + 1) / 2);
  const NormalStream stream(seed);
  SampleMatrix y(n, d);
  std::optional<std::vector<signed char>> labels;
  if (options.retain_labels) labels.emplace(static_cast<std::size_t>(n));
  const Vector& center = spec.theta_star();
  std::vector<double> row(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < n; ++i) {
    stream.normals(static_cast<std::uint64_t>(i), row.data(), row.size());
    const double x = stream.sign(static_cast<std::uint64_t>(i), sign_block);
    for (int j = 0; j < d; ++j) y(i, j) = row[static_cast<std::size_t>(j)] + x * center[j];
    if (labels) (*labels)[static_cast<std::size_t>(i)] = static_cast<signed char>(x);
  }
  return Dataset(std::move(y), seed, spec, std::move(labels));
}

double logcosh(double x) noexcept {
  const double a = std::abs(x);
  return a + std::log1p(std::exp(-2.0 * a)) - kLog2;
}

double loss(const Vector& theta_hat, const Vector& theta) {
  if (theta_hat.size() != theta.size()) throw std::invalid_argument("loss: length mismatch");
  return std::min((theta_hat - theta).norm(), (theta_hat + theta).norm());
}

MapEvaluation evaluate_map(const Dataset& data, const Vector& theta, Evaluate what) {
  require_dim(data, theta);
  const SampleMatrix& y = data.samples();
  const Eigen::Index n = y.rows();
  const Eigen::Index block = std::min(n, kBlockRows);

  Vector acc = Vector::Zero(theta.size());
  Eigen::ArrayXd proj(block), mag(block), decay(block), weight(block);
  double lc_sum = 0.0, lc_comp = 0.0;  // Neumaier-compensated sum of logcosh

  for (Eigen::Index start = 0; start < n; start += block) {
    const Eigen::Index len = std::min(block, n - start);
    const auto rows = y.middleRows(start, len);
    proj.head(len) = (rows * theta).array();
    mag.head(len) = proj.head(len).abs();
    decay.head(len) = (-2.0 * mag.head(len)).exp();
    // tanh(x) = sign(x)(1 − e^{−2|x|}) / (1 + e^{−2|x|})
    weight.head(len) = (1.0 - decay.head(len)) / (1.0 + decay.head(len));
    weight.head(len) = (proj.head(len) < 0.0).select(-weight.head(len), weight.head(len));
    acc.noalias() += rows.transpose() * weight.head(len).matrix();
    if (what == Evaluate::kMap) continue;

    const double part = (mag.head(len) + (1.0 + decay.head(len)).log()).sum() - kLog2 * static_cast<double>(len);
    const double t = lc_sum + part;
    lc_comp += std::abs(lc_sum) >= std::abs(part) ? (lc_sum - t) + part : (part - t) + lc_sum;
    lc_sum = t;
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  MapEvaluation out;
  out.map = acc * inv_n;
  if (what == Evaluate::kMap) {
    out.loglik = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  out.loglik = -0.5 * data.mean_squared_norm() - data.dim() * kHalfLog2Pi - 0.5 * theta.squaredNorm() +
               (lc_sum + lc_comp) * inv_n;
  return out;
}

double log_likelihood(const Dataset& data, const Vector& theta) { return evaluate_map(data, theta).loglik; }

Vector grad_log_likelihood(const Dataset& data, const Vector& theta) {
  return evaluate_map(data, theta).map - theta;
}

double chi2_to_standard(const Vector& theta) {
  require_finite(theta, "theta");
  return std::cosh(theta.squaredNorm()) - 1.0;
}

}  // namespace emgm
