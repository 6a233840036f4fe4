#include "emgm/sample_em.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace emgm {

std::string_view to_string(StopReason reason) noexcept {
  switch (reason) {
    case StopReason::kMaxIters: return "max_iters";
    case StopReason::kRelChange: return "rel_change";
    case StopReason::kDiverged: return "diverged";
  }
  return "unknown";
}

StopRule StopRule::for_sample_size(Eigen::Index n, double c_iter, double rel_tol) {
  if (n < 1) throw std::invalid_argument("sample size must be positive");
  if (!(c_iter > 0.0)) throw std::invalid_argument("iteration constant must be positive");
  StopRule rule;
  rule.max_iters = std::max(1, static_cast<int>(std::ceil(c_iter * std::sqrt(static_cast<double>(n)))));
  rule.rel_tol = rel_tol;
  return rule;
}

void StopRule::validate() const {
  if (max_iters < 1) throw std::invalid_argument("max_iters must be at least 1");
  if (!(rel_tol >= 0.0)) throw std::invalid_argument("rel_tol must be nonnegative");
}

Decomposition decompose(const Vector& theta, const ModelSpec& spec) {
  if (spec.norm() == 0.0) return {0.0, theta.norm()};
  const double alpha = theta.dot(spec.direction());
  return {alpha, (theta - alpha * spec.direction()).norm()};
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  const bool with_theta = !traj.iterates.empty();
  const auto d = with_theta ? traj.iterates.front().size() : 0;
  const auto old_precision = out.precision(17);
  out << "t,alpha,beta,loss,loglik";
  for (Eigen::Index j = 0; j < d; ++j) out << ",theta_" << j;
  out << '\n';
  for (std::size_t t = 0; t < traj.alpha.size(); ++t) {
    out << t << ',' << traj.alpha[t] << ',' << traj.beta[t] << ',' << traj.loss[t] << ',' << traj.loglik[t];
    for (Eigen::Index j = 0; j < d; ++j) out << ',' << traj.iterates[t][j];
    out << '\n';
  }
  out.precision(old_precision);
}

BinnedScalarKernel::BinnedScalarKernel(const Dataset& data, double width, int order)
    : data_(data), width_(width), order_(order) {
  if (data.dim() != 1) throw std::invalid_argument("binned kernel needs one-dimensional data");
  if (!(width > 0.0)) throw std::invalid_argument("bin width must be positive");
  if (order < 1) throw std::invalid_argument("expansion order must be positive");

  const auto& y = data.samples();
  const double top = y.cwiseAbs().maxCoeff();
  const auto slots = static_cast<std::size_t>(std::floor(top / width)) + 1;
  const int powers = order + 2;
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(slots), powers);
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    const double a = std::abs(y(i, 0));
    const auto k = std::min(slots - 1, static_cast<std::size_t>(std::floor(a / width)));
    const double u = a - (static_cast<double>(k) + 0.5) * width;
    double p = 1.0;
    for (int j = 0; j < powers; ++j, p *= u) dense(static_cast<Eigen::Index>(k), j) += p;
  }
  std::vector<Eigen::Index> used;
  for (Eigen::Index k = 0; k < dense.rows(); ++k)
    if (dense(k, 0) > 0.0) used.push_back(k);
  power_sums_.resize(static_cast<Eigen::Index>(used.size()), powers);
  centers_.reserve(used.size());
  for (std::size_t b = 0; b < used.size(); ++b) {
    power_sums_.row(static_cast<Eigen::Index>(b)) = dense.row(used[b]);
    centers_.push_back((static_cast<double>(used[b]) + 0.5) * width);
  }
}

MapEvaluation BinnedScalarKernel::evaluate(const Vector& theta, Evaluate what) const {
  require_dim(data_, theta);
  const double th = theta[0];
  if (std::abs(th) * width_ / std::numbers::pi > kMaxRatio) return evaluate_map(data_, theta, what);

  const int K = order_;
  std::vector<double> t(static_cast<std::size_t>(K) + 1);
  double map_sum = 0.0;
  double lc_sum = 0.0;
  for (std::size_t b = 0; b < centers_.size(); ++b) {
    const double c = centers_[b];
    const auto m = power_sums_.row(static_cast<Eigen::Index>(b));
    // Taylor coefficients of u ↦ tanh(θ(c + u)).
    t[0] = std::tanh(th * c);
    for (int k = 0; k < K; ++k) {
      double conv = 0.0;
      for (int j = 0; j <= k; ++j) conv += t[static_cast<std::size_t>(j)] * t[static_cast<std::size_t>(k - j)];
      t[static_cast<std::size_t>(k) + 1] = th / (k + 1) * ((k == 0 ? 1.0 : 0.0) - conv);
    }
    // (c + u)·tanh(θ(c + u)) summed over the bin.
    for (int k = 0; k <= K; ++k) map_sum += t[static_cast<std::size_t>(k)] * (c * m[k] + m[k + 1]);
    if (what == Evaluate::kMap) continue;
    // log cosh(θ(c + u)) has derivative θ·tanh(θ(c + u)).
    lc_sum += logcosh(th * c) * m[0];
    for (int k = 0; k < K; ++k) lc_sum += th * t[static_cast<std::size_t>(k)] / (k + 1) * m[k + 1];
  }

  const double inv_n = 1.0 / static_cast<double>(data_.size());
  MapEvaluation out;
  out.map = Vector::Constant(1, map_sum * inv_n);
  out.loglik = what == Evaluate::kMap
                   ? std::numeric_limits<double>::quiet_NaN()
                   : -0.5 * data_.mean_squared_norm() - 0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * th * th +
                         lc_sum * inv_n;
  return out;
}

Vector em_map(const Dataset& data, const Vector& theta) { return evaluate_map(data, theta, Evaluate::kMap).map; }

Eigen::MatrixXd em_jacobian(const Dataset& data, const Vector& theta) {
  require_dim(data, theta);
  const auto& y = data.samples();
  const Eigen::ArrayXd proj = (y * theta).array();
  const Eigen::ArrayXd decay = (-2.0 * proj.abs()).exp();
  const Eigen::ArrayXd sech2 = 4.0 * decay / (1.0 + decay).square();
  Eigen::MatrixXd jac = y.transpose() * (sech2.matrix().asDiagonal() * y);
  jac /= static_cast<double>(data.size());
  return 0.5 * (jac + jac.transpose());
}

namespace {

struct StepOutcome {
  bool stop = false;
  StopReason reason = StopReason::kMaxIters;
};

StepOutcome check_step(const Vector& current, const Vector& next, int steps_taken, const StopRule& stop) {
  if (!next.allFinite()) return {true, StopReason::kDiverged};
  const double scale = std::max(current.norm(), 1e-30);
  if ((next - current).norm() <= stop.rel_tol * scale) return {true, StopReason::kRelChange};
  if (steps_taken >= stop.max_iters) return {true, StopReason::kMaxIters};
  return {};
}

}  // namespace

Trajectory run_em(const MapKernel& kernel, const Vector& theta0, const StopRule& stop, const ModelSpec& spec,
                  RunOptions options) {
  stop.validate();
  require_dim(kernel.data(), theta0);
  if (spec.dim() != kernel.data().dim()) throw std::invalid_argument("model and data dimensions differ");

  Trajectory traj;
  auto record = [&](const Vector& theta, double loglik) {
    const auto [alpha, beta] = decompose(theta, spec);
    traj.alpha.push_back(alpha);
    traj.beta.push_back(beta);
    traj.loss.push_back(loss(theta, spec.theta_star()));
    traj.loglik.push_back(loglik);
    if (options.store_iterates) traj.iterates.push_back(theta);
  };

  Vector theta = theta0;
  MapEvaluation eval = kernel.evaluate(theta, Evaluate::kMapAndLoglik);
  record(theta, eval.loglik);
  for (int t = 1;; ++t) {
    const StepOutcome outcome = check_step(theta, eval.map, t, stop);
    if (outcome.reason == StopReason::kDiverged && outcome.stop) {
      traj.stop_reason = StopReason::kDiverged;
      break;
    }
    theta = std::move(eval.map);
    eval = kernel.evaluate(theta, Evaluate::kMapAndLoglik);
    assert(eval.loglik >= traj.loglik.back() - 1e-12 && "EM decreased the likelihood");
    record(theta, eval.loglik);
    if (outcome.stop) {
      traj.stop_reason = outcome.reason;
      break;
    }
  }
  traj.final_iterate = theta;
  return traj;
}

Trajectory run_em(const Dataset& data, const Vector& theta0, const StopRule& stop, const ModelSpec& spec,
                  RunOptions options) {
  return run_em(DenseKernel(data), theta0, stop, spec, options);
}

RunSummary run_em_summary(const MapKernel& kernel, const Vector& theta0, const StopRule& stop,
                          const ModelSpec& spec) {
  stop.validate();
  require_dim(kernel.data(), theta0);
  if (spec.dim() != kernel.data().dim()) throw std::invalid_argument("model and data dimensions differ");

  RunSummary out;
  Vector theta = theta0;
  MapEvaluation eval = kernel.evaluate(theta, Evaluate::kMapAndLoglik);
  out.initial_loglik = eval.loglik;
  for (int t = 1;; ++t) {
    const StepOutcome outcome = check_step(theta, eval.map, t, stop);
    if (outcome.stop && outcome.reason == StopReason::kDiverged) {
      out.stop_reason = StopReason::kDiverged;
      out.steps = t - 1;
      break;
    }
    theta = std::move(eval.map);
    if (outcome.stop) {
      out.stop_reason = outcome.reason;
      out.steps = t;
      break;
    }
    eval = kernel.evaluate(theta, Evaluate::kMap);
  }
  out.final_loglik = kernel.evaluate(theta, Evaluate::kMapAndLoglik).loglik;
  out.final_loss = loss(theta, spec.theta_star());
  out.final_iterate = std::move(theta);
  return out;
}

}  // namespace emgm
