#include "gpmix/hmc.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gpmix {

namespace {

constexpr double kDaGamma = 0.05;
constexpr double kDaT0 = 10.0;
constexpr double kDaKappa = 0.75;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool finite_all(double v, const Eigen::VectorXd& g) {
  if (!std::isfinite(v)) return false;
  for (int i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g(i))) return false;
  }
  return true;
}

Eigen::VectorXd draw_momentum(int dim, Rng& rng) {
  Eigen::VectorXd z(dim);
  for (int i = 0; i < dim; ++i) z(i) = draw_normal(rng);
  return z;
}

}  // namespace

void HmcConfig::validate() const {
  if (leapfrog_steps < 1) throw std::invalid_argument("leapfrog_steps must be >= 1");
  if (!(step_cap > 0.0)) throw std::invalid_argument("step_cap must be positive");
  if (!(target_accept > 0.0 && target_accept < 1.0)) {
    throw std::invalid_argument("target_accept must lie in (0,1)");
  }
  if (!(initial_step > 0.0)) throw std::invalid_argument("initial_step must be positive");
}

DualAveraging::DualAveraging(double eps0)
    : mu(std::log(10.0 * eps0)), log_eps(std::log(eps0)), log_eps_bar(std::log(eps0)) {}

void DualAveraging::observe(double accept_prob, double target) {
  m += 1;
  const double frac = 1.0 / (m + kDaT0);
  h_bar = (1.0 - frac) * h_bar + frac * (target - accept_prob);
  log_eps = mu - std::sqrt(static_cast<double>(m)) / kDaGamma * h_bar;
  const double w = std::pow(static_cast<double>(m), -kDaKappa);
  log_eps_bar = w * log_eps + (1.0 - w) * log_eps_bar;
}

std::pair<double, Eigen::VectorXd> log_target_in_logspace(const TargetFn& target,
                                                          const Eigen::VectorXd& w) {
  // Guard against overflow of e^w before it turns into NaN downstream.
  for (int i = 0; i < w.size(); ++i) {
    if (std::abs(w(i)) > 300.0) return {kNegInf, Eigen::VectorXd::Zero(w.size())};
  }
  const Eigen::VectorXd theta = w.array().exp().matrix();
  auto [lp, grad] = target(theta);
  const double lp_w = lp + w.sum();
  Eigen::VectorXd grad_w =
      (grad.array() * theta.array() + 1.0).matrix();
  return {lp_w, grad_w};
}

HmcSampler::HmcSampler(const HmcConfig& cfg) : cfg_(cfg), da_(cfg.initial_step) {
  cfg_.validate();
}

double HmcSampler::step() const {
  if (frozen_) return frozen_step_;
  return std::min(da_.adapted_step(), cfg_.step_cap);
}

void HmcSampler::set_step(double eps) {
  frozen_ = true;
  frozen_step_ = std::min(eps, cfg_.step_cap);
}

void HmcSampler::freeze() {
  if (!frozen_) {
    frozen_ = true;
    frozen_step_ = std::min(da_.averaged_step(), cfg_.step_cap);
  }
}

bool leapfrog_logspace(const TargetFn& target, Eigen::VectorXd& w, Eigen::VectorXd& z,
                       double eps, int steps, double* final_logp) {
  auto [lp, grad] = log_target_in_logspace(target, w);
  if (!finite_all(lp, grad)) return false;
  for (int i = 0; i < steps; ++i) {
    z += 0.5 * eps * grad;
    w += eps * z;
    std::tie(lp, grad) = log_target_in_logspace(target, w);
    if (!finite_all(lp, grad)) return false;
    z += 0.5 * eps * grad;
  }
  if (final_logp != nullptr) *final_logp = lp;
  return true;
}

HmcResult HmcSampler::sample(const TargetFn& target, const Eigen::VectorXd& current,
                             Rng& rng) {
  const int dim = static_cast<int>(current.size());
  const double eps = step();

  Eigen::VectorXd w = current.array().log().matrix();
  auto [lp0, g0] = log_target_in_logspace(target, w);
  if (!finite_all(lp0, g0)) {
    throw std::invalid_argument("hmc: non-finite density at the current point");
  }

  Eigen::VectorXd z = draw_momentum(dim, rng);
  const double h0 = -lp0 + 0.5 * z.squaredNorm();

  Eigen::VectorXd wq = w;
  double lp = lp0;
  const bool bad = !leapfrog_logspace(target, wq, z, eps, cfg_.leapfrog_steps, &lp);
  if (bad) nonfinite_rejects_ += 1;

  double accept_prob = 0.0;
  bool accepted = false;
  if (!bad) {
    const double h1 = -lp + 0.5 * z.squaredNorm();
    const double log_ratio = h0 - h1;
    accept_prob = std::isfinite(log_ratio) ? std::min(1.0, std::exp(log_ratio)) : 0.0;
    accepted = draw_uniform(rng) < accept_prob;
  }

  if (!frozen_ && cfg_.dual_averaging_enabled) {
    da_.observe(accept_prob, cfg_.target_accept);
  }

  HmcResult out;
  out.value = accepted ? wq.array().exp().matrix().eval() : current;
  out.accepted = accepted;
  out.accept_prob = accept_prob;
  out.step_size = eps;
  return out;
}

CubeHmcSampler::CubeHmcSampler(const HmcConfig& cfg) : cfg_(cfg), da_(cfg.initial_step) {
  cfg_.validate();
}

double CubeHmcSampler::step() const {
  if (frozen_) return frozen_step_;
  return std::min(da_.adapted_step(), cfg_.step_cap);
}

void CubeHmcSampler::set_step(double eps) {
  frozen_ = true;
  frozen_step_ = std::min(eps, cfg_.step_cap);
}

void CubeHmcSampler::freeze() {
  if (!frozen_) {
    frozen_ = true;
    frozen_step_ = std::min(da_.averaged_step(), cfg_.step_cap);
  }
}

HmcResult CubeHmcSampler::sample(const TargetFn& target, const Eigen::VectorXd& current,
                                 Rng& rng) {
  const int dim = static_cast<int>(current.size());
  const double eps = step();

  auto [lp0, g0] = target(current);

  Eigen::VectorXd z = draw_momentum(dim, rng);
  // A -inf current density accepts any finite proposal.
  const double h0 = std::isfinite(lp0) ? -lp0 + 0.5 * z.squaredNorm()
                                       : std::numeric_limits<double>::infinity();

  Eigen::VectorXd q = current;
  Eigen::VectorXd grad = std::isfinite(lp0) ? g0 : Eigen::VectorXd::Zero(dim);
  double lp = lp0;
  bool bad = false;
  for (int step_i = 0; step_i < cfg_.leapfrog_steps; ++step_i) {
    z += 0.5 * eps * grad;
    q += eps * z;
    // Reflect into the cube; preserves |z| and volume.
    for (int d = 0; d < dim; ++d) {
      while (q(d) < 0.0 || q(d) > 1.0) {
        if (q(d) < 0.0) {
          q(d) = -q(d);
        } else {
          q(d) = 2.0 - q(d);
        }
        z(d) = -z(d);
      }
    }
    std::tie(lp, grad) = target(q);
    if (!std::isfinite(lp)) {
      bad = true;
      break;
    }
    for (int d = 0; d < dim; ++d) {
      if (!std::isfinite(grad(d))) bad = true;
    }
    if (bad) break;
    z += 0.5 * eps * grad;
  }

  double accept_prob = 0.0;
  bool accepted = false;
  if (!bad) {
    const double h1 = -lp + 0.5 * z.squaredNorm();
    const double log_ratio = h0 - h1;
    if (std::isinf(h0) && std::isfinite(h1)) {
      accept_prob = 1.0;
    } else {
      accept_prob = std::isfinite(log_ratio) ? std::min(1.0, std::exp(log_ratio)) : 0.0;
    }
    accepted = draw_uniform(rng) < accept_prob;
  }

  if (!frozen_ && cfg_.dual_averaging_enabled) {
    da_.observe(accept_prob, cfg_.target_accept);
  }

  HmcResult out;
  out.value = accepted ? q : current;
  out.accepted = accepted;
  out.accept_prob = accept_prob;
  out.step_size = eps;
  return out;
}

std::pair<double, double> gamma_log_prior_grad(double theta, double shape, double scale) {
  if (!(theta > 0.0)) throw std::invalid_argument("gamma_log_prior_grad: theta must be positive");
  const double lp = (shape - 1.0) * std::log(theta) - theta / scale;
  const double d = (shape - 1.0) / theta - 1.0 / scale;
  return {lp, d};
}

}  // namespace gpmix
