#pragma once

#include <Eigen/Dense>
#include <functional>
#include <utility>

#include "gpmix/rng.hpp"

namespace gpmix {

struct HmcConfig {
  int leapfrog_steps = 5;
  double step_cap = 0.05;
  double target_accept = 0.8;
  double initial_step = 0.01;
  bool dual_averaging_enabled = true;

  void validate() const;
};

// Dual-averaging step-size adaptation, with the published constants
// gamma=0.05, t0=10, kappa=0.75 and mu = log(10 eps0).
struct DualAveraging {
  double mu = 0.0;
  double log_eps = 0.0;
  double log_eps_bar = 0.0;
  double h_bar = 0.0;
  int m = 0;

  explicit DualAveraging(double eps0);
  void observe(double accept_prob, double target);
  double adapted_step() const { return std::exp(log_eps); }
  double averaged_step() const { return std::exp(log_eps_bar); }
};

// Target in the ORIGINAL parameterization: returns (log density, gradient).
using TargetFn =
    std::function<std::pair<double, Eigen::VectorXd>(const Eigen::VectorXd&)>;

struct HmcResult {
  Eigen::VectorXd value;
  bool accepted = false;
  double accept_prob = 0.0;
  double step_size = 0.0;
};

// The log change of variables used by the positive-orthant sampler:
// log p_w(w) = log p_theta(e^w) + sum(w), grad_w = grad_theta .* e^w + 1.
std::pair<double, Eigen::VectorXd> log_target_in_logspace(const TargetFn& target,
                                                          const Eigen::VectorXd& w);

// Leapfrog trajectory on the transformed potential, in place. Returns false
// when a non-finite density or gradient is hit; on success *final_logp (if
// given) receives the log density at the end point.
bool leapfrog_logspace(const TargetFn& target, Eigen::VectorXd& w, Eigen::VectorXd& z,
                       double eps, int steps, double* final_logp = nullptr);

// One-block HMC sampler for strictly positive parameters. Moves happen on
// w = log(theta) with standard-normal momentum and a fixed leapfrog count;
// the step size follows dual averaging until freeze(), capped throughout.
class HmcSampler {
 public:
  explicit HmcSampler(const HmcConfig& cfg);

  HmcResult sample(const TargetFn& target, const Eigen::VectorXd& current, Rng& rng);

  void freeze();
  bool frozen() const { return frozen_; }
  double step() const;
  void set_step(double eps);  // for samplers created after adaptation ended
  long nonfinite_rejects() const { return nonfinite_rejects_; }

 private:
  HmcConfig cfg_;
  DualAveraging da_;
  bool frozen_ = false;
  double frozen_step_ = 0.0;
  long nonfinite_rejects_ = 0;
};

// Reflective HMC on the unit cube [0,1]^D (uniform prior, so the target is
// the likelihood alone). Same adaptation scheme as HmcSampler.
class CubeHmcSampler {
 public:
  explicit CubeHmcSampler(const HmcConfig& cfg);

  HmcResult sample(const TargetFn& target, const Eigen::VectorXd& current, Rng& rng);

  void freeze();
  bool frozen() const { return frozen_; }
  double step() const;
  void set_step(double eps);

 private:
  HmcConfig cfg_;
  DualAveraging da_;
  bool frozen_ = false;
  double frozen_step_ = 0.0;
};

// Gamma prior log density (up to a constant) and its derivative,
// (p1-1)/theta - 1/p2. Shape/scale parameterization.
std::pair<double, double> gamma_log_prior_grad(double theta, double shape, double scale);

}  // namespace gpmix
