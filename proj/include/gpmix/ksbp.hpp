#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "gpmix/priors.hpp"
#include "gpmix/rng.hpp"

namespace gpmix {

constexpr int kTruncationCap = 10000;

struct Stick {
  double v = 0.5;      // stick-breaking probability, in (0,1)
  Eigen::VectorXd h;   // expert location, inside [0,1]^D
};

// Shared gating parameters plus the ordered stick list and truncation level.
struct GatingState {
  double kernel_width = 1.0;  // r
  int alpha = 2;
  int beta = 2;
  std::vector<Stick> sticks;
  int truncation_level = 1;  // i*
};

// Bernoulli indicators for one stick, kept only for points with s_n >= i.
struct StickAux {
  std::vector<int> points;   // data indices n with s_n >= i
  std::vector<std::uint8_t> A;
  std::vector<std::uint8_t> B;
};

struct SliceAuxiliaries {
  Eigen::VectorXd u;               // slicing variables, one per data point
  std::vector<StickAux> per_stick; // aligned with GatingState::sticks
};

// kappa(x, h) = exp(-|x-h|^2 / r^2).
double kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& h, double r);

// First `up_to` gating weights at x: w_i = v_i kappa_i prod_{j<i}(1 - v_j kappa_j).
Eigen::VectorXd mixture_weights(const Eigen::VectorXd& x, const GatingState& state,
                                int up_to);

// Joint draw of (A_{n,i}, B_{n,i}). Deterministically (1,1) when s_n = i;
// otherwise one of (1,0), (0,1), (0,0) with the renormalized table weights.
std::pair<int, int> sample_aux_AB(int s_n, int i, double v, double kappa, Rng& rng);

// Conjugate beta posterior parameters for v_i given the A indicators.
std::pair<double, double> posterior_v_params(const StickAux& aux, int alpha, int beta);

// Bernoulli likelihood of the B indicators as a function of h_i, with its
// gradient. The uniform prior contributes nothing inside the cube.
std::pair<double, Eigen::VectorXd> h_log_posterior_grad(const Eigen::VectorXd& h,
                                                        const StickAux& aux,
                                                        const Eigen::MatrixXd& X,
                                                        double r);

// u_n ~ Unif(0, w_{n,s_n}); throws if the weight is not positive.
double sample_u(double w_n_sn, Rng& rng);

// Log posterior of the kernel width r given all B indicators from the most
// recent stick loop, gamma prior included, with d/dr.
std::pair<double, double> r_log_posterior_grad_ksbp(double r,
                                                    const std::vector<StickAux>& aux,
                                                    const std::vector<Stick>& sticks,
                                                    const Eigen::MatrixXd& X,
                                                    const GammaPrior& prior);

// Update rule for one stick location given its B indicators; the Gibbs chain
// plugs in reflective HMC here, tests can plug in exact samplers.
using StickLocationUpdater =
    std::function<Eigen::VectorXd(int stick_index, const Eigen::VectorXd& current,
                                  const StickAux& aux)>;

struct StickLoopResult {
  int truncation_level = 0;
  Eigen::MatrixXd weights;  // N x i*, the weights in force for this sweep
};

// One pass of the random-truncation loop: for i = 1, 2, ... sample
// (A,B) -> v_i -> h_i -> weights -> u_n for {n : s_n = i}, until every
// u_n exceeds the remaining weight. Sticks beyond the returned level are
// discarded. Runs at least one iteration so the truncation level is >= 1.
StickLoopResult stick_loop(const Eigen::MatrixXd& X, GatingState& state,
                           SliceAuxiliaries& aux, const std::vector<int>& assignments,
                           const StickLocationUpdater& update_location, Rng& rng);

}  // namespace gpmix
