#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "gpmix/dataset.hpp"
#include "gpmix/gibbs.hpp"
#include "gpmix/priors.hpp"
#include "gpmix/rng.hpp"

namespace gpmix {

// Input-dependent occupation number: (N-1) times the kernel-weighted
// fraction of the other points assigned to expert i. Sums to N-1 over i.
double occupation_number(int n, int i, const std::vector<int>& assignments,
                         const Eigen::MatrixXd& X, double r);

// Log pseudo-posterior of the kernel width given the assignments (gamma
// prior included) and its derivative. Points whose expert holds no other
// point fall in the concentration branch, which does not involve r.
std::pair<double, double> rg_r_log_pseudo_posterior_grad(double r,
                                                         const std::vector<int>& assignments,
                                                         const Eigen::MatrixXd& X,
                                                         const GammaPrior& prior);

// Escobar-West concentration update: auxiliary phi ~ beta(beta+1, N), then a
// two-component gamma mixture with odds (a+|e|-1) / (N (b - log phi)).
double rg_sample_beta(double beta, int num_occupied, int N, double gamma_a, double gamma_b,
                      Rng& rng);

// The baseline sampler: occupation-number gating, one-auxiliary assignment
// moves, HMC on the r pseudo-posterior, conjugate concentration updates, and
// the same per-expert hyperparameter HMC as the main model.
class RgChain {
 public:
  RgChain(Eigen::MatrixXd X, Eigen::VectorXd y, const Priors& priors,
          const ChainConfig& config, std::uint64_t seed);

  void sweep();
  ChainTrace run();

  double kernel_width() const { return r_; }
  double concentration() const { return beta_; }
  const std::vector<Expert>& experts() const { return experts_; }
  const std::vector<int>& assignments() const { return assignments_; }
  int iteration() const { return iteration_; }
  void set_response(const Eigen::VectorXd& y);
  void freeze_adaptation();
  TraceRecord snapshot() const;

  // One auxiliary-expert assignment move for point n; exposed for tests.
  void assignment_move(int n);

  // Installs a hand-built state: expert ids must be 0..K-1 with every id
  // occupied. Hypers are kept where the expert count matches and reset to
  // prior means otherwise; caches are rebuilt.
  void set_state(const std::vector<int>& assignments, double r, double beta);

 private:
  void update_kernel_width();
  void update_assignments();
  void update_concentration();
  void update_expert_hypers();
  void remove_point(int n);
  HmcSampler& hyper_sampler(int idx);

  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
  Eigen::MatrixXd sq_dist_;  // pairwise squared distances, fixed
  Priors priors_;
  ChainConfig config_;
  Rng rng_;

  std::vector<int> assignments_;
  std::vector<Expert> experts_;
  double r_ = 1.0;
  double beta_ = 2.0;

  HmcSampler r_sampler_;
  std::vector<HmcSampler> theta_samplers_;
  bool adaptation_frozen_ = false;
  int iteration_ = 0;
};

ChainTrace run_rg(const Dataset& dataset, const Priors& priors, const ChainConfig& config,
                  std::uint64_t seed);

}  // namespace gpmix
