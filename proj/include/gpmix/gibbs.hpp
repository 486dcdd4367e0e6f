#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gpmix/dataset.hpp"
#include "gpmix/gp_expert.hpp"
#include "gpmix/hmc.hpp"
#include "gpmix/ksbp.hpp"
#include "gpmix/priors.hpp"
#include "gpmix/rng.hpp"

namespace gpmix {

struct Expert {
  ExpertHyper hyper;
  ExpertPosteriorCache cache;
};

struct ChainConfig {
  int total_iterations = 20000;
  int burn_in = 10000;
  int thin = 100;
  HmcConfig hmc;
  std::optional<double> fixed_noise_var;

  void validate() const;
};

// Snapshot of every sampled quantity at one recorded iteration. The same
// record type serves both models; RG leaves the stick fields empty and uses
// the continuous concentration field.
struct TraceRecord {
  int iter = 0;
  double r = 1.0;
  int alpha = 0;       // GPKSBP
  int beta_count = 0;  // GPKSBP
  double rg_beta = 0.0;
  int truncation_level = 0;
  std::vector<double> v;
  std::vector<Eigen::VectorXd> h;
  std::vector<ExpertHyper> experts;
  std::vector<int> s;  // 0-based expert ids
};

struct ChainTrace {
  std::string model;  // "gpksbp" or "rg"
  std::string dataset_name;
  std::uint64_t seed = 0;
  int total_iterations = 0;
  int burn_in = 0;
  int thin = 0;
  std::optional<double> fixed_noise_var;
  Eigen::MatrixXd X;  // training inputs after normalization
  Eigen::VectorXd y;  // training response after standardization
  Transform transform;
  std::vector<TraceRecord> records;

  std::vector<const TraceRecord*> retained() const;  // records past burn-in
};

// Slice-restricted assignment draw for one point: candidates are the sticks
// whose weight exceeds u_n, weighted by the leave-one-out conditional GP
// density of y_n. Caches are touched only when the assignment changes.
int sample_assignment(int n, int current, double u_n, const Eigen::VectorXd& weights_row,
                      std::vector<Expert>& experts, const Eigen::MatrixXd& X,
                      const Eigen::VectorXd& y, Rng& rng);

// Redraws hyperparameters from the priors for every expert with no points.
void resample_empty_expert_hypers(std::vector<Expert>& experts, const Priors& priors,
                                  int dim, std::optional<double> fixed_noise_var,
                                  Rng& rng);

ExpertHyper draw_hyper_from_priors(const Priors& priors, int dim,
                                   std::optional<double> fixed_noise_var, Rng& rng);

// Packing of (sigma^2, l_1..l_D [, tau^2]) for the joint HMC update.
Eigen::VectorXd pack_hyper(const ExpertHyper& hyper, bool include_noise);
ExpertHyper unpack_hyper(const Eigen::VectorXd& theta, int dim, bool include_noise,
                         double fixed_noise_var);

// Log posterior (gamma priors + GP marginal likelihood) of one expert's
// hyperparameters with its gradient, in the original parameterization.
std::pair<double, Eigen::VectorXd> theta_log_posterior_grad(
    const Eigen::VectorXd& theta, const Eigen::MatrixXd& X_sub,
    const Eigen::VectorXd& y_sub, const Priors& priors, int dim, bool include_noise,
    double fixed_noise_var);

// The within-Gibbs sampler. Each sweep updates, in order: r (HMC), the
// stick loop (A,B -> v -> h -> weights -> u), alpha and beta (rejection
// sampling), every assignment, and the hyperparameters of each occupied
// expert (HMC). Step sizes adapt during burn-in and are frozen afterward.
class GpksbpChain {
 public:
  GpksbpChain(Eigen::MatrixXd X, Eigen::VectorXd y, const Priors& priors,
              const ChainConfig& config, std::uint64_t seed);

  void sweep();
  ChainTrace run();

  const GatingState& gating() const { return gating_; }
  const SliceAuxiliaries& aux() const { return aux_; }
  const std::vector<Expert>& experts() const { return experts_; }
  const std::vector<int>& assignments() const { return assignments_; }
  const Eigen::MatrixXd& weights() const { return weights_; }
  const Eigen::MatrixXd& inputs() const { return X_; }
  const Eigen::VectorXd& response() const { return y_; }
  int iteration() const { return iteration_; }

  // Replaces the response vector; covariance caches depend on X only and
  // stay valid. Used by the joint-distribution (Geweke-style) test.
  void set_response(const Eigen::VectorXd& y);

  void freeze_adaptation();
  TraceRecord snapshot() const;

 private:
  void update_kernel_width();
  void run_stick_loop();
  void sync_expert_list();
  void update_counts();
  void update_assignments();
  void update_expert_hypers();
  CubeHmcSampler& location_sampler(int idx);
  HmcSampler& hyper_sampler(int idx);

  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
  Priors priors_;
  ChainConfig config_;
  Rng rng_;

  GatingState gating_;
  SliceAuxiliaries aux_;
  std::vector<int> assignments_;
  std::vector<Expert> experts_;
  Eigen::MatrixXd weights_;

  HmcSampler r_sampler_;
  std::vector<CubeHmcSampler> h_samplers_;
  std::vector<HmcSampler> theta_samplers_;
  bool adaptation_frozen_ = false;
  int iteration_ = 0;
};

ChainTrace run_gpksbp(const Dataset& dataset, const Priors& priors,
                      const ChainConfig& config, std::uint64_t seed);

}  // namespace gpmix
