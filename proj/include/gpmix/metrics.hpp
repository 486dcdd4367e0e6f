#pragma once

#include <Eigen/Dense>
#include <vector>

#include "gpmix/gibbs.hpp"
#include "gpmix/priors.hpp"
#include "gpmix/rng.hpp"

namespace gpmix {

// Finite Gaussian mixture at one test location: the truncated experts plus
// one trailing fresh-prior component carrying the remaining weight.
struct PredictiveMixture {
  Eigen::VectorXd weights;
  Eigen::VectorXd means;
  Eigen::VectorXd variances;
};

double mixture_mean(const PredictiveMixture& mix);
double mixture_density(const PredictiveMixture& mix, double y);
double sample_mixture(const PredictiveMixture& mix, Rng& rng, int* component = nullptr);

// Prediction machinery for one retained MCMC record: per-expert covariance
// inverses are built once, fresh-prior hypers are drawn once.
class RecordPredictor {
 public:
  RecordPredictor(const TraceRecord& record, bool is_rg, const Eigen::MatrixXd& X,
                  const Eigen::VectorXd& y, const Priors& priors, Rng& rng);

  PredictiveMixture mixture(const Eigen::VectorXd& x_star) const;

 private:
  TraceRecord record_;
  bool is_rg_;
  const Eigen::MatrixXd& X_;
  const Eigen::VectorXd& y_;
  std::vector<ExpertPosteriorCache> caches_;
  ExpertHyper fresh_;
};

// Mixture for one record at one location, fresh-prior component included.
PredictiveMixture predictive_mixture(const Eigen::VectorXd& x_star,
                                     const TraceRecord& record, bool is_rg,
                                     const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                     const Priors& priors, Rng& rng);

double rmse(const Eigen::VectorXd& predictions, const Eigen::VectorXd& truths);

// Mean over test points of -log(mean over records of the predictive
// density); zero densities are clamped at 1e-300 and counted.
double nlpd(const Eigen::MatrixXd& per_record_densities, int* clamped = nullptr);

// Closed-form CRPS for a Gaussian mixture.
double crps(const PredictiveMixture& mix, double y);
double crps_psi(double mu, double var);

struct MetricsResult {
  double rmse = 0.0;
  double nlpd = 0.0;
  double crps = 0.0;
  int clamped_densities = 0;
};

struct MetricsOptions {
  // Grand predictive mean across records by default; per-record RMSE
  // averaged over records when set.
  bool per_record_rmse = false;
};

// Scores a trace against a test set using every retained record.
MetricsResult score_trace(const ChainTrace& trace, const Eigen::MatrixXd& X_test,
                          const Eigen::VectorXd& y_test, const Priors& priors,
                          std::uint64_t seed, const MetricsOptions& options = {});

}  // namespace gpmix
