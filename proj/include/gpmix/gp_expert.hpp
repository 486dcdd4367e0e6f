#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

namespace gpmix {

// Diagonal jitter added (beyond the noise variance) before any factorization.
constexpr double kCovJitter = 1e-8;

// Pivot threshold below which rank-1 formulas fall back to refactorization.
constexpr double kPivotTol = 1e-12;

// Rank-1 operations per expert before the inverse is refreshed from scratch.
constexpr int kCacheRefreshInterval = 500;

// Covariance factorization failed even after jitter.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Per-expert GP hyperparameters: output scale sigma^2, per-dimension
// length-scales, and additive noise variance tau^2. All strictly positive.
struct ExpertHyper {
  double output_scale = 1.0;
  Eigen::VectorXd length_scales;
  double noise_var = 1.0;

  void validate() const;
};

// c(x_m, x_n) = exp(-sum_d ((x_{m,d}-x_{n,d})/l_d)^2), in (0, 1].
double se_correlation(const Eigen::VectorXd& xm, const Eigen::VectorXd& xn,
                      const Eigen::VectorXd& l);

// k(x_m, x_n) = sigma^2 c(x_m, x_n) + delta_{m,n} tau^2.
double covariance_entry(const Eigen::VectorXd& xm, const Eigen::VectorXd& xn,
                        const ExpertHyper& hyper, bool same_index);

// Full covariance over the rows of X, with kCovJitter on the diagonal.
Eigen::MatrixXd build_covariance(const Eigen::MatrixXd& X, const ExpertHyper& hyper);

// Zero-mean Gaussian log density of y under the expert's covariance.
double log_marginal_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                               const ExpertHyper& hyper);

struct LmlGradient {
  double value = 0.0;
  double d_output_scale = 0.0;
  Eigen::VectorXd d_length;
  double d_noise = 0.0;
};

// Log marginal likelihood together with its exact gradient in the original
// (not log) parameterization, via 1/2 tr((K^-1 y y^T K^-1 - K^-1) dK/dtheta).
LmlGradient lml_and_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             const ExpertHyper& hyper);

// GP posterior predictive (mean, variance) for a noisy observation at x_star.
// With no data this is the prior: (0, sigma^2 + tau^2).
std::pair<double, double> conditional_predictive(const Eigen::VectorXd& x_star,
                                                 const Eigen::MatrixXd& X,
                                                 const Eigen::VectorXd& y,
                                                 const ExpertHyper& hyper);

// Explicit inverse of the covariance restricted to the assigned points,
// maintained by rank-1 updates as assignments move between experts.
struct ExpertPosteriorCache {
  std::vector<int> assigned;  // dataset row indices, in matrix order
  Eigen::MatrixXd inv;        // (K + jitter I)^-1 over those rows
  double log_det = 0.0;       // log det of the same matrix
  int rank1_ops = 0;          // operations since last full refresh

  int size() const { return static_cast<int>(assigned.size()); }
  bool empty() const { return assigned.empty(); }
  int position_of(int point_index) const;
};

ExpertPosteriorCache build_cache(const Eigen::MatrixXd& X, const std::vector<int>& indices,
                                 const ExpertHyper& hyper);

struct Rank1Result {
  bool fell_back = false;  // refactorized directly instead of updating
};

// Removes one assigned point. Appendix case #1: with the removed point
// permuted to the front, D^-1 = d - c b / a with scalar pivot a.
Rank1Result rank1_downdate(ExpertPosteriorCache& cache, int point_index,
                           const Eigen::MatrixXd& X, const ExpertHyper& hyper);

// Adds one point. Appendix case #2: a = 1/(A - B D^-1 C) and the bordered
// blocks follow; the new point occupies the last position.
Rank1Result rank1_update(ExpertPosteriorCache& cache, int point_index,
                         const Eigen::MatrixXd& X, const ExpertHyper& hyper);

// Predictive (mean, variance) through the cached inverse. Empty cache gives
// the prior (0, sigma^2 + tau^2). Variance is floored at tau^2.
std::pair<double, double> predictive_from_cache(const Eigen::VectorXd& x_star,
                                                const Eigen::MatrixXd& X,
                                                const Eigen::VectorXd& y,
                                                const ExpertHyper& hyper,
                                                const ExpertPosteriorCache& cache);

double log_normal_pdf(double x, double mean, double var);

}  // namespace gpmix
