#include "gpmix/gp_expert.hpp"

#include <algorithm>
#include <cmath>

namespace gpmix {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& X, const Eigen::VectorXd& l) {
  const int n = static_cast<int>(X.rows());
  Eigen::MatrixXd C(n, n);
  for (int i = 0; i < n; ++i) {
    C(i, i) = 1.0;
    for (int j = 0; j < i; ++j) {
      double s = 0.0;
      for (int d = 0; d < X.cols(); ++d) {
        const double z = (X(i, d) - X(j, d)) / l(d);
        s += z * z;
      }
      C(i, j) = C(j, i) = std::exp(-s);
    }
  }
  return C;
}

// Cholesky of K with the failure contract attached.
Eigen::LLT<Eigen::MatrixXd> factorize(const Eigen::MatrixXd& K) {
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() != Eigen::Success) {
    throw NumericError("covariance not positive-definite after jitter");
  }
  return llt;
}

double log_det_from_llt(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

Eigen::MatrixXd covariance_submatrix(const Eigen::MatrixXd& X, const std::vector<int>& idx,
                                     const ExpertHyper& hyper) {
  const int n = static_cast<int>(idx.size());
  Eigen::MatrixXd K(n, n);
  for (int i = 0; i < n; ++i) {
    K(i, i) = hyper.output_scale + hyper.noise_var + kCovJitter;
    for (int j = 0; j < i; ++j) {
      const double v = hyper.output_scale *
                       se_correlation(X.row(idx[i]), X.row(idx[j]), hyper.length_scales);
      K(i, j) = K(j, i) = v;
    }
  }
  return K;
}

// Covariance of an unseen point against the cached rows (no noise term).
Eigen::VectorXd cross_covariance(const Eigen::MatrixXd& X, int point_index,
                                 const std::vector<int>& idx, const ExpertHyper& hyper) {
  Eigen::VectorXd k(idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j) {
    k(j) = hyper.output_scale *
           se_correlation(X.row(point_index), X.row(idx[j]), hyper.length_scales);
  }
  return k;
}

}  // namespace

void ExpertHyper::validate() const {
  if (!(output_scale > 0.0) || !(noise_var > 0.0)) {
    throw std::invalid_argument("expert hyperparameters must be strictly positive");
  }
  for (int d = 0; d < length_scales.size(); ++d) {
    if (!(length_scales(d) > 0.0)) {
      throw std::invalid_argument("length-scales must be strictly positive");
    }
  }
}

double se_correlation(const Eigen::VectorXd& xm, const Eigen::VectorXd& xn,
                      const Eigen::VectorXd& l) {
  if (xm.size() != xn.size() || xm.size() != l.size()) {
    throw std::invalid_argument("se_correlation: dimension mismatch");
  }
  double s = 0.0;
  for (int d = 0; d < l.size(); ++d) {
    if (!(l(d) > 0.0)) throw std::invalid_argument("se_correlation: non-positive length-scale");
    const double z = (xm(d) - xn(d)) / l(d);
    s += z * z;
  }
  return std::exp(-s);
}

double covariance_entry(const Eigen::VectorXd& xm, const Eigen::VectorXd& xn,
                        const ExpertHyper& hyper, bool same_index) {
  hyper.validate();
  double v = hyper.output_scale * se_correlation(xm, xn, hyper.length_scales);
  if (same_index) v += hyper.noise_var;
  return v;
}

Eigen::MatrixXd build_covariance(const Eigen::MatrixXd& X, const ExpertHyper& hyper) {
  hyper.validate();
  Eigen::MatrixXd K = hyper.output_scale * correlation_matrix(X, hyper.length_scales);
  K.diagonal().array() += hyper.noise_var + kCovJitter;
  return K;
}

double log_marginal_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                               const ExpertHyper& hyper) {
  const int n = static_cast<int>(X.rows());
  auto llt = factorize(build_covariance(X, hyper));
  const Eigen::VectorXd alpha = llt.solve(y);
  return -0.5 * y.dot(alpha) - 0.5 * log_det_from_llt(llt) - 0.5 * n * kLog2Pi;
}

LmlGradient lml_and_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             const ExpertHyper& hyper) {
  hyper.validate();
  const int n = static_cast<int>(X.rows());
  const int D = static_cast<int>(X.cols());

  const Eigen::MatrixXd C = correlation_matrix(X, hyper.length_scales);
  Eigen::MatrixXd K = hyper.output_scale * C;
  K.diagonal().array() += hyper.noise_var + kCovJitter;

  auto llt = factorize(K);
  const Eigen::VectorXd alpha = llt.solve(y);
  const Eigen::MatrixXd Kinv = llt.solve(Eigen::MatrixXd::Identity(n, n));
  // M = K^-1 y y^T K^-1 - K^-1; each partial is 1/2 tr(M dK).
  const Eigen::MatrixXd M = alpha * alpha.transpose() - Kinv;

  LmlGradient g;
  g.value = -0.5 * y.dot(alpha) - 0.5 * log_det_from_llt(llt) - 0.5 * n * kLog2Pi;
  g.d_output_scale = 0.5 * (M.array() * C.array()).sum();
  g.d_noise = 0.5 * M.trace();
  g.d_length.resize(D);
  for (int d = 0; d < D; ++d) {
    // dK/dl_d = 2 sigma^2 (C .* Delta_d) / l_d^3, Delta_d the squared
    // differences in dimension d.
    const double l3 = std::pow(hyper.length_scales(d), 3);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < i; ++j) {
        const double diff = X(i, d) - X(j, d);
        acc += 2.0 * M(i, j) * C(i, j) * diff * diff;  // symmetric off-diagonals
      }
    }
    g.d_length(d) = 0.5 * 2.0 * hyper.output_scale * acc / l3;
  }
  return g;
}

std::pair<double, double> conditional_predictive(const Eigen::VectorXd& x_star,
                                                 const Eigen::MatrixXd& X,
                                                 const Eigen::VectorXd& y,
                                                 const ExpertHyper& hyper) {
  hyper.validate();
  if (X.rows() == 0) {
    return {0.0, hyper.output_scale + hyper.noise_var};
  }
  auto llt = factorize(build_covariance(X, hyper));
  Eigen::VectorXd k(X.rows());
  for (int j = 0; j < X.rows(); ++j) {
    k(j) = hyper.output_scale * se_correlation(x_star, X.row(j), hyper.length_scales);
  }
  const Eigen::VectorXd w = llt.solve(k);
  const double mean = w.dot(y);
  double var = hyper.output_scale + hyper.noise_var - w.dot(k);
  var = std::max(var, hyper.noise_var);
  return {mean, var};
}

int ExpertPosteriorCache::position_of(int point_index) const {
  auto it = std::find(assigned.begin(), assigned.end(), point_index);
  if (it == assigned.end()) {
    throw std::invalid_argument("point not assigned to this expert");
  }
  return static_cast<int>(it - assigned.begin());
}

ExpertPosteriorCache build_cache(const Eigen::MatrixXd& X, const std::vector<int>& indices,
                                 const ExpertHyper& hyper) {
  ExpertPosteriorCache cache;
  cache.assigned = indices;
  cache.rank1_ops = 0;
  const int n = static_cast<int>(indices.size());
  if (n == 0) {
    cache.inv.resize(0, 0);
    cache.log_det = 0.0;
    return cache;
  }
  auto llt = factorize(covariance_submatrix(X, indices, hyper));
  cache.inv = llt.solve(Eigen::MatrixXd::Identity(n, n));
  cache.log_det = log_det_from_llt(llt);
  return cache;
}

Rank1Result rank1_downdate(ExpertPosteriorCache& cache, int point_index,
                           const Eigen::MatrixXd& X, const ExpertHyper& hyper) {
  const int pos = cache.position_of(point_index);
  const int n = cache.size();
  if (n == 1) {
    cache.assigned.clear();
    cache.inv.resize(0, 0);
    cache.log_det = 0.0;
    cache.rank1_ops = 0;
    return {};
  }

  std::vector<int> reduced = cache.assigned;
  reduced.erase(reduced.begin() + pos);

  const double a = cache.inv(pos, pos);
  if (!(a > kPivotTol) || cache.rank1_ops >= kCacheRefreshInterval) {
    const bool fell_back = !(a > kPivotTol);
    cache = build_cache(X, reduced, hyper);
    return {fell_back};
  }

  // D^-1 = d - c b / a, with the removed row/column as the scalar block.
  Eigen::VectorXd col(n - 1);
  int k = 0;
  for (int i = 0; i < n; ++i) {
    if (i == pos) continue;
    col(k++) = cache.inv(i, pos);
  }
  Eigen::MatrixXd reduced_inv(n - 1, n - 1);
  int ri = 0;
  for (int i = 0; i < n; ++i) {
    if (i == pos) continue;
    int rj = 0;
    for (int j = 0; j < n; ++j) {
      if (j == pos) continue;
      reduced_inv(ri, rj) = cache.inv(i, j) - col(ri) * col(rj) / a;
      ++rj;
    }
    ++ri;
  }

  cache.assigned = std::move(reduced);
  cache.inv = std::move(reduced_inv);
  cache.log_det += std::log(a);  // Schur complement of the removed point is 1/a
  cache.rank1_ops += 1;
  return {};
}

Rank1Result rank1_update(ExpertPosteriorCache& cache, int point_index,
                         const Eigen::MatrixXd& X, const ExpertHyper& hyper) {
  const int n = cache.size();
  const double diag = hyper.output_scale + hyper.noise_var + kCovJitter;
  if (n == 0) {
    cache.assigned = {point_index};
    cache.inv = Eigen::MatrixXd::Constant(1, 1, 1.0 / diag);
    cache.log_det = std::log(diag);
    cache.rank1_ops = 0;
    return {};
  }

  const Eigen::VectorXd c = cross_covariance(X, point_index, cache.assigned, hyper);
  const Eigen::VectorXd w = cache.inv * c;
  const double schur = diag - c.dot(w);

  std::vector<int> enlarged = cache.assigned;
  enlarged.push_back(point_index);

  if (!(schur > kPivotTol) || cache.rank1_ops >= kCacheRefreshInterval) {
    const bool fell_back = !(schur > kPivotTol);
    cache = build_cache(X, enlarged, hyper);
    return {fell_back};
  }

  const double a = 1.0 / schur;
  Eigen::MatrixXd inv(n + 1, n + 1);
  inv.topLeftCorner(n, n) = cache.inv + a * w * w.transpose();
  inv.topRightCorner(n, 1) = -a * w;
  inv.bottomLeftCorner(1, n) = (-a * w).transpose();
  inv(n, n) = a;

  cache.assigned = std::move(enlarged);
  cache.inv = std::move(inv);
  cache.log_det += std::log(schur);
  cache.rank1_ops += 1;
  return {};
}

std::pair<double, double> predictive_from_cache(const Eigen::VectorXd& x_star,
                                                const Eigen::MatrixXd& X,
                                                const Eigen::VectorXd& y,
                                                const ExpertHyper& hyper,
                                                const ExpertPosteriorCache& cache) {
  if (cache.empty()) {
    return {0.0, hyper.output_scale + hyper.noise_var};
  }
  Eigen::VectorXd k(cache.size());
  for (int j = 0; j < cache.size(); ++j) {
    k(j) = hyper.output_scale *
           se_correlation(x_star, X.row(cache.assigned[j]), hyper.length_scales);
  }
  Eigen::VectorXd y_sub(cache.size());
  for (int i = 0; i < cache.size(); ++i) y_sub(i) = y(cache.assigned[i]);
  const Eigen::VectorXd w = cache.inv * k;
  const double mean = w.dot(y_sub);
  double var = hyper.output_scale + hyper.noise_var - w.dot(k);
  var = std::max(var, hyper.noise_var);
  return {mean, var};
}

double log_normal_pdf(double x, double mean, double var) {
  const double z = x - mean;
  return -0.5 * (kLog2Pi + std::log(var) + z * z / var);
}

}  // namespace gpmix
