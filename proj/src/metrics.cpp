#include "gpmix/metrics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "gpmix/ksbp.hpp"

namespace gpmix {

namespace {

double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace

double mixture_mean(const PredictiveMixture& mix) { return mix.weights.dot(mix.means); }

double mixture_density(const PredictiveMixture& mix, double y) {
  double dens = 0.0;
  for (int i = 0; i < mix.weights.size(); ++i) {
    if (mix.weights(i) <= 0.0) continue;
    dens += mix.weights(i) * std::exp(log_normal_pdf(y, mix.means(i), mix.variances(i)));
  }
  return dens;
}

double sample_mixture(const PredictiveMixture& mix, Rng& rng, int* component) {
  double u = draw_uniform(rng) * mix.weights.sum();
  int chosen = static_cast<int>(mix.weights.size()) - 1;
  for (int i = 0; i < mix.weights.size(); ++i) {
    u -= mix.weights(i);
    if (u <= 0.0) {
      chosen = i;
      break;
    }
  }
  if (component != nullptr) *component = chosen;
  return draw_normal(rng, mix.means(chosen), std::sqrt(mix.variances(chosen)));
}

RecordPredictor::RecordPredictor(const TraceRecord& record, bool is_rg,
                                 const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                 const Priors& priors, Rng& rng)
    : record_(record), is_rg_(is_rg), X_(X), y_(y) {
  const int n_experts = static_cast<int>(record_.experts.size());
  std::vector<std::vector<int>> groups(n_experts);
  for (std::size_t n = 0; n < record_.s.size(); ++n) {
    groups[record_.s[n]].push_back(static_cast<int>(n));
  }
  caches_.reserve(n_experts);
  for (int i = 0; i < n_experts; ++i) {
    caches_.push_back(build_cache(X_, groups[i], record_.experts[i]));
  }
  fresh_ = draw_hyper_from_priors(priors, static_cast<int>(X_.cols()), std::nullopt, rng);
}

PredictiveMixture RecordPredictor::mixture(const Eigen::VectorXd& x_star) const {
  const int k = static_cast<int>(record_.experts.size());
  PredictiveMixture mix;
  mix.weights.resize(k + 1);
  mix.means.resize(k + 1);
  mix.variances.resize(k + 1);

  if (!is_rg_) {
    double remainder = 1.0;
    for (int i = 0; i < k; ++i) {
      const double breach = record_.v[i] * kernel(x_star, record_.h[i], record_.r);
      mix.weights(i) = breach * remainder;
      remainder *= 1.0 - breach;
    }
    mix.weights(k) = remainder;
  } else {
    // Input-dependent occupation prior for an unseen point, with the
    // concentration mass on the fresh component.
    const int n = static_cast<int>(record_.s.size());
    Eigen::VectorXd per_expert = Eigen::VectorXd::Zero(k);
    double total = 0.0;
    const double r2 = record_.r * record_.r;
    for (int b = 0; b < n; ++b) {
      const double kap = std::exp(-(x_star - X_.row(b).transpose()).squaredNorm() / r2);
      per_expert(record_.s[b]) += kap;
      total += kap;
    }
    const double denom = n + record_.rg_beta;
    for (int i = 0; i < k; ++i) {
      mix.weights(i) = total > 0.0 ? n * (per_expert(i) / total) / denom : 0.0;
    }
    mix.weights(k) = record_.rg_beta / denom;
  }

  for (int i = 0; i < k; ++i) {
    auto [mean, var] =
        predictive_from_cache(x_star, X_, y_, record_.experts[i], caches_[i]);
    mix.means(i) = mean;
    mix.variances(i) = var;
  }
  mix.means(k) = 0.0;
  mix.variances(k) = fresh_.output_scale + fresh_.noise_var;
  return mix;
}

PredictiveMixture predictive_mixture(const Eigen::VectorXd& x_star,
                                     const TraceRecord& record, bool is_rg,
                                     const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                     const Priors& priors, Rng& rng) {
  return RecordPredictor(record, is_rg, X, y, priors, rng).mixture(x_star);
}

double rmse(const Eigen::VectorXd& predictions, const Eigen::VectorXd& truths) {
  if (predictions.size() == 0 || predictions.size() != truths.size()) {
    throw std::invalid_argument("rmse: empty or mismatched inputs");
  }
  return std::sqrt((predictions - truths).squaredNorm() / predictions.size());
}

double nlpd(const Eigen::MatrixXd& per_record_densities, int* clamped) {
  const int records = static_cast<int>(per_record_densities.rows());
  const int points = static_cast<int>(per_record_densities.cols());
  if (records == 0 || points == 0) throw std::invalid_argument("nlpd: empty input");
  int n_clamped = 0;
  double acc = 0.0;
  for (int t = 0; t < points; ++t) {
    double mean_dens = per_record_densities.col(t).mean();
    if (mean_dens < 1e-300) {
      mean_dens = 1e-300;
      ++n_clamped;
    }
    acc += -std::log(mean_dens);
  }
  if (clamped != nullptr) *clamped = n_clamped;
  return acc / points;
}

double crps_psi(double mu, double var) {
  const double sigma = std::sqrt(var);
  if (!(sigma > 0.0)) throw std::invalid_argument("crps_psi: variance must be positive");
  const double z = mu / sigma;
  return 2.0 * sigma * normal_pdf(z) + mu * (2.0 * normal_cdf(z) - 1.0);
}

double crps(const PredictiveMixture& mix, double y) {
  const int k = static_cast<int>(mix.weights.size());
  double first = 0.0;
  for (int i = 0; i < k; ++i) {
    if (mix.weights(i) == 0.0) continue;
    first += mix.weights(i) * crps_psi(y - mix.means(i), mix.variances(i));
  }
  double second = 0.0;
  for (int i = 0; i < k; ++i) {
    if (mix.weights(i) == 0.0) continue;
    for (int j = 0; j < k; ++j) {
      if (mix.weights(j) == 0.0) continue;
      second += mix.weights(i) * mix.weights(j) *
                crps_psi(mix.means(i) - mix.means(j), mix.variances(i) + mix.variances(j));
    }
  }
  return first - 0.5 * second;
}

MetricsResult score_trace(const ChainTrace& trace, const Eigen::MatrixXd& X_test,
                          const Eigen::VectorXd& y_test, const Priors& priors,
                          std::uint64_t seed, const MetricsOptions& options) {
  const auto records = trace.retained();
  const int S = static_cast<int>(records.size());
  const int T = static_cast<int>(X_test.rows());
  if (S == 0 || T == 0) throw std::invalid_argument("score_trace: nothing to score");

  Rng rng = make_rng(seed, "predict");
  const bool is_rg = trace.model == "rg";

  Eigen::MatrixXd means(S, T);
  Eigen::MatrixXd dens(S, T);
  double crps_acc = 0.0;
  for (int s = 0; s < S; ++s) {
    RecordPredictor predictor(*records[s], is_rg, trace.X, trace.y, priors, rng);
    for (int t = 0; t < T; ++t) {
      const PredictiveMixture mix = predictor.mixture(X_test.row(t));
      means(s, t) = mixture_mean(mix);
      dens(s, t) = mixture_density(mix, y_test(t));
      crps_acc += crps(mix, y_test(t));
    }
  }

  MetricsResult out;
  if (options.per_record_rmse) {
    double acc = 0.0;
    for (int s = 0; s < S; ++s) acc += rmse(means.row(s).transpose(), y_test);
    out.rmse = acc / S;
  } else {
    out.rmse = rmse(means.colwise().mean().transpose(), y_test);
  }
  out.nlpd = nlpd(dens, &out.clamped_densities);
  out.crps = crps_acc / (static_cast<double>(S) * T);
  return out;
}

}  // namespace gpmix
