#include "gpmix/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gpmix/rejection.hpp"

namespace gpmix {

namespace {

std::pair<Eigen::MatrixXd, Eigen::VectorXd> gather(const Eigen::MatrixXd& X,
                                                   const Eigen::VectorXd& y,
                                                   const std::vector<int>& idx) {
  Eigen::MatrixXd Xs(idx.size(), X.cols());
  Eigen::VectorXd ys(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    Xs.row(k) = X.row(idx[k]);
    ys(k) = y(idx[k]);
  }
  return {Xs, ys};
}

int categorical_from_logs(const std::vector<double>& log_weights, Rng& rng) {
  const double mx = *std::max_element(log_weights.begin(), log_weights.end());
  double total = 0.0;
  std::vector<double> w(log_weights.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(log_weights[i] - mx);
    total += w[i];
  }
  double u = draw_uniform(rng) * total;
  for (std::size_t i = 0; i < w.size(); ++i) {
    u -= w[i];
    if (u <= 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(w.size()) - 1;
}

}  // namespace

void ChainConfig::validate() const {
  hmc.validate();
  if (total_iterations < 1) throw std::invalid_argument("total_iterations must be >= 1");
  if (burn_in < 0 || burn_in >= total_iterations) {
    throw std::invalid_argument("burn_in must satisfy 0 <= burn_in < total_iterations");
  }
  if (thin < 1) throw std::invalid_argument("thin must be >= 1");
  if ((total_iterations - burn_in) % thin != 0) {
    throw std::invalid_argument("thin must divide total_iterations - burn_in");
  }
}

std::vector<const TraceRecord*> ChainTrace::retained() const {
  std::vector<const TraceRecord*> out;
  for (const auto& rec : records) {
    if (rec.iter > burn_in) out.push_back(&rec);
  }
  return out;
}

ExpertHyper draw_hyper_from_priors(const Priors& priors, int dim,
                                   std::optional<double> fixed_noise_var, Rng& rng) {
  ExpertHyper h;
  h.output_scale = priors.sigma2.draw(rng);
  h.length_scales.resize(dim);
  for (int d = 0; d < dim; ++d) h.length_scales(d) = priors.length.draw(rng);
  h.noise_var = fixed_noise_var ? *fixed_noise_var : priors.noise.draw(rng);
  return h;
}

void resample_empty_expert_hypers(std::vector<Expert>& experts, const Priors& priors,
                                  int dim, std::optional<double> fixed_noise_var,
                                  Rng& rng) {
  for (auto& expert : experts) {
    if (expert.cache.empty()) {
      expert.hyper = draw_hyper_from_priors(priors, dim, fixed_noise_var, rng);
    }
  }
}

Eigen::VectorXd pack_hyper(const ExpertHyper& hyper, bool include_noise) {
  const int dim = static_cast<int>(hyper.length_scales.size());
  Eigen::VectorXd theta(dim + (include_noise ? 2 : 1));
  theta(0) = hyper.output_scale;
  theta.segment(1, dim) = hyper.length_scales;
  if (include_noise) theta(dim + 1) = hyper.noise_var;
  return theta;
}

ExpertHyper unpack_hyper(const Eigen::VectorXd& theta, int dim, bool include_noise,
                         double fixed_noise_var) {
  ExpertHyper h;
  h.output_scale = theta(0);
  h.length_scales = theta.segment(1, dim);
  h.noise_var = include_noise ? theta(dim + 1) : fixed_noise_var;
  return h;
}

std::pair<double, Eigen::VectorXd> theta_log_posterior_grad(
    const Eigen::VectorXd& theta, const Eigen::MatrixXd& X_sub,
    const Eigen::VectorXd& y_sub, const Priors& priors, int dim, bool include_noise,
    double fixed_noise_var) {
  const ExpertHyper hyper = unpack_hyper(theta, dim, include_noise, fixed_noise_var);
  const LmlGradient g = lml_and_gradient(X_sub, y_sub, hyper);

  double lp = g.value;
  Eigen::VectorXd grad(theta.size());
  {
    auto [plp, pd] = gamma_log_prior_grad(hyper.output_scale, priors.sigma2.shape,
                                          priors.sigma2.scale);
    lp += plp;
    grad(0) = g.d_output_scale + pd;
  }
  for (int d = 0; d < dim; ++d) {
    auto [plp, pd] =
        gamma_log_prior_grad(hyper.length_scales(d), priors.length.shape, priors.length.scale);
    lp += plp;
    grad(1 + d) = g.d_length(d) + pd;
  }
  if (include_noise) {
    auto [plp, pd] =
        gamma_log_prior_grad(hyper.noise_var, priors.noise.shape, priors.noise.scale);
    lp += plp;
    grad(dim + 1) = g.d_noise + pd;
  }
  return {lp, grad};
}

int sample_assignment(int n, int current, double u_n, const Eigen::VectorXd& weights_row,
                      std::vector<Expert>& experts, const Eigen::MatrixXd& X,
                      const Eigen::VectorXd& y, Rng& rng) {
  std::vector<int> candidates;
  for (int i = 0; i < weights_row.size(); ++i) {
    if (u_n < weights_row(i)) candidates.push_back(i);
  }
  if (candidates.empty()) {
    throw std::runtime_error("sample_assignment: empty candidate set");
  }
  if (candidates.size() == 1) return candidates[0];

  // Leave-one-out view of the current expert; only committed on a move.
  ExpertPosteriorCache loo = experts[current].cache;
  rank1_downdate(loo, n, X, experts[current].hyper);

  const Eigen::VectorXd x_n = X.row(n);
  std::vector<double> log_dens(candidates.size());
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const int i = candidates[k];
    const ExpertPosteriorCache& cache = (i == current) ? loo : experts[i].cache;
    auto [mean, var] = predictive_from_cache(x_n, X, y, experts[i].hyper, cache);
    log_dens[k] = log_normal_pdf(y(n), mean, var);
  }

  const int chosen = candidates[categorical_from_logs(log_dens, rng)];
  if (chosen != current) {
    experts[current].cache = std::move(loo);
    rank1_update(experts[chosen].cache, n, X, experts[chosen].hyper);
  }
  return chosen;
}

GpksbpChain::GpksbpChain(Eigen::MatrixXd X, Eigen::VectorXd y, const Priors& priors,
                         const ChainConfig& config, std::uint64_t seed)
    : X_(std::move(X)),
      y_(std::move(y)),
      priors_(priors),
      config_(config),
      rng_(make_rng(seed, "chain")),
      r_sampler_(config.hmc) {
  config_.validate();
  const int n = static_cast<int>(X_.rows());
  const int dim = static_cast<int>(X_.cols());

  // Neutral initialization: everything on stick one, hypers at prior means,
  // gating at prior means, stick drawn from its prior.
  gating_.kernel_width = priors_.kernel_width.mean();
  gating_.alpha = std::max(1, static_cast<int>(std::lround(1.0 / priors_.p_alpha)));
  gating_.beta = std::max(1, static_cast<int>(std::lround(1.0 / priors_.p_beta)));
  Stick first;
  first.v = draw_beta(rng_, gating_.alpha, gating_.beta);
  first.h.resize(dim);
  for (int d = 0; d < dim; ++d) first.h(d) = draw_uniform(rng_);
  gating_.sticks = {first};
  gating_.truncation_level = 1;

  assignments_.assign(n, 0);

  ExpertHyper hyper;
  hyper.output_scale = priors_.sigma2.mean();
  hyper.length_scales = Eigen::VectorXd::Constant(dim, priors_.length.mean());
  hyper.noise_var = config_.fixed_noise_var ? *config_.fixed_noise_var : priors_.noise.mean();
  std::vector<int> all(n);
  for (int i = 0; i < n; ++i) all[i] = i;
  experts_.push_back({hyper, build_cache(X_, all, hyper)});

  // The first r update conditions on B drawn from the initialized state:
  // s_n = 1 for all n forces A = B = 1 on stick one.
  aux_.u = Eigen::VectorXd::Zero(n);
  StickAux sa;
  sa.points = all;
  sa.A.assign(n, 1);
  sa.B.assign(n, 1);
  aux_.per_stick = {sa};

  weights_.resize(n, 0);
}

CubeHmcSampler& GpksbpChain::location_sampler(int idx) {
  while (static_cast<int>(h_samplers_.size()) <= idx) {
    CubeHmcSampler s(config_.hmc);
    if (adaptation_frozen_) {
      s.set_step(h_samplers_.empty() ? config_.hmc.initial_step : h_samplers_.back().step());
    }
    h_samplers_.push_back(std::move(s));
  }
  return h_samplers_[idx];
}

HmcSampler& GpksbpChain::hyper_sampler(int idx) {
  while (static_cast<int>(theta_samplers_.size()) <= idx) {
    HmcSampler s(config_.hmc);
    if (adaptation_frozen_) {
      s.set_step(theta_samplers_.empty() ? config_.hmc.initial_step
                                         : theta_samplers_.back().step());
    }
    theta_samplers_.push_back(std::move(s));
  }
  return theta_samplers_[idx];
}

void GpksbpChain::freeze_adaptation() {
  adaptation_frozen_ = true;
  r_sampler_.freeze();
  for (auto& s : h_samplers_) s.freeze();
  for (auto& s : theta_samplers_) s.freeze();
}

void GpksbpChain::set_response(const Eigen::VectorXd& y) {
  if (y.size() != y_.size()) throw std::invalid_argument("set_response: size mismatch");
  y_ = y;
}

void GpksbpChain::update_kernel_width() {
  // Conditioning on indicators left over from the previous sweep biases r
  // once s and h have moved; a fresh (A,B) draw at the current state keeps
  // the two-stage update exact.
  std::vector<StickAux> fresh(gating_.sticks.size());
  for (std::size_t i = 0; i < gating_.sticks.size(); ++i) {
    const Stick& stick = gating_.sticks[i];
    for (int n = 0; n < static_cast<int>(assignments_.size()); ++n) {
      if (assignments_[n] < static_cast<int>(i)) continue;
      const double kap = kernel(X_.row(n), stick.h, gating_.kernel_width);
      auto [a, b] = sample_aux_AB(assignments_[n], static_cast<int>(i), stick.v, kap, rng_);
      fresh[i].points.push_back(n);
      fresh[i].A.push_back(static_cast<std::uint8_t>(a));
      fresh[i].B.push_back(static_cast<std::uint8_t>(b));
    }
  }
  TargetFn target = [this, &fresh](const Eigen::VectorXd& theta) {
    auto [lp, d] = r_log_posterior_grad_ksbp(theta(0), fresh, gating_.sticks, X_,
                                             priors_.kernel_width);
    Eigen::VectorXd grad(1);
    grad(0) = d;
    return std::make_pair(lp, grad);
  };
  Eigen::VectorXd cur(1);
  cur(0) = gating_.kernel_width;
  gating_.kernel_width = r_sampler_.sample(target, cur, rng_).value(0);
}

void GpksbpChain::run_stick_loop() {
  StickLocationUpdater update = [this](int idx, const Eigen::VectorXd& current,
                                       const StickAux& sa) {
    TargetFn target = [this, &sa](const Eigen::VectorXd& h) {
      return h_log_posterior_grad(h, sa, X_, gating_.kernel_width);
    };
    return location_sampler(idx).sample(target, current, rng_).value;
  };
  weights_ = stick_loop(X_, gating_, aux_, assignments_, update, rng_).weights;
}

void GpksbpChain::sync_expert_list() {
  const int level = gating_.truncation_level;
  const int dim = static_cast<int>(X_.cols());
  while (static_cast<int>(experts_.size()) < level) {
    // Placeholder hypers; every empty expert is redrawn from the priors
    // before assignments are sampled.
    Expert e;
    e.hyper.output_scale = priors_.sigma2.mean();
    e.hyper.length_scales = Eigen::VectorXd::Constant(dim, priors_.length.mean());
    e.hyper.noise_var =
        config_.fixed_noise_var ? *config_.fixed_noise_var : priors_.noise.mean();
    experts_.push_back(std::move(e));
  }
  // Sticks past the new truncation level were discarded; their experts held
  // no points (assignments never exceed the level where u was drawn).
  if (static_cast<int>(experts_.size()) > level) {
    for (int i = level; i < static_cast<int>(experts_.size()); ++i) {
      if (!experts_[i].cache.empty()) {
        throw std::logic_error("discarding an occupied expert");
      }
    }
    experts_.resize(level);
  }
}

void GpksbpChain::update_counts() {
  std::vector<double> v_list;
  v_list.reserve(gating_.sticks.size());
  for (const auto& s : gating_.sticks) v_list.push_back(s.v);
  gating_.alpha = rejection_sample_alpha(gating_.beta, v_list, priors_.p_alpha, rng_);
  gating_.beta = rejection_sample_beta(gating_.alpha, v_list, priors_.p_beta, rng_);
}

void GpksbpChain::update_assignments() {
  for (int n = 0; n < static_cast<int>(assignments_.size()); ++n) {
    assignments_[n] = sample_assignment(n, assignments_[n], aux_.u(n), weights_.row(n),
                                        experts_, X_, y_, rng_);
  }
}

void GpksbpChain::update_expert_hypers() {
  const int dim = static_cast<int>(X_.cols());
  const bool include_noise = !config_.fixed_noise_var.has_value();
  const double fixed = config_.fixed_noise_var.value_or(0.0);
  for (std::size_t i = 0; i < experts_.size(); ++i) {
    Expert& expert = experts_[i];
    if (expert.cache.empty()) continue;  // redrawn from the priors already
    auto [X_sub, y_sub] = gather(X_, y_, expert.cache.assigned);
    TargetFn target = [&](const Eigen::VectorXd& theta) {
      return theta_log_posterior_grad(theta, X_sub, y_sub, priors_, dim, include_noise,
                                      fixed);
    };
    const Eigen::VectorXd current = pack_hyper(expert.hyper, include_noise);
    const HmcResult res = hyper_sampler(static_cast<int>(i)).sample(target, current, rng_);
    if (res.accepted) {
      expert.hyper = unpack_hyper(res.value, dim, include_noise, fixed);
      expert.cache = build_cache(X_, expert.cache.assigned, expert.hyper);
    }
  }
}

void GpksbpChain::sweep() {
  ++iteration_;
  update_kernel_width();
  run_stick_loop();
  sync_expert_list();
  update_counts();
  resample_empty_expert_hypers(experts_, priors_, static_cast<int>(X_.cols()),
                               config_.fixed_noise_var, rng_);
  update_assignments();
  update_expert_hypers();
}

TraceRecord GpksbpChain::snapshot() const {
  TraceRecord rec;
  rec.iter = iteration_;
  rec.r = gating_.kernel_width;
  rec.alpha = gating_.alpha;
  rec.beta_count = gating_.beta;
  rec.truncation_level = gating_.truncation_level;
  for (const auto& stick : gating_.sticks) {
    rec.v.push_back(stick.v);
    rec.h.push_back(stick.h);
  }
  for (const auto& expert : experts_) rec.experts.push_back(expert.hyper);
  rec.s = assignments_;
  return rec;
}

ChainTrace GpksbpChain::run() {
  ChainTrace trace;
  trace.model = "gpksbp";
  trace.seed = 0;
  trace.total_iterations = config_.total_iterations;
  trace.burn_in = config_.burn_in;
  trace.thin = config_.thin;
  trace.fixed_noise_var = config_.fixed_noise_var;
  trace.X = X_;
  trace.y = y_;
  for (int iter = 1; iter <= config_.total_iterations; ++iter) {
    sweep();
    if (iter == config_.burn_in) freeze_adaptation();
    if (iter % config_.thin == 0) trace.records.push_back(snapshot());
  }
  return trace;
}

ChainTrace run_gpksbp(const Dataset& dataset, const Priors& priors,
                      const ChainConfig& config, std::uint64_t seed) {
  ChainConfig cfg = config;
  if (dataset.fixed_noise_var && !cfg.fixed_noise_var) {
    cfg.fixed_noise_var = dataset.fixed_noise_var;
  }
  GpksbpChain chain(dataset.X_norm, dataset.y_std, priors, cfg, seed);
  ChainTrace trace = chain.run();
  trace.dataset_name = dataset.name;
  trace.seed = seed;
  trace.transform = dataset.transform;
  return trace;
}

}  // namespace gpmix
