#include "gpmix/rg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gpmix {

namespace {

Eigen::MatrixXd pairwise_sq_dist(const Eigen::MatrixXd& X) {
  const int n = static_cast<int>(X.rows());
  Eigen::MatrixXd D(n, n);
  for (int i = 0; i < n; ++i) {
    D(i, i) = 0.0;
    for (int j = 0; j < i; ++j) {
      D(i, j) = D(j, i) = (X.row(i) - X.row(j)).squaredNorm();
    }
  }
  return D;
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

std::pair<double, double> r_pseudo_core(double r, const std::vector<int>& assignments,
                                        const Eigen::MatrixXd& sq_dist,
                                        const GammaPrior& prior) {
  const int n = static_cast<int>(assignments.size());
  double lp = prior.log_density(r);
  double grad = prior.dlog_density(r);
  const double r2 = r * r;
  const double r3 = r2 * r;
  for (int a = 0; a < n; ++a) {
    double num = 0.0, dnum = 0.0, den = 0.0, dden = 0.0;
    for (int b = 0; b < n; ++b) {
      if (b == a) continue;
      const double q2 = sq_dist(a, b);
      const double kap = std::exp(-q2 / r2);
      const double dkap = 2.0 * kap * q2 / r3;
      den += kap;
      dden += dkap;
      if (assignments[b] == assignments[a]) {
        num += kap;
        dnum += dkap;
      }
    }
    if (num <= 0.0) continue;  // singleton: the beta branch, free of r
    lp += std::log(num) - std::log(den);
    grad += dnum / num - dden / den;
  }
  return {lp, grad};
}

}  // namespace

double occupation_number(int n, int i, const std::vector<int>& assignments,
                         const Eigen::MatrixXd& X, double r) {
  const int total = static_cast<int>(assignments.size());
  if (total < 2) throw std::invalid_argument("occupation_number: needs N >= 2");
  double num = 0.0, den = 0.0;
  const double r2 = r * r;
  for (int b = 0; b < total; ++b) {
    if (b == n) continue;
    const double kap = std::exp(-(X.row(n) - X.row(b)).squaredNorm() / r2);
    den += kap;
    if (assignments[b] == i) num += kap;
  }
  if (!(den > 0.0)) throw std::runtime_error("occupation_number: zero kernel mass");
  return (total - 1) * num / den;
}

std::pair<double, double> rg_r_log_pseudo_posterior_grad(double r,
                                                         const std::vector<int>& assignments,
                                                         const Eigen::MatrixXd& X,
                                                         const GammaPrior& prior) {
  return r_pseudo_core(r, assignments, pairwise_sq_dist(X), prior);
}

double rg_sample_beta(double beta, int num_occupied, int N, double gamma_a, double gamma_b,
                      Rng& rng) {
  if (num_occupied < 1) throw std::invalid_argument("rg_sample_beta: needs >= 1 expert");
  const double phi = draw_beta(rng, beta + 1.0, static_cast<double>(N));
  const double rate = gamma_b - std::log(phi);  // rates, not scales, below
  const double odds = (gamma_a + num_occupied - 1.0) / (N * rate);
  const double q = odds / (1.0 + odds);
  const double shape = draw_uniform(rng) < q ? gamma_a + num_occupied
                                             : gamma_a + num_occupied - 1.0;
  return draw_gamma(rng, shape, 1.0 / rate);
}

RgChain::RgChain(Eigen::MatrixXd X, Eigen::VectorXd y, const Priors& priors,
                 const ChainConfig& config, std::uint64_t seed)
    : X_(std::move(X)),
      y_(std::move(y)),
      sq_dist_(pairwise_sq_dist(X_)),
      priors_(priors),
      config_(config),
      rng_(make_rng(seed, "chain")),
      r_sampler_(config.hmc) {
  config_.validate();
  const int n = static_cast<int>(X_.rows());
  const int dim = static_cast<int>(X_.cols());

  r_ = priors_.kernel_width.mean();
  beta_ = priors_.rg_beta.mean();
  assignments_.assign(n, 0);

  ExpertHyper hyper;
  hyper.output_scale = priors_.sigma2.mean();
  hyper.length_scales = Eigen::VectorXd::Constant(dim, priors_.length.mean());
  hyper.noise_var = config_.fixed_noise_var ? *config_.fixed_noise_var : priors_.noise.mean();
  std::vector<int> all(n);
  for (int i = 0; i < n; ++i) all[i] = i;
  experts_.push_back({hyper, build_cache(X_, all, hyper)});
}

HmcSampler& RgChain::hyper_sampler(int idx) {
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

void RgChain::freeze_adaptation() {
  adaptation_frozen_ = true;
  r_sampler_.freeze();
  for (auto& s : theta_samplers_) s.freeze();
}

void RgChain::set_response(const Eigen::VectorXd& y) {
  if (y.size() != y_.size()) throw std::invalid_argument("set_response: size mismatch");
  y_ = y;
}

void RgChain::update_kernel_width() {
  TargetFn target = [this](const Eigen::VectorXd& theta) {
    auto [lp, d] = r_pseudo_core(theta(0), assignments_, sq_dist_, priors_.kernel_width);
    Eigen::VectorXd grad(1);
    grad(0) = d;
    return std::make_pair(lp, grad);
  };
  Eigen::VectorXd cur(1);
  cur(0) = r_;
  r_ = r_sampler_.sample(target, cur, rng_).value(0);
}

void RgChain::set_state(const std::vector<int>& assignments, double r, double beta) {
  if (assignments.size() != static_cast<std::size_t>(X_.rows())) {
    throw std::invalid_argument("set_state: assignment length mismatch");
  }
  const int n_experts = *std::max_element(assignments.begin(), assignments.end()) + 1;
  std::vector<std::vector<int>> groups(n_experts);
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] < 0) throw std::invalid_argument("set_state: negative expert id");
    groups[assignments[i]].push_back(static_cast<int>(i));
  }
  for (const auto& g : groups) {
    if (g.empty()) throw std::invalid_argument("set_state: unoccupied expert id");
  }

  const int dim = static_cast<int>(X_.cols());
  if (static_cast<int>(experts_.size()) != n_experts) {
    experts_.assign(n_experts, Expert{});
    for (auto& e : experts_) {
      e.hyper.output_scale = priors_.sigma2.mean();
      e.hyper.length_scales = Eigen::VectorXd::Constant(dim, priors_.length.mean());
      e.hyper.noise_var =
          config_.fixed_noise_var ? *config_.fixed_noise_var : priors_.noise.mean();
    }
  }
  for (int i = 0; i < n_experts; ++i) {
    experts_[i].cache = build_cache(X_, groups[i], experts_[i].hyper);
  }
  assignments_ = assignments;
  r_ = r;
  beta_ = beta;
}

void RgChain::remove_point(int n) {
  const int expert = assignments_[n];
  rank1_downdate(experts_[expert].cache, n, X_, experts_[expert].hyper);
  if (experts_[expert].cache.empty()) {
    experts_.erase(experts_.begin() + expert);
    for (int& s : assignments_) {
      if (s > expert) --s;
    }
  }
  assignments_[n] = -1;
}

void RgChain::assignment_move(int n) {
  remove_point(n);
  const int dim = static_cast<int>(X_.cols());
  const int n_experts = static_cast<int>(experts_.size());
  const Eigen::VectorXd x_n = X_.row(n);

  // One auxiliary expert with hypers freshly drawn from the priors.
  const ExpertHyper aux_hyper =
      draw_hyper_from_priors(priors_, dim, config_.fixed_noise_var, rng_);

  std::vector<double> log_w(n_experts + 1);
  for (int i = 0; i < n_experts; ++i) {
    const double occ = occupation_number(n, i, assignments_, X_, r_);
    auto [mean, var] = predictive_from_cache(x_n, X_, y_, experts_[i].hyper,
                                             experts_[i].cache);
    log_w[i] = std::log(occ) + log_normal_pdf(y_(n), mean, var);
  }
  log_w[n_experts] =
      std::log(beta_) +
      log_normal_pdf(y_(n), 0.0, aux_hyper.output_scale + aux_hyper.noise_var);

  const int chosen = categorical_from_logs(log_w, rng_);
  if (chosen == n_experts) {
    Expert fresh;
    fresh.hyper = aux_hyper;
    experts_.push_back(std::move(fresh));
  }
  rank1_update(experts_[chosen].cache, n, X_, experts_[chosen].hyper);
  assignments_[n] = chosen;
}

void RgChain::update_assignments() {
  for (int n = 0; n < static_cast<int>(assignments_.size()); ++n) {
    assignment_move(n);
  }
}

void RgChain::update_concentration() {
  beta_ = rg_sample_beta(beta_, static_cast<int>(experts_.size()),
                         static_cast<int>(assignments_.size()), priors_.rg_beta.shape,
                         1.0 / priors_.rg_beta.scale, rng_);
}

void RgChain::update_expert_hypers() {
  const int dim = static_cast<int>(X_.cols());
  const bool include_noise = !config_.fixed_noise_var.has_value();
  const double fixed = config_.fixed_noise_var.value_or(0.0);
  for (std::size_t i = 0; i < experts_.size(); ++i) {
    Expert& expert = experts_[i];
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

void RgChain::sweep() {
  ++iteration_;
  update_kernel_width();
  update_assignments();
  update_concentration();
  update_expert_hypers();
}

TraceRecord RgChain::snapshot() const {
  // Experts are presented in descending occupancy, matching how the
  // baseline's results are tabulated.
  std::vector<int> order(experts_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return experts_[a].cache.size() > experts_[b].cache.size();
  });
  std::vector<int> rank(order.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) rank[order[pos]] = static_cast<int>(pos);

  TraceRecord rec;
  rec.iter = iteration_;
  rec.r = r_;
  rec.rg_beta = beta_;
  rec.truncation_level = static_cast<int>(experts_.size());
  for (int idx : order) rec.experts.push_back(experts_[idx].hyper);
  rec.s.resize(assignments_.size());
  for (std::size_t n = 0; n < assignments_.size(); ++n) rec.s[n] = rank[assignments_[n]];
  return rec;
}

ChainTrace RgChain::run() {
  ChainTrace trace;
  trace.model = "rg";
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

ChainTrace run_rg(const Dataset& dataset, const Priors& priors, const ChainConfig& config,
                  std::uint64_t seed) {
  ChainConfig cfg = config;
  if (dataset.fixed_noise_var && !cfg.fixed_noise_var) {
    cfg.fixed_noise_var = dataset.fixed_noise_var;
  }
  RgChain chain(dataset.X_norm, dataset.y_std, priors, cfg, seed);
  ChainTrace trace = chain.run();
  trace.dataset_name = dataset.name;
  trace.seed = seed;
  trace.transform = dataset.transform;
  return trace;
}

}  // namespace gpmix
