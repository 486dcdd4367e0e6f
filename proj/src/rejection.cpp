#include "gpmix/rejection.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gpmix {

namespace {

constexpr int kPeakSearchLimit = 1000000;
constexpr long kAttemptLimit = 100000;

double log_const_from(const std::vector<double>& vals, double p) {
  double s = std::log1p(-p);
  for (double v : vals) s += std::log(v);
  return s;
}

// log of the ratio pbar(a+1)/pbar(a) = i* log((a+b)/a) + log_const.
double log_ratio(int a, int b, int i_star, double log_const) {
  return i_star * std::log((static_cast<double>(a) + b) / a) + log_const;
}

int peak_search(int other, int i_star, double log_const) {
  for (int a = 1; a <= kPeakSearchLimit; ++a) {
    if (log_ratio(a, other, i_star, log_const) < 0.0) return a;
  }
  throw std::runtime_error("alpha_peak: search exceeded 1e6");
}

// Geometric on {1,2,...} without the int overflow of std::geometric for
// very small success probabilities.
long long draw_geometric1_ll(Rng& rng, double p) {
  const double u = draw_uniform(rng);
  const double x = std::floor(std::log1p(-u) / std::log1p(-p));
  if (!(x < 9e18)) return 9000000000000000000LL;
  return 1LL + static_cast<long long>(x);
}

// Exact inverse-CDF draw by scanning the single-peaked mass until the tail
// is negligible. Used when the envelope's geometric tail degenerates
// (phi -> 1, e.g. beta = 1, p = 0.5 and a stick probability at 1-eps, where
// the flat-then-geometric proposal would need ~1/(1-phi) attempts).
int sample_count_by_scan(int other, int i_star, double log_const, int peak, Rng& rng) {
  const double log_peak = log_pbar_count(peak, other, i_star, log_const);
  std::vector<double> mass;
  double total = 0.0;
  for (long long a = 1;; ++a) {
    const double w = std::exp(log_pbar_count(a, other, i_star, log_const) - log_peak);
    mass.push_back(w);
    total += w;
    if (a > peak && w < total * 1e-16) break;
    if (a > 5000000) {
      throw std::runtime_error("rejection sampler: posterior scan exceeded bounds");
    }
  }
  double u = draw_uniform(rng) * total;
  for (std::size_t i = 0; i < mass.size(); ++i) {
    u -= mass[i];
    if (u <= 0.0) return static_cast<int>(i + 1);
  }
  return static_cast<int>(mass.size());
}

int sample_count(int other, int i_star, double log_const, Rng& rng) {
  const CountEnvelope env = build_count_envelope(other, i_star, log_const);
  const double tail_odds = env.phi / (1.0 - env.phi);
  if (!(tail_odds < 1e5)) {
    return sample_count_by_scan(other, i_star, log_const, env.peak, rng);
  }
  const double p_front = env.peak / (env.peak + tail_odds);

  for (long attempt = 0; attempt < kAttemptLimit; ++attempt) {
    long long proposal;
    if (draw_uniform(rng) < p_front) {
      proposal = draw_uniform_int(rng, 1, env.peak);
    } else {
      proposal = env.peak + draw_geometric1_ll(rng, 1.0 - env.phi);
    }
    const double log_accept =
        log_pbar_count(proposal, other, i_star, log_const) - env.log_height(proposal);
    if (std::log(draw_uniform(rng)) <= log_accept &&
        proposal <= std::numeric_limits<int>::max()) {
      return static_cast<int>(proposal);
    }
  }
  throw std::runtime_error("rejection sampler: acceptance rate below 1e-4");
}

}  // namespace

double log_pbar_count(long long a, int b, int i_star, double log_const) {
  return i_star * (std::lgamma(static_cast<double>(a) + b) - std::lgamma(static_cast<double>(a))) +
         static_cast<double>(a - 1) * log_const;
}

double CountEnvelope::log_height(long long a) const {
  double h = log_pbar_peak;
  if (a > peak) h += static_cast<double>(a - peak) * std::log(phi);
  return h;
}

CountEnvelope build_count_envelope(int other, int i_star, double log_const) {
  CountEnvelope env;
  env.peak = peak_search(other, i_star, log_const);
  env.phi = std::exp(log_ratio(env.peak, other, i_star, log_const));
  env.log_pbar_peak = log_pbar_count(env.peak, other, i_star, log_const);
  return env;
}

int alpha_peak(int beta_param, int i_star, double prod_v, double p_alpha) {
  if (!(prod_v > 0.0 && prod_v < 1.0)) {
    throw std::invalid_argument("alpha_peak: prod_v must lie in (0,1)");
  }
  if (i_star < 1) throw std::invalid_argument("alpha_peak: i_star must be >= 1");
  return peak_search(beta_param, i_star, std::log1p(-p_alpha) + std::log(prod_v));
}

int rejection_sample_alpha(int beta_param, const std::vector<double>& v_list,
                           double p_alpha, Rng& rng) {
  if (v_list.empty()) throw std::invalid_argument("rejection_sample_alpha: empty v list");
  return sample_count(beta_param, static_cast<int>(v_list.size()),
                      log_const_from(v_list, p_alpha), rng);
}

int rejection_sample_beta(int alpha, const std::vector<double>& v_list, double p_beta,
                          Rng& rng) {
  if (v_list.empty()) throw std::invalid_argument("rejection_sample_beta: empty v list");
  std::vector<double> complements;
  complements.reserve(v_list.size());
  for (double v : v_list) complements.push_back(1.0 - v);
  return sample_count(alpha, static_cast<int>(v_list.size()),
                      log_const_from(complements, p_beta), rng);
}

}  // namespace gpmix
