#pragma once

#include <vector>

#include "gpmix/rng.hpp"

namespace gpmix {

// Unnormalized log posterior mass of the count parameter given the other one:
// log pbar(a | b) = i* [lgamma(a+b) - lgamma(a)] + (a-1) log_const, where
// log_const = log(1-p) + sum log v_i (or log(1-v_i) for the beta update).
// Takes long long because geometric tail proposals can be enormous.
double log_pbar_count(long long a, int b, int i_star, double log_const);

// Smallest positive integer at which the posterior ratio drops below one;
// this is the mode of pbar.
int alpha_peak(int beta_param, int i_star, double prod_v, double p_alpha);

// Exact draws from p(alpha | beta, {v_i}) and p(beta | alpha, {v_i}) via a
// flat-then-geometric envelope over the single-peaked posterior mass.
int rejection_sample_alpha(int beta_param, const std::vector<double>& v_list,
                           double p_alpha, Rng& rng);
int rejection_sample_beta(int alpha, const std::vector<double>& v_list, double p_beta,
                          Rng& rng);

// Envelope pieces shared with the tests.
struct CountEnvelope {
  int peak = 1;        // alpha* (or beta*)
  double phi = 0.0;    // geometric tail failure probability
  double log_pbar_peak = 0.0;

  double log_height(long long a) const;  // log of c q(a)
};

CountEnvelope build_count_envelope(int other, int i_star, double log_const);

}  // namespace gpmix
