#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "gpmix/rejection.hpp"
#include "gpmix/rng.hpp"

using namespace gpmix;

namespace {

// Brute-force normalized pmf of the count posterior, truncated where the
// tail mass falls below 1e-12 of the total.
std::vector<double> brute_force_pmf(int other, int i_star, double log_const) {
  std::vector<double> logs;
  double mx = -1e300;
  for (int a = 1; a <= 200000; ++a) {
    const double lp = log_pbar_count(a, other, i_star, log_const);
    logs.push_back(lp);
    mx = std::max(mx, lp);
    if (a > 10 && lp < mx - 40.0) break;  // exp(-40) ~ 4e-18 of the peak
  }
  double total = 0.0;
  std::vector<double> pmf(logs.size());
  for (std::size_t i = 0; i < logs.size(); ++i) {
    pmf[i] = std::exp(logs[i] - mx);
    total += pmf[i];
  }
  for (double& p : pmf) p /= total;
  return pmf;
}

double log_const_of(const std::vector<double>& v, double p) {
  double s = std::log1p(-p);
  for (double x : v) s += std::log(x);
  return s;
}

double tv_distance(const std::vector<double>& pmf, const std::map<int, long>& counts,
                   long n_draws) {
  double tv = 0.0;
  std::size_t max_seen = 0;
  for (const auto& [value, count] : counts) max_seen = std::max<std::size_t>(max_seen, value);
  for (std::size_t a = 1; a <= std::max(pmf.size(), max_seen); ++a) {
    const double p = a <= pmf.size() ? pmf[a - 1] : 0.0;
    const auto it = counts.find(static_cast<int>(a));
    const double q = it == counts.end() ? 0.0 : static_cast<double>(it->second) / n_draws;
    tv += std::abs(p - q);
  }
  return 0.5 * tv;
}

}  // namespace

TEST_CASE("alpha_peak: direct inequality cases") {
  // (1-p_alpha) prod_v = 0.3 with beta = 1, i* = 1: ((1+1)/1) * 0.3 = 0.6 < 1.
  CHECK(alpha_peak(1, 1, 0.6, 0.5) == 1);

  // beta = 5, i* = 3, constant (1-p_alpha) prod_v = 0.9: linear-scan oracle.
  const double log_const = std::log(0.9);
  int expected = -1;
  for (int a = 1; a < 100000; ++a) {
    if (3 * std::log((a + 5.0) / a) + log_const < 0.0) {
      expected = a;
      break;
    }
  }
  const double p_alpha = 0.05;
  CHECK(alpha_peak(5, 3, 0.9 / (1.0 - p_alpha), p_alpha) == expected);
}

TEST_CASE("alpha_peak equals the brute-force argmax") {
  Rng rng(77);
  for (int trial = 0; trial < 25; ++trial) {
    const int i_star = 1 + static_cast<int>(rng() % 8);
    const int beta = 1 + static_cast<int>(rng() % 5);
    std::vector<double> v;
    for (int i = 0; i < i_star; ++i) v.push_back(draw_uniform(rng, 0.05, 0.95));
    const double p_alpha = draw_uniform(rng, 0.2, 0.8);
    const double lc = log_const_of(v, p_alpha);

    const auto pmf = brute_force_pmf(beta, i_star, lc);
    const int argmax = static_cast<int>(std::max_element(pmf.begin(), pmf.end()) -
                                        pmf.begin()) +
                       1;
    double prod_v = 1.0;
    for (double x : v) prod_v *= x;
    CHECK(alpha_peak(beta, i_star, prod_v, p_alpha) == argmax);
  }
}

TEST_CASE("envelope dominates the target mass") {
  Rng rng(78);
  for (int trial = 0; trial < 10; ++trial) {
    const int i_star = 1 + static_cast<int>(rng() % 8);
    const int beta = 1 + static_cast<int>(rng() % 5);
    std::vector<double> v;
    for (int i = 0; i < i_star; ++i) v.push_back(draw_uniform(rng, 0.05, 0.95));
    const double lc = log_const_of(v, draw_uniform(rng, 0.2, 0.8));
    const CountEnvelope env = build_count_envelope(beta, i_star, lc);
    CHECK(env.phi > 0.0);
    CHECK(env.phi < 1.0);
    for (int a = 1; a <= 10000; ++a) {
      CHECK(log_pbar_count(a, beta, i_star, lc) <= env.log_height(a) + 1e-9);
    }
  }
}

TEST_CASE("alpha sampler matches the brute-force pmf") {
  const std::vector<double> v = {0.5};
  const int beta = 1;
  const double p_alpha = 0.5;
  const auto pmf = brute_force_pmf(beta, 1, log_const_of(v, p_alpha));

  Rng rng(4242);
  std::map<int, long> counts;
  const long n_draws = 1000000;
  for (long i = 0; i < n_draws; ++i) {
    const int a = rejection_sample_alpha(beta, v, p_alpha, rng);
    CHECK(a >= 1);
    counts[a] += 1;
  }
  CHECK(tv_distance(pmf, counts, n_draws) < 0.02);
}

TEST_CASE("beta sampler matches the brute-force pmf") {
  const std::vector<double> v = {0.3, 0.7, 0.45};
  const int alpha = 2;
  const double p_beta = 0.5;
  std::vector<double> complements;
  for (double x : v) complements.push_back(1.0 - x);
  const auto pmf = brute_force_pmf(alpha, 3, log_const_of(complements, p_beta));

  Rng rng(999);
  std::map<int, long> counts;
  const long n_draws = 1000000;
  for (long i = 0; i < n_draws; ++i) {
    const int b = rejection_sample_beta(alpha, v, p_beta, rng);
    CHECK(b >= 1);
    counts[b] += 1;
  }
  CHECK(tv_distance(pmf, counts, n_draws) < 0.02);
}

TEST_CASE("alpha and beta samplers are mirror images") {
  // Swapping v with 1-v (and matching success parameters) must give the
  // same brute-force pmf for both samplers.
  const std::vector<double> v = {0.2, 0.65};
  std::vector<double> complements;
  for (double x : v) complements.push_back(1.0 - x);
  const auto pmf_alpha = brute_force_pmf(3, 2, log_const_of(v, 0.4));
  const auto pmf_beta = brute_force_pmf(3, 2, log_const_of(v, 0.4));
  REQUIRE(pmf_alpha.size() == pmf_beta.size());
  for (std::size_t i = 0; i < pmf_alpha.size(); ++i) {
    CHECK(pmf_alpha[i] == doctest::Approx(pmf_beta[i]).epsilon(1e-12));
  }

  // And the samplers themselves agree in distribution on a shared state.
  Rng rng_a(31337), rng_b(31337);
  std::map<int, long> counts_a, counts_b;
  const long n_draws = 200000;
  for (long i = 0; i < n_draws; ++i) {
    counts_a[rejection_sample_alpha(3, v, 0.4, rng_a)] += 1;
    counts_b[rejection_sample_beta(3, complements, 0.4, rng_b)] += 1;
  }
  const auto pmf = brute_force_pmf(3, 2, log_const_of(v, 0.4));
  CHECK(tv_distance(pmf, counts_a, n_draws) < 0.02);
  CHECK(tv_distance(pmf, counts_b, n_draws) < 0.02);
}

TEST_CASE("degenerate envelope falls back to an exact scan") {
  // v -> 1 with beta = 1 and p = 0.5 drives the envelope ratio to 1 from
  // below; the geometric tail becomes unusable and the sampler switches to
  // the inverse-CDF scan, which must match the same brute-force pmf.
  const std::vector<double> v = {1.0 - 1e-12};
  const auto env = build_count_envelope(1, 1, log_const_of(v, 0.5));
  CHECK(env.phi / (1.0 - env.phi) > 1e5);

  const auto pmf = brute_force_pmf(1, 1, log_const_of(v, 0.5));
  Rng rng(515);
  std::map<int, long> counts;
  const long n_draws = 400000;
  for (long i = 0; i < n_draws; ++i) {
    const int a = rejection_sample_alpha(1, v, 0.5, rng);
    CHECK(a >= 1);
    counts[a] += 1;
  }
  CHECK(tv_distance(pmf, counts, n_draws) < 0.02);
}

TEST_CASE("empty v list is rejected") {
  Rng rng(1);
  CHECK_THROWS_AS(rejection_sample_alpha(1, {}, 0.5, rng), std::invalid_argument);
  CHECK_THROWS_AS(rejection_sample_beta(1, {}, 0.5, rng), std::invalid_argument);
}
