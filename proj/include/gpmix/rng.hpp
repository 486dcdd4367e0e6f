#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace gpmix {

using Rng = std::mt19937_64;

// Hashes (master_seed, label) into an independent stream seed so that the
// design, the chain, the dataset noise, and prediction each own a
// reproducible substream of one master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label) {
  std::uint64_t h = master ^ 0x9e3779b97f4a7c15ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
    // splitmix64 finalization round per character keeps labels well separated
    std::uint64_t z = h + 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    h = z ^ (z >> 31);
  }
  return h;
}

inline Rng make_rng(std::uint64_t master, std::string_view label) {
  return Rng(derive_seed(master, label));
}

inline double draw_uniform(Rng& rng, double lo = 0.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double draw_normal(Rng& rng, double mean = 0.0, double sd = 1.0) {
  return std::normal_distribution<double>(mean, sd)(rng);
}

// Shape/scale parameterization, mean = shape*scale.
inline double draw_gamma(Rng& rng, double shape, double scale) {
  return std::gamma_distribution<double>(shape, scale)(rng);
}

// Clamped to the open interval so downstream logs stay finite.
inline double draw_beta(Rng& rng, double a, double b) {
  double x = draw_gamma(rng, a, 1.0);
  double y = draw_gamma(rng, b, 1.0);
  double v = (x + y > 0.0) ? x / (x + y) : 0.5;
  const double eps = 1e-12;
  if (v < eps) v = eps;
  if (v > 1.0 - eps) v = 1.0 - eps;
  return v;
}

// Support {1, 2, ...} with pmf (1-p)^{k-1} p, mean 1/p.
inline int draw_geometric1(Rng& rng, double p) {
  return 1 + static_cast<int>(std::geometric_distribution<int>(p)(rng));
}

inline int draw_uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

}  // namespace gpmix
