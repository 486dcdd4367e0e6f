#pragma once

#include <cmath>

#include "gpmix/rng.hpp"

namespace gpmix {

// Gamma prior in shape/scale form: log p(x) = (shape-1) log x - x/scale + const.
struct GammaPrior {
  double shape = 2.0;
  double scale = 1.0;

  double mean() const { return shape * scale; }

  double log_density(double x) const {
    return (shape - 1.0) * std::log(x) - x / scale;
  }

  double dlog_density(double x) const { return (shape - 1.0) / x - 1.0 / scale; }

  double draw(Rng& rng) const { return draw_gamma(rng, shape, scale); }
};

// Default prior tables for both models. gamma(2,2) for sigma^2,
// gamma(2,0.5) for length-scales, noise and kernel width, geometric(0.5)
// for the stick-breaking counts, and gamma(2,1) for the baseline's
// concentration (mean and variance matched to geometric(0.5)).
struct Priors {
  GammaPrior sigma2{2.0, 2.0};
  GammaPrior length{2.0, 0.5};
  GammaPrior noise{2.0, 0.5};
  GammaPrior kernel_width{2.0, 0.5};
  double p_alpha = 0.5;
  double p_beta = 0.5;
  GammaPrior rg_beta{2.0, 1.0};
};

}  // namespace gpmix
