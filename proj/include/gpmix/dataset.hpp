#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "gpmix/rng.hpp"

namespace gpmix {

// Per-dimension min/max for the inputs and mean/sd for the response,
// fitted on training rows only.
struct Transform {
  Eigen::VectorXd x_min;
  Eigen::VectorXd x_max;
  double y_mean = 0.0;
  double y_sd = 1.0;

  Eigen::VectorXd normalize_x(const Eigen::VectorXd& x) const;
  Eigen::VectorXd denormalize_x(const Eigen::VectorXd& x) const;
  double standardize_y(double y) const { return (y - y_mean) / y_sd; }
  double destandardize_y(double z) const { return z * y_sd + y_mean; }
};

struct Dataset {
  std::string name;
  Eigen::MatrixXd X_raw;       // training inputs, physical scale
  Eigen::VectorXd y_raw;
  Eigen::MatrixXd X_test_raw;  // may be empty
  Eigen::VectorXd y_test_raw;
  Eigen::MatrixXd X_norm;      // training inputs mapped through the transform
  Eigen::VectorXd y_std;
  Eigen::MatrixXd X_test_norm;
  Eigen::VectorXd y_test_std;
  Transform transform;
  std::optional<double> fixed_noise_var;  // set by the demo design

  int n_train() const { return static_cast<int>(X_raw.rows()); }
  int n_test() const { return static_cast<int>(X_test_raw.rows()); }
  int dim() const { return static_cast<int>(X_raw.cols()); }
};

// f(x1, x2) = x1 exp(-(x1^2 + x2^2)); extrema at (+-1/sqrt(2), 0).
double gl2008_demo(double x1, double x2);

int benchmark_dimension(int id);
std::pair<Eigen::VectorXd, Eigen::VectorXd> benchmark_domain(int id);

// Test functions 1..5: borehole, the two Dette & Pepelyshev functions,
// Franke, and the noisy 6-D Gramacy & Lee function. The last one draws its
// N(0, 0.05^2) noise term from `noise_rng` (pass nullptr for the noiseless
// value) and ignores x5, x6.
double benchmark_function(int id, const Eigen::VectorXd& x, Rng* noise_rng);

// Uniform design over the function domain: n_train training rows and n_test
// test rows, transform fitted on the training rows and applied to both.
Dataset sample_design(int id, int n_train, int n_test, std::uint64_t seed);

// Three clusters of 10 uniform points each, responses from gl2008_demo;
// inputs normalized by the nominal [-2,6]^2 box and noise fixed at 1e-6.
Dataset demo_design(std::uint64_t seed);

// Columns x1..xD, y, split. Raw (physical-scale) values.
void write_dataset_csv(const Dataset& ds, const std::string& path);

}  // namespace gpmix
