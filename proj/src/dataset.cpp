#include "gpmix/dataset.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace gpmix {

namespace {

void check_domain(int id, const Eigen::VectorXd& x) {
  auto [lo, hi] = benchmark_domain(id);
  if (x.size() != lo.size()) throw std::invalid_argument("benchmark_function: wrong dimension");
  for (int d = 0; d < x.size(); ++d) {
    if (x(d) < lo(d) || x(d) > hi(d)) {
      throw std::domain_error("benchmark_function: input outside the domain");
    }
  }
}

double borehole(const Eigen::VectorXd& x) {
  const double rw = x(0), rr = x(1), tu = x(2), tl = x(3);
  const double hu = x(4), hl = x(5), ll = x(6), kw = x(7);
  const double lr = std::log(rr / rw);
  const double denom = lr * (1.0 + 2.0 * ll * tu / (lr * rw * rw * kw) + tu / tl);
  return 2.0 * std::numbers::pi * tu * (hu - hl) / denom;
}

double dette_pepelyshev_exp(const Eigen::VectorXd& x) {
  return 100.0 * (std::exp(-2.0 / std::pow(x(0), 1.75)) + std::exp(-2.0 / std::pow(x(1), 1.5)) +
                  std::exp(-2.0 / std::pow(x(2), 1.25)));
}

double dette_pepelyshev_8d(const Eigen::VectorXd& x) {
  double f = 4.0 * std::pow(x(0) - 2.0 + 8.0 * x(1) - 8.0 * x(1) * x(1), 2) +
             std::pow(3.0 - 4.0 * x(1), 2) +
             16.0 * std::sqrt(x(2) + 1.0) * std::pow(2.0 * x(2) - 1.0, 2);
  for (int i = 4; i <= 8; ++i) {
    double inner = 0.0;
    for (int j = 3; j <= i; ++j) inner += x(j - 1);
    f += i * std::log(1.0 + inner);
  }
  return f;
}

double franke(const Eigen::VectorXd& x) {
  const double a = 9.0 * x(0), b = 9.0 * x(1);
  return 0.75 * std::exp(-(a - 2.0) * (a - 2.0) / 4.0 - (b - 2.0) * (b - 2.0) / 4.0) +
         0.75 * std::exp(-(a + 1.0) * (a + 1.0) / 49.0 - (b + 1.0) * (b + 1.0) / 10.0) +
         0.5 * std::exp(-(a - 7.0) * (a - 7.0) / 4.0 - (b - 3.0) * (b - 3.0) / 4.0) -
         0.2 * std::exp(-(a - 4.0) * (a - 4.0) - (b - 7.0) * (b - 7.0));
}

double gramacy_lee_6d(const Eigen::VectorXd& x, Rng* noise_rng) {
  const double t = 0.9 * (x(0) + 0.48);
  double f = std::exp(std::sin(std::pow(t, 10))) + x(1) * x(2) + x(3);
  if (noise_rng != nullptr) f += draw_normal(*noise_rng, 0.0, 0.05);
  return f;
}

Transform fit_transform(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  Transform t;
  t.x_min = X.colwise().minCoeff();
  t.x_max = X.colwise().maxCoeff();
  t.y_mean = y.mean();
  const double ss = (y.array() - t.y_mean).square().sum();
  t.y_sd = std::sqrt(ss / y.size());
  if (!(t.y_sd > 0.0)) t.y_sd = 1.0;
  return t;
}

void apply_transform(Dataset& ds) {
  const auto& t = ds.transform;
  auto norm = [&](const Eigen::MatrixXd& X) {
    Eigen::MatrixXd out(X.rows(), X.cols());
    for (int i = 0; i < X.rows(); ++i) out.row(i) = t.normalize_x(X.row(i));
    return out;
  };
  ds.X_norm = norm(ds.X_raw);
  ds.y_std = ((ds.y_raw.array() - t.y_mean) / t.y_sd).matrix();
  if (ds.X_test_raw.rows() > 0) {
    ds.X_test_norm = norm(ds.X_test_raw);
    ds.y_test_std = ((ds.y_test_raw.array() - t.y_mean) / t.y_sd).matrix();
  }
}

}  // namespace

Eigen::VectorXd Transform::normalize_x(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out(x.size());
  for (int d = 0; d < x.size(); ++d) {
    const double range = x_max(d) - x_min(d);
    out(d) = range > 0.0 ? (x(d) - x_min(d)) / range : 0.0;
  }
  return out;
}

Eigen::VectorXd Transform::denormalize_x(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out(x.size());
  for (int d = 0; d < x.size(); ++d) {
    out(d) = x_min(d) + x(d) * (x_max(d) - x_min(d));
  }
  return out;
}

double gl2008_demo(double x1, double x2) {
  return x1 * std::exp(-(x1 * x1 + x2 * x2));
}

int benchmark_dimension(int id) {
  switch (id) {
    case 1: return 8;
    case 2: return 3;
    case 3: return 8;
    case 4: return 2;
    case 5: return 6;
    default: throw std::invalid_argument("benchmark id must be in 1..5");
  }
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> benchmark_domain(int id) {
  const int dim = benchmark_dimension(id);
  Eigen::VectorXd lo = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd hi = Eigen::VectorXd::Ones(dim);
  if (id == 1) {
    lo << 0.05, 100.0, 63070.0, 63.1, 990.0, 700.0, 1120.0, 9855.0;
    hi << 0.15, 50000.0, 115600.0, 116.0, 1110.0, 820.0, 1680.0, 12045.0;
  }
  return {lo, hi};
}

double benchmark_function(int id, const Eigen::VectorXd& x, Rng* noise_rng) {
  check_domain(id, x);
  switch (id) {
    case 1: return borehole(x);
    case 2: return dette_pepelyshev_exp(x);
    case 3: return dette_pepelyshev_8d(x);
    case 4: return franke(x);
    case 5: return gramacy_lee_6d(x, noise_rng);
    default: throw std::invalid_argument("benchmark id must be in 1..5");
  }
}

Dataset sample_design(int id, int n_train, int n_test, std::uint64_t seed) {
  const int dim = benchmark_dimension(id);
  auto [lo, hi] = benchmark_domain(id);
  Rng design_rng = make_rng(seed, "design");
  Rng noise_rng = make_rng(seed, "noise");

  Dataset ds;
  ds.name = "dataset" + std::to_string(id);
  auto draw_block = [&](int rows, Eigen::MatrixXd& X, Eigen::VectorXd& y) {
    X.resize(rows, dim);
    y.resize(rows);
    for (int i = 0; i < rows; ++i) {
      for (int d = 0; d < dim; ++d) X(i, d) = draw_uniform(design_rng, lo(d), hi(d));
      y(i) = benchmark_function(id, X.row(i), id == 5 ? &noise_rng : nullptr);
    }
  };
  draw_block(n_train, ds.X_raw, ds.y_raw);
  draw_block(n_test, ds.X_test_raw, ds.y_test_raw);

  ds.transform = fit_transform(ds.X_raw, ds.y_raw);
  apply_transform(ds);
  return ds;
}

Dataset demo_design(std::uint64_t seed) {
  Rng rng = make_rng(seed, "design");
  Dataset ds;
  ds.name = "gl2008-demo";
  ds.X_raw.resize(30, 2);
  ds.y_raw.resize(30);

  // 10 points per rectangle: the two halves of the steep region and the
  // far flat cluster.
  const double boxes[3][4] = {{-1.0, 0.0, -1.0, 1.0}, {0.0, 1.0, -1.0, 1.0}, {4.0, 5.0, 4.0, 5.0}};
  int row = 0;
  for (const auto& box : boxes) {
    for (int i = 0; i < 10; ++i, ++row) {
      ds.X_raw(row, 0) = draw_uniform(rng, box[0], box[1]);
      ds.X_raw(row, 1) = draw_uniform(rng, box[2], box[3]);
      ds.y_raw(row) = gl2008_demo(ds.X_raw(row, 0), ds.X_raw(row, 1));
    }
  }

  // Inputs are scaled by the nominal [-2,6]^2 box, not the empirical range.
  ds.transform.x_min = Eigen::Vector2d(-2.0, -2.0);
  ds.transform.x_max = Eigen::Vector2d(6.0, 6.0);
  ds.transform.y_mean = ds.y_raw.mean();
  const double ss = (ds.y_raw.array() - ds.transform.y_mean).square().sum();
  ds.transform.y_sd = std::sqrt(ss / ds.y_raw.size());
  apply_transform(ds);
  ds.fixed_noise_var = 1e-6;
  return ds;
}

void write_dataset_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.precision(17);
  const int dim = ds.dim();
  for (int d = 1; d <= dim; ++d) out << "x" << d << ",";
  out << "y,split\n";
  auto dump = [&](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const char* split) {
    for (int i = 0; i < X.rows(); ++i) {
      for (int d = 0; d < dim; ++d) out << X(i, d) << ",";
      out << y(i) << "," << split << "\n";
    }
  };
  dump(ds.X_raw, ds.y_raw, "train");
  if (ds.n_test() > 0) dump(ds.X_test_raw, ds.y_test_raw, "test");
}

}  // namespace gpmix
