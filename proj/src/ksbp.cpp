#include "gpmix/ksbp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gpmix {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Eigen::VectorXd uniform_cube_draw(int dim, Rng& rng) {
  Eigen::VectorXd h(dim);
  for (int d = 0; d < dim; ++d) h(d) = draw_uniform(rng);
  return h;
}

}  // namespace

double kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& h, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("kernel: r must be positive");
  const double q2 = (x - h).squaredNorm();
  return std::exp(-q2 / (r * r));
}

Eigen::VectorXd mixture_weights(const Eigen::VectorXd& x, const GatingState& state,
                                int up_to) {
  if (up_to > static_cast<int>(state.sticks.size())) {
    throw std::invalid_argument("mixture_weights: up_to exceeds stick count");
  }
  Eigen::VectorXd w(up_to);
  double remainder = 1.0;
  for (int i = 0; i < up_to; ++i) {
    const double breach = state.sticks[i].v * kernel(x, state.sticks[i].h, state.kernel_width);
    w(i) = breach * remainder;
    remainder *= 1.0 - breach;
  }
  return w;
}

std::pair<int, int> sample_aux_AB(int s_n, int i, double v, double kappa, Rng& rng) {
  if (s_n < i) throw std::invalid_argument("sample_aux_AB: requires s_n >= i");
  if (s_n == i) return {1, 1};
  // Three admissible cells; (1,1) would have forced assignment at stick i.
  const double p10 = v * (1.0 - kappa);
  const double p01 = (1.0 - v) * kappa;
  const double p00 = (1.0 - v) * (1.0 - kappa);
  const double u = draw_uniform(rng) * (p10 + p01 + p00);
  if (u < p10) return {1, 0};
  if (u < p10 + p01) return {0, 1};
  return {0, 0};
}

std::pair<double, double> posterior_v_params(const StickAux& aux, int alpha, int beta) {
  int successes = 0;
  for (std::uint8_t a : aux.A) successes += a;
  const int failures = static_cast<int>(aux.A.size()) - successes;
  return {static_cast<double>(alpha + successes), static_cast<double>(beta + failures)};
}

std::pair<double, Eigen::VectorXd> h_log_posterior_grad(const Eigen::VectorXd& h,
                                                        const StickAux& aux,
                                                        const Eigen::MatrixXd& X,
                                                        double r) {
  const int dim = static_cast<int>(h.size());
  double lp = 0.0;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(dim);
  const double r2 = r * r;
  for (std::size_t k = 0; k < aux.points.size(); ++k) {
    const Eigen::VectorXd x = X.row(aux.points[k]);
    const double kap = kernel(x, h, r);
    double coeff;  // multiplies dkappa/dh_d / kappa = 2 (x_d - h_d)/r^2
    if (aux.B[k]) {
      lp += std::log(kap);
      coeff = 1.0;
    } else {
      lp += std::log1p(-kap);
      coeff = -kap / (1.0 - kap);
    }
    if (!std::isfinite(lp)) return {kNegInf, Eigen::VectorXd::Zero(dim)};
    grad += coeff * 2.0 / r2 * (x - h);
  }
  return {lp, grad};
}

double sample_u(double w_n_sn, Rng& rng) {
  if (!(w_n_sn > 0.0)) {
    throw std::runtime_error("sample_u: assigned weight is not positive");
  }
  return draw_uniform(rng, 0.0, w_n_sn);
}

std::pair<double, double> r_log_posterior_grad_ksbp(double r,
                                                    const std::vector<StickAux>& aux,
                                                    const std::vector<Stick>& sticks,
                                                    const Eigen::MatrixXd& X,
                                                    const GammaPrior& prior) {
  double lp = prior.log_density(r);
  double grad = prior.dlog_density(r);
  const double r2 = r * r;
  const double r3 = r2 * r;
  for (std::size_t i = 0; i < aux.size(); ++i) {
    const Eigen::VectorXd& h = sticks[i].h;
    for (std::size_t k = 0; k < aux[i].points.size(); ++k) {
      const Eigen::VectorXd x = X.row(aux[i].points[k]);
      const double q2 = (x - h).squaredNorm();
      const double kap = std::exp(-q2 / r2);
      const double dkap = 2.0 * kap * q2 / r3;
      if (aux[i].B[k]) {
        lp += -q2 / r2;          // log kappa
        grad += 2.0 * q2 / r3;   // dkap / kap
      } else {
        lp += std::log1p(-kap);
        grad -= dkap / (1.0 - kap);
      }
    }
  }
  return {lp, grad};
}

StickLoopResult stick_loop(const Eigen::MatrixXd& X, GatingState& state,
                           SliceAuxiliaries& aux, const std::vector<int>& assignments,
                           const StickLocationUpdater& update_location, Rng& rng) {
  const int n_points = static_cast<int>(X.rows());
  const int dim = static_cast<int>(X.cols());
  const std::vector<Stick> previous = state.sticks;

  aux.u = Eigen::VectorXd::Zero(n_points);
  aux.per_stick.clear();
  state.sticks.clear();

  Eigen::VectorXd remainder = Eigen::VectorXd::Ones(n_points);
  std::vector<Eigen::VectorXd> weight_columns;

  int level = 0;
  while (true) {
    ++level;
    if (level > kTruncationCap) {
      throw std::runtime_error("stick_loop: truncation level exceeded hard cap");
    }
    const int idx = level - 1;
    const bool have_previous = idx < static_cast<int>(previous.size());
    const double v_cur = have_previous ? previous[idx].v : 0.5;
    const Eigen::VectorXd h_cur =
        have_previous ? previous[idx].h : uniform_cube_draw(dim, rng);

    StickAux stick_aux;
    for (int n = 0; n < n_points; ++n) {
      if (assignments[n] < idx) continue;  // only pairs with s_n >= i
      const double kap = kernel(X.row(n), h_cur, state.kernel_width);
      auto [a, b] = sample_aux_AB(assignments[n], idx, v_cur, kap, rng);
      stick_aux.points.push_back(n);
      stick_aux.A.push_back(static_cast<std::uint8_t>(a));
      stick_aux.B.push_back(static_cast<std::uint8_t>(b));
    }

    auto [shape_a, shape_b] = posterior_v_params(stick_aux, state.alpha, state.beta);
    Stick stick;
    stick.v = draw_beta(rng, shape_a, shape_b);
    // An empty B set means the conditional for h is the uniform prior.
    stick.h = stick_aux.points.empty() ? uniform_cube_draw(dim, rng)
                                       : update_location(idx, h_cur, stick_aux);

    state.sticks.push_back(stick);
    aux.per_stick.push_back(std::move(stick_aux));

    Eigen::VectorXd col(n_points);
    for (int n = 0; n < n_points; ++n) {
      const double breach = stick.v * kernel(X.row(n), stick.h, state.kernel_width);
      col(n) = breach * remainder(n);
      remainder(n) *= 1.0 - breach;
    }
    weight_columns.push_back(col);

    for (int n = 0; n < n_points; ++n) {
      if (assignments[n] == idx) aux.u(n) = sample_u(col(n), rng);
    }

    bool unresolved = false;
    for (int n = 0; n < n_points; ++n) {
      if (aux.u(n) <= remainder(n)) {
        unresolved = true;
        break;
      }
    }
    if (!unresolved) break;
  }

  state.truncation_level = level;

  StickLoopResult out;
  out.truncation_level = level;
  out.weights.resize(n_points, level);
  for (int i = 0; i < level; ++i) out.weights.col(i) = weight_columns[i];
  return out;
}

}  // namespace gpmix
