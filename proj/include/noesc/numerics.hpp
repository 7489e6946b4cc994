#pragma once

// Fixed-step RK4 integration, dense trajectories and a single-shooting
// solver for two-point boundary value problems with free parameters.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "noesc/errors.hpp"

namespace noesc {

using Vector = Eigen::VectorXd;

inline bool all_finite(const Vector& v) { return v.array().isFinite().all(); }

struct IntegratorConfig {
  double step = 1e-3;
  std::size_t stores_every = 1;

  void validate() const {
    if (!(step > 0.0) || !std::isfinite(step)) {
      throw InvalidArgument("integrator step must be positive and finite");
    }
    if (stores_every == 0) {
      throw InvalidArgument("integrator stores_every must be positive");
    }
  }
};

/// Sampled solution of an ODE with cubic Hermite dense output.
///
/// Each sample carries the state and the right-hand side evaluated there, so
/// off-grid evaluation is third-order accurate in the sample spacing even when
/// samples are decimated.
class Trajectory {
 public:
  Trajectory() = default;

  Trajectory(std::vector<double> times, std::vector<Vector> values,
             std::vector<Vector> derivatives)
      : times_(std::move(times)),
        values_(std::move(values)),
        derivatives_(std::move(derivatives)) {
    if (times_.empty() || times_.size() != values_.size() ||
        times_.size() != derivatives_.size()) {
      throw InvalidArgument("trajectory needs matching, non-empty sample lists");
    }
    const auto dim = values_.front().size();
    for (std::size_t i = 0; i < times_.size(); ++i) {
      if (values_[i].size() != dim || derivatives_[i].size() != dim) {
        throw DimensionMismatch("trajectory samples must share one dimension");
      }
      if (i > 0 && !(times_[i] > times_[i - 1])) {
        throw InvalidArgument("trajectory timestamps must be strictly increasing");
      }
    }
  }

  [[nodiscard]] std::size_t size() const { return times_.size(); }
  [[nodiscard]] Eigen::Index dim() const { return values_.front().size(); }
  [[nodiscard]] double t_begin() const { return times_.front(); }
  [[nodiscard]] double t_end() const { return times_.back(); }
  [[nodiscard]] const Vector& front() const { return values_.front(); }
  [[nodiscard]] const Vector& back() const { return values_.back(); }
  [[nodiscard]] const std::vector<double>& times() const { return times_; }
  [[nodiscard]] const std::vector<Vector>& values() const { return values_; }
  [[nodiscard]] const std::vector<Vector>& derivatives() const { return derivatives_; }

  /// State at time t. Exact at sample times.
  [[nodiscard]] Vector operator()(double t) const {
    const auto [i, s, h] = locate(t);
    if (s == 0.0) return values_[i];
    if (s == 1.0) return values_[i + 1];
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    const double h10 = s3 - 2.0 * s2 + s;
    const double h01 = -2.0 * s3 + 3.0 * s2;
    const double h11 = s3 - s2;
    return h00 * values_[i] + (h10 * h) * derivatives_[i] + h01 * values_[i + 1] +
           (h11 * h) * derivatives_[i + 1];
  }

  /// Time derivative of the Hermite interpolant.
  [[nodiscard]] Vector derivative(double t) const {
    const auto [i, s, h] = locate(t);
    if (s == 0.0) return derivatives_[i];
    if (s == 1.0) return derivatives_[i + 1];
    const double s2 = s * s;
    const double d00 = (6.0 * s2 - 6.0 * s) / h;
    const double d10 = 3.0 * s2 - 4.0 * s + 1.0;
    const double d01 = (-6.0 * s2 + 6.0 * s) / h;
    const double d11 = 3.0 * s2 - 2.0 * s;
    return d00 * values_[i] + d10 * derivatives_[i] + d01 * values_[i + 1] +
           d11 * derivatives_[i + 1];
  }

 private:
  struct Location {
    std::size_t index;
    double s;
    double h;
  };

  [[nodiscard]] Location locate(double t) const {
    const double span = times_.back() - times_.front();
    const double slack = 1e-12 * std::max(1.0, std::abs(span));
    if (!(t >= times_.front() - slack && t <= times_.back() + slack)) {
      throw OutOfDomain("trajectory evaluated outside [" + std::to_string(times_.front()) +
                        ", " + std::to_string(times_.back()) + "] at t = " +
                        std::to_string(t));
    }
    if (times_.size() == 1) return {0, 0.0, 0.0};
    if (t <= times_.front()) return {0, 0.0, times_[1] - times_[0]};
    if (t >= times_.back()) {
      const auto n = times_.size();
      return {n - 2, 1.0, times_[n - 1] - times_[n - 2]};
    }
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const auto i = static_cast<std::size_t>(it - times_.begin()) - 1;
    const double h = times_[i + 1] - times_[i];
    return {i, (t - times_[i]) / h, h};
  }

  std::vector<double> times_;
  std::vector<Vector> values_;
  std::vector<Vector> derivatives_;
};

/// Classical fixed-step Runge-Kutta 4 over [t_a, t_b].
///
/// Grid points are t_a + i*step; a final partial step lands exactly on t_b.
/// A remainder below 1e-9 of a step is absorbed into the last full step.
template <typename Rhs>
Trajectory integrate_ivp(Rhs&& rhs, double t_a, double t_b, const Vector& v0,
                         const IntegratorConfig& cfg) {
  cfg.validate();
  if (!(t_b > t_a)) throw InvalidArgument("integrate_ivp requires t_b > t_a");
  if (!all_finite(v0)) throw NonFiniteState("initial state is not finite");

  const double span = t_b - t_a;
  auto n_steps = static_cast<std::size_t>(std::floor(span / cfg.step));
  if (span - static_cast<double>(n_steps) * cfg.step > 1e-9 * cfg.step) ++n_steps;
  n_steps = std::max<std::size_t>(n_steps, 1);

  std::vector<double> times;
  std::vector<Vector> values;
  std::vector<Vector> derivs;
  const std::size_t n_store = n_steps / cfg.stores_every + 2;
  times.reserve(n_store);
  values.reserve(n_store);
  derivs.reserve(n_store);

  Vector v = v0;
  double t = t_a;
  Vector k1 = rhs(t, v);
  for (std::size_t i = 0; i < n_steps; ++i) {
    if (i % cfg.stores_every == 0) {
      times.push_back(t);
      values.push_back(v);
      derivs.push_back(k1);
    }
    const double t_next =
        (i + 1 == n_steps) ? t_b : t_a + static_cast<double>(i + 1) * cfg.step;
    const double h = t_next - t;
    const Vector k2 = rhs(t + 0.5 * h, v + (0.5 * h) * k1);
    const Vector k3 = rhs(t + 0.5 * h, v + (0.5 * h) * k2);
    const Vector k4 = rhs(t + h, v + h * k3);
    v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t = t_next;
    if (!all_finite(v)) {
      throw NonFiniteState("integration blew up at t = " + std::to_string(t));
    }
    k1 = rhs(t, v);
  }
  times.push_back(t);
  values.push_back(v);
  derivs.push_back(k1);
  return {std::move(times), std::move(values), std::move(derivs)};
}

/// Two-point BVP eta' = f(t, eta, p), eta(t_start) = eta_start,
/// eta(t_end) = eta_end, with as many free parameters p as states.
struct ShootingProblem {
  std::function<Vector(double, const Vector&, const Vector&)> dynamics;
  double t_start = 0.0;
  double t_end = 1.0;
  Vector eta_start;
  Vector eta_end;

  void validate(const Vector& p) const {
    if (!dynamics) throw InvalidArgument("shooting problem has no dynamics");
    if (!(t_end > t_start)) throw InvalidArgument("shooting problem needs t_end > t_start");
    if (eta_start.size() != eta_end.size() || eta_start.size() == 0) {
      throw DimensionMismatch("boundary values must share a positive dimension");
    }
    if (p.size() != eta_start.size()) {
      throw DimensionMismatch("free-parameter count must equal the state dimension");
    }
  }
};

struct ShootingResult {
  Vector p;
  Trajectory eta;
  double residual = 0.0;  // infinity norm at t_end
  std::size_t iterations = 0;
};

namespace detail {

inline Trajectory shoot(const ShootingProblem& prob, const Vector& p,
                        const IntegratorConfig& cfg) {
  return integrate_ivp(
      [&](double t, const Vector& eta) { return prob.dynamics(t, eta, p); }, prob.t_start,
      prob.t_end, prob.eta_start, cfg);
}

}  // namespace detail

/// Damped Newton on the terminal residual R(p) = eta(t_end; p) - eta_end.
///
/// The Jacobian is built by forward differences with perturbation
/// 1e-6 * (1 + |p_i|). Each Newton step is halved up to 30 times until the
/// residual's infinity norm decreases; trial steps that blow up count as
/// non-decreasing.
inline ShootingResult solve_shooting(const ShootingProblem& prob, const Vector& p_init,
                                     double tol, std::size_t max_iter,
                                     const IntegratorConfig& cfg) {
  prob.validate(p_init);
  if (!all_finite(p_init)) throw InvalidArgument("initial parameters are not finite");
  if (!(tol > 0.0)) throw InvalidArgument("shooting tolerance must be positive");

  const auto m = p_init.size();
  Vector p = p_init;
  Trajectory traj = detail::shoot(prob, p, cfg);
  Vector residual = traj.back() - prob.eta_end;
  double norm = residual.lpNorm<Eigen::Infinity>();

  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    if (norm < tol) return {p, std::move(traj), norm, iter};

    Eigen::MatrixXd jac(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      Vector p_pert = p;
      const double h = 1e-6 * (1.0 + std::abs(p(i)));
      p_pert(i) += h;
      jac.col(i) = (detail::shoot(prob, p_pert, cfg).back() - prob.eta_end - residual) / h;
    }
    const Vector dp = jac.colPivHouseholderQr().solve(-residual);
    if (!all_finite(dp)) {
      throw NoConvergence("shooting Jacobian is singular", norm, iter);
    }

    bool accepted = false;
    double lambda = 1.0;
    for (int halving = 0; halving <= 30; ++halving, lambda *= 0.5) {
      const Vector p_trial = p + lambda * dp;
      try {
        Trajectory trial = detail::shoot(prob, p_trial, cfg);
        Vector r_trial = trial.back() - prob.eta_end;
        const double n_trial = r_trial.lpNorm<Eigen::Infinity>();
        if (n_trial < norm) {
          p = p_trial;
          traj = std::move(trial);
          residual = std::move(r_trial);
          norm = n_trial;
          accepted = true;
          break;
        }
      } catch (const NonFiniteState&) {
      }
    }
    if (!accepted) {
      throw NoConvergence("shooting line search stalled", norm, iter + 1);
    }
  }
  if (norm < tol) return {p, std::move(traj), norm, max_iter};
  throw NoConvergence("shooting did not converge within " + std::to_string(max_iter) +
                          " Newton iterations",
                      norm, max_iter);
}

}  // namespace noesc
