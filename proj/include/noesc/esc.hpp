#pragma once

// Extremum seeking loop: optimizer iterates become boundary conditions of
// finite-time transitions that are realized by inversion-based feedforward.

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "noesc/errors.hpp"
#include "noesc/numerics.hpp"
#include "noesc/optimizer.hpp"
#include "noesc/plant.hpp"
#include "noesc/trajectory.hpp"

namespace noesc {

struct BvpConfig {
  double tol = 1e-8;
  std::size_t max_newton_iter = 50;
  /// RK4 steps per transition window for the internal-dynamics shooting.
  std::size_t mesh_steps = 1000;
};

/// One transition x_k -> x_{k+1} on [t_k, t_k + delta_k].
///
/// Only the output value y = xi_0 is interpolated at the window ends; for
/// r > 1 the higher output derivatives are not imposed as boundary values.
struct TransitionPlan {
  std::size_t k = 0;
  double t_k = 0.0;
  double t_k1 = 0.0;
  Vector x_k, x_k1;
  double y_k = 0.0, y_k1 = 0.0;
  Vector eta_k, eta_k1;
  Vector p_star;
  AnsatzTrajectory zeta;
  Trajectory eta_star;
  double bvp_residual = 0.0;
  std::size_t newton_iterations = 0;

  SaturationMap map;
  Eigen::Index relative_degree = 1;
  std::function<double(const Vector&, double, const Vector&)> alpha_inv;

  /// (y*, ..., y*^(r)) at t.
  [[nodiscard]] Vector reference(double t) const {
    return reference_output(map, zeta, t, static_cast<int>(relative_degree));
  }

  /// Feedforward u*(t) = alpha_inv(y*, ..., y*^(r), eta*(t)).
  [[nodiscard]] double u_star(double t) const {
    const Vector y = reference(t);
    return alpha_inv(y.head(relative_degree), y(relative_degree), eta_star(t));
  }

  /// Largest |y*(t) - chord(t)| on n_samples + 1 uniform points, where the
  /// chord joins (t_k, y_k) and (t_k1, y_k1).
  [[nodiscard]] double chord_deviation(std::size_t n_samples = 1000) const {
    double worst = 0.0;
    for (std::size_t i = 0; i <= n_samples; ++i) {
      const double tau = static_cast<double>(i) / static_cast<double>(n_samples);
      const double t = (i == n_samples) ? t_k1 : t_k + tau * (t_k1 - t_k);
      const double chord = y_k + (y_k1 - y_k) * tau;
      worst = std::max(worst, std::abs(reference_output(map, zeta, t, 0)(0) - chord));
    }
    return worst;
  }
};

/// Builds and solves the internal-dynamics boundary value problem for one
/// transition and packages the resulting feedforward.
inline TransitionPlan plan_transition(const NormalFormPlant& plant, const SaturationMap& map,
                                      const Vector& x_k, const Vector& x_k1, double t_k,
                                      double delta_k, const Vector& gamma,
                                      const Vector& p_init, const BvpConfig& bvp,
                                      std::size_t k = 0) {
  if (plant.r > kMaxReferenceOrder) {
    throw UnsupportedOrder("relative degree above 3 is not supported");
  }
  if (!(delta_k > 0.0)) throw InvalidArgument("delta_k must be positive");
  const Eigen::Index m = plant.internal_dim();
  if (gamma.size() != m || p_init.size() != m) {
    throw DimensionMismatch("gamma and p_init need one entry per internal state");
  }

  TransitionPlan plan;
  plan.k = k;
  plan.t_k = t_k;
  plan.t_k1 = t_k + delta_k;
  plan.x_k = x_k;
  plan.x_k1 = x_k1;
  plan.map = map;
  plan.relative_degree = plant.r;
  plan.alpha_inv = plant.alpha_inv;

  const NormalCoordinates c_k = to_normal(plant, x_k);
  const NormalCoordinates c_k1 = to_normal(plant, x_k1);
  plan.y_k = c_k.xi(0);
  plan.y_k1 = c_k1.xi(0);
  plan.eta_k = c_k.eta;
  plan.eta_k1 = c_k1.eta;

  const auto context = [k](const std::string& what) {
    return "transition " + std::to_string(k) + ": " + what;
  };

  double zeta_k = 0.0;
  double zeta_k1 = 0.0;
  try {
    zeta_k = saturate_inverse(map, plan.y_k);
    zeta_k1 = saturate_inverse(map, plan.y_k1);
  } catch (const BoundaryOutOfRange& e) {
    throw BoundaryOutOfRange(context(e.what()));
  }

  plan.zeta = AnsatzTrajectory{zeta_k, zeta_k1, gamma, p_init, delta_k, t_k};
  plan.zeta.validate();

  const int r = static_cast<int>(plant.r);
  ShootingProblem prob;
  prob.t_start = plan.t_k;
  prob.t_end = plan.t_k1;
  prob.eta_start = plan.eta_k;
  prob.eta_end = plan.eta_k1;
  // The ansatz is rebuilt per evaluation only through p; the rest is fixed.
  prob.dynamics = [&plant, &map, r, ansatz = plan.zeta](double t, const Vector& eta,
                                                        const Vector& p) mutable {
    ansatz.p = p;
    const Vector y = reference_output(map, ansatz, t, r);
    const Vector xi = y.head(r);
    const double u = plant.alpha_inv(xi, y(r), eta);
    return plant.beta(xi, eta, u);
  };

  IntegratorConfig cfg;
  cfg.step = delta_k / static_cast<double>(bvp.mesh_steps);
  try {
    ShootingResult sol = solve_shooting(prob, p_init, bvp.tol, bvp.max_newton_iter, cfg);
    plan.p_star = std::move(sol.p);
    plan.eta_star = std::move(sol.eta);
    plan.bvp_residual = sol.residual;
    plan.newton_iterations = sol.iterations;
  } catch (const NoConvergence& e) {
    throw NoConvergence(context(e.what()), e.best_residual, e.iterations);
  } catch (const NonFiniteState& e) {
    throw NonFiniteState(context(e.what()));
  }
  plan.zeta.p = plan.p_star;
  return plan;
}

struct EscConfig {
  PgdConfig pgd;
  SaturationMap map;
  Vector gamma = Vector::Constant(1, 0.01);
  double delta_k = 1.0;
  Vector p_init = Vector::Constant(1, 1.0);
  BvpConfig bvp;
  IntegratorConfig sim;  // stores_every decimates the dense log
  double t0 = 0.0;
};

enum class EscTermination {
  Converged,
  MaxIterReached,
  NoConvergence,
  NonFiniteState,
  BoundaryOutOfRange,
};

inline const char* to_string(EscTermination t) {
  switch (t) {
    case EscTermination::Converged: return "converged";
    case EscTermination::MaxIterReached: return "max_iter_reached";
    case EscTermination::NoConvergence: return "no_convergence";
    case EscTermination::NonFiniteState: return "non_finite_state";
    case EscTermination::BoundaryOutOfRange: return "boundary_out_of_range";
  }
  return "unknown";
}

struct IterateRecord {
  std::size_t k = 0;
  double t = 0.0;
  Vector target;  // optimizer iterate x_k (x_0 for k = 0)
  Vector x;       // plant state measured at t_k
  double J = 0.0;
  double grad_norm = 0.0;
  // Transition (k-1) -> k; unset for k = 0.
  Vector p_star;
  double bvp_residual = 0.0;
  std::size_t newton_iterations = 0;
  double tracking_error = 0.0;  // ||x(t_k) - target||_inf
  double chord_deviation = 0.0;
  double max_abs_y = 0.0;
  double max_abs_eta = 0.0;
};

struct DenseSample {
  double t;
  Vector x;
  double u;
  double y;
  double J;
};

struct EscLog {
  std::vector<IterateRecord> iterates;
  std::vector<DenseSample> dense;
  EscConfig config;
  EscTermination termination = EscTermination::Converged;
  std::string message;

  [[nodiscard]] std::size_t transitions() const { return iterates.size() - 1; }
  [[nodiscard]] const Vector& final_state() const { return iterates.back().x; }
  [[nodiscard]] bool clean() const { return termination == EscTermination::Converged; }
};

/// Runs the extremum seeking loop from x0 until ||grad J(x(t_k))|| < eps0.
///
/// Each transition starts from the simulated plant state, so integration
/// error is fed back into the next optimizer step. The solved p* of one
/// transition warm-starts the next; if that fails the configured p_init is
/// tried once before giving up. On a transition failure the log is returned
/// truncated with the failure recorded in termination and message.
inline EscLog run_esc(const NormalFormPlant& plant, const PerformanceOracle& oracle,
                      const ConstraintSet& set, const EscConfig& cfg, const Vector& x0) {
  plant.validate();
  cfg.pgd.validate();
  cfg.sim.validate();
  if (x0.size() != plant.n || set.dimension() != plant.n) {
    throw DimensionMismatch("x0 and the constraint set must match the plant dimension");
  }
  const double y0 = plant.output(x0);
  if (!(y0 > cfg.map.lower && y0 < cfg.map.upper)) {
    throw BoundaryOutOfRange("h(x0) is outside the saturation range");
  }

  EscLog log;
  log.config = cfg;

  Vector x = x0;
  double t = cfg.t0;
  Vector g = estimate_gradient(oracle, x);
  {
    IterateRecord rec;
    rec.k = 0;
    rec.t = t;
    rec.target = x0;
    rec.x = x0;
    rec.J = oracle.value(x0);
    rec.grad_norm = g.norm();
    rec.max_abs_y = std::abs(y0);
    rec.max_abs_eta = to_normal(plant, x0).eta.lpNorm<Eigen::Infinity>();
    log.iterates.push_back(std::move(rec));
  }
  if (log.iterates.back().grad_norm < cfg.pgd.eps0) {
    log.dense.push_back({t, x0, 0.0, y0, log.iterates.back().J});
    log.termination = EscTermination::Converged;
    return log;
  }

  Vector p_guess = cfg.p_init;
  for (std::size_t k = 0; k < cfg.pgd.max_iter; ++k) {
    const Vector target = pgd_step_with_gradient(x, g, oracle, set, cfg.pgd);

    TransitionPlan plan;
    try {
      try {
        plan = plan_transition(plant, cfg.map, x, target, t, cfg.delta_k, cfg.gamma, p_guess,
                               cfg.bvp, k);
      } catch (const NoConvergence&) {
        if (p_guess == cfg.p_init) throw;
        plan = plan_transition(plant, cfg.map, x, target, t, cfg.delta_k, cfg.gamma,
                               cfg.p_init, cfg.bvp, k);
      }
    } catch (const NoConvergence& e) {
      log.termination = EscTermination::NoConvergence;
      log.message = e.what();
      return log;
    } catch (const NonFiniteState& e) {
      log.termination = EscTermination::NonFiniteState;
      log.message = e.what();
      return log;
    } catch (const BoundaryOutOfRange& e) {
      log.termination = EscTermination::BoundaryOutOfRange;
      log.message = e.what();
      return log;
    }

    SimulationResult sim;
    try {
      sim = simulate_plant(
          plant, [&plan](double tt) { return plan.u_star(tt); }, x, plan.t_k, plan.t_k1,
          cfg.sim);
    } catch (const NonFiniteState& e) {
      log.termination = EscTermination::NonFiniteState;
      log.message = "transition " + std::to_string(k) + ": " + e.what();
      return log;
    }

    IterateRecord rec;
    rec.k = k + 1;
    rec.t = plan.t_k1;
    rec.target = target;
    rec.x = sim.x.back();
    rec.p_star = plan.p_star;
    rec.bvp_residual = plan.bvp_residual;
    rec.newton_iterations = plan.newton_iterations;
    rec.tracking_error = (rec.x - target).lpNorm<Eigen::Infinity>();
    rec.chord_deviation = plan.chord_deviation();
    for (std::size_t i = 0; i < sim.x.size(); ++i) {
      const Vector& xs = sim.x.values()[i];
      rec.max_abs_y = std::max(rec.max_abs_y, std::abs(sim.y[i]));
      rec.max_abs_eta =
          std::max(rec.max_abs_eta, to_normal(plant, xs).eta.lpNorm<Eigen::Infinity>());
      log.dense.push_back({sim.x.times()[i], xs, sim.u[i], sim.y[i], oracle.value(xs)});
    }

    x = rec.x;
    t = plan.t_k1;
    p_guess = plan.p_star;
    g = estimate_gradient(oracle, x);
    rec.J = oracle.value(x);
    rec.grad_norm = g.norm();
    log.iterates.push_back(std::move(rec));
    if (log.iterates.back().grad_norm < cfg.pgd.eps0) {
      log.termination = EscTermination::Converged;
      return log;
    }
  }
  log.termination = EscTermination::MaxIterReached;
  log.message = "gradient guard not met after " + std::to_string(cfg.pgd.max_iter) +
                " iterations";
  return log;
}

}  // namespace noesc
