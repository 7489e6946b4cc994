#pragma once

// Euclidean projections, gradient estimation from performance measurements
// and projected gradient descent.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "noesc/errors.hpp"
#include "noesc/numerics.hpp"

namespace noesc {

/// Closed convex feasible set with an exact Euclidean projection.
class ConstraintSet {
 public:
  using Projector = std::function<Vector(const Vector&)>;

  /// Box [lower, upper]; use +-infinity for free components.
  static ConstraintSet box(Vector lower, Vector upper) {
    if (lower.size() != upper.size()) {
      throw DimensionMismatch("box bounds must share one dimension");
    }
    if ((lower.array() > upper.array()).any() || lower.array().isNaN().any() ||
        upper.array().isNaN().any()) {
      throw InvalidArgument("box requires lower <= upper componentwise");
    }
    ConstraintSet set;
    set.dim_ = lower.size();
    set.lower_ = std::move(lower);
    set.upper_ = std::move(upper);
    return set;
  }

  static ConstraintSet unconstrained(Eigen::Index n) {
    const double inf = std::numeric_limits<double>::infinity();
    return box(Vector::Constant(n, -inf), Vector::Constant(n, inf));
  }

  /// User-supplied projector. It must be the exact projection onto a closed
  /// convex set; only dimensions are checked.
  static ConstraintSet custom(Eigen::Index n, Projector projector) {
    ConstraintSet set;
    set.dim_ = n;
    set.projector_ = std::move(projector);
    return set;
  }

  [[nodiscard]] Eigen::Index dimension() const { return dim_; }
  [[nodiscard]] bool is_box() const { return !projector_; }
  [[nodiscard]] const Vector& lower() const { return lower_; }
  [[nodiscard]] const Vector& upper() const { return upper_; }

  [[nodiscard]] Vector project(const Vector& z) const {
    if (z.size() != dim_) throw DimensionMismatch("projection input has wrong dimension");
    if (projector_) {
      Vector out = projector_(z);
      if (out.size() != dim_) throw DimensionMismatch("custom projector changed dimension");
      return out;
    }
    return z.cwiseMax(lower_).cwiseMin(upper_);
  }

  [[nodiscard]] bool contains(const Vector& x, double tol = 0.0) const {
    if (x.size() != dim_) return false;
    if (projector_) return (project(x) - x).lpNorm<Eigen::Infinity>() <= tol;
    return ((x.array() >= lower_.array() - tol) && (x.array() <= upper_.array() + tol)).all();
  }

 private:
  ConstraintSet() = default;

  Eigen::Index dim_ = 0;
  Vector lower_;
  Vector upper_;
  Projector projector_;
};

inline Vector project(const Vector& z, const ConstraintSet& set) { return set.project(z); }

/// Measured performance z = J(x), optionally with an analytic gradient.
struct PerformanceOracle {
  std::function<double(const Vector&)> eval;
  std::function<Vector(const Vector&)> grad;  // empty: central differences
  double fd_step = 1e-6;

  [[nodiscard]] double value(const Vector& x) const {
    const double z = eval(x);
    if (!std::isfinite(z)) throw NonFiniteValue("performance measurement is not finite");
    return z;
  }
};

/// Gradient of the oracle at x: analytic if available, else central differences.
inline Vector estimate_gradient(const PerformanceOracle& oracle, const Vector& x) {
  if (!all_finite(x)) throw NonFiniteValue("gradient requested at a non-finite point");
  if (oracle.grad) {
    Vector g = oracle.grad(x);
    if (g.size() != x.size()) throw DimensionMismatch("analytic gradient has wrong dimension");
    if (!all_finite(g)) throw NonFiniteValue("analytic gradient is not finite");
    return g;
  }
  const double h = oracle.fd_step;
  if (!(h > 0.0)) throw InvalidArgument("finite-difference step must be positive");
  Vector g(x.size());
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp(i) = x(i) + h;
    const double up = oracle.value(xp);
    xp(i) = x(i) - h;
    const double down = oracle.value(xp);
    xp(i) = x(i);
    g(i) = (up - down) / (2.0 * h);
  }
  return g;
}

struct FixedStep {};

/// step = 2 / (L + 2 eps) for a gradient with Lipschitz constant L.
struct FixedFromLipschitz {
  double lipschitz;
  double eps;
};

/// Projected Armijo backtracking starting from PgdConfig::step.
struct Backtracking {
  double shrink = 0.5;
  double slope = 1e-4;
  int max_shrinks = 60;
};

using StepRule = std::variant<FixedStep, FixedFromLipschitz, Backtracking>;

struct PgdConfig {
  double step = 0.002;
  double eps0 = 1e-2;
  std::size_t max_iter = 5000;
  StepRule step_rule = FixedStep{};

  /// Nominal step length implied by the rule.
  [[nodiscard]] double nominal_step() const {
    if (const auto* lip = std::get_if<FixedFromLipschitz>(&step_rule)) {
      return 2.0 / (lip->lipschitz + 2.0 * lip->eps);
    }
    return step;
  }

  void validate() const {
    if (!(eps0 > 0.0)) throw InvalidArgument("eps0 must be positive");
    if (max_iter == 0) throw InvalidArgument("max_iter must be positive");
    if (const auto* lip = std::get_if<FixedFromLipschitz>(&step_rule)) {
      if (!(lip->lipschitz >= 0.0) || !(lip->eps > 0.0)) {
        throw InvalidArgument("Lipschitz rule needs L >= 0 and eps > 0");
      }
    } else if (!(step > 0.0)) {
      throw InvalidArgument("step must be positive");
    }
    if (const auto* bt = std::get_if<Backtracking>(&step_rule)) {
      if (!(bt->shrink > 0.0 && bt->shrink < 1.0) || !(bt->slope > 0.0 && bt->slope < 1.0)) {
        throw InvalidArgument("backtracking needs shrink and slope in (0, 1)");
      }
    }
  }
};

/// x_{k+1} = P(x_k - step * grad), using a gradient computed by the caller.
inline Vector pgd_step_with_gradient(const Vector& x_k, const Vector& grad,
                                     const PerformanceOracle& oracle, const ConstraintSet& set,
                                     const PgdConfig& cfg) {
  if (grad.size() != x_k.size()) throw DimensionMismatch("gradient has wrong dimension");
  const double step = cfg.nominal_step();
  if (const auto* bt = std::get_if<Backtracking>(&cfg.step_rule)) {
    const double j_k = oracle.value(x_k);
    double alpha = step;
    Vector candidate = set.project(x_k - alpha * grad);
    for (int i = 0; i < bt->max_shrinks; ++i) {
      if (oracle.value(candidate) <= j_k + bt->slope * grad.dot(candidate - x_k)) break;
      alpha *= bt->shrink;
      candidate = set.project(x_k - alpha * grad);
    }
    return candidate;
  }
  return set.project(x_k - step * grad);
}

inline Vector pgd_step(const Vector& x_k, const PerformanceOracle& oracle,
                       const ConstraintSet& set, const PgdConfig& cfg) {
  return pgd_step_with_gradient(x_k, estimate_gradient(oracle, x_k), oracle, set, cfg);
}

enum class PgdStop {
  InitialGradientSmall,  // guard fired at x0, no step taken
  GradientSmall,         // guard fired at a new iterate
  MaxIterReached,
};

struct PgdResult {
  std::vector<Vector> iterates;  // x_0 ... x_N
  std::vector<double> values;    // J(x_k)
  std::vector<double> grad_norms;
  PgdStop stop = PgdStop::GradientSmall;

  [[nodiscard]] std::size_t steps() const { return iterates.size() - 1; }
  [[nodiscard]] bool converged() const { return stop != PgdStop::MaxIterReached; }
  [[nodiscard]] const Vector& final_iterate() const { return iterates.back(); }
};

/// Projected gradient descent until ||grad J(x_k)|| < eps0 or max_iter steps.
inline PgdResult run_pgd(const Vector& x0, const PerformanceOracle& oracle,
                         const ConstraintSet& set, const PgdConfig& cfg) {
  cfg.validate();
  if (x0.size() != set.dimension()) throw DimensionMismatch("x0 has wrong dimension");

  PgdResult out;
  Vector x = x0;
  Vector g = estimate_gradient(oracle, x);
  out.iterates.push_back(x);
  out.values.push_back(oracle.value(x));
  out.grad_norms.push_back(g.norm());
  if (out.grad_norms.back() < cfg.eps0) {
    out.stop = PgdStop::InitialGradientSmall;
    return out;
  }
  for (std::size_t k = 0; k < cfg.max_iter; ++k) {
    x = pgd_step_with_gradient(x, g, oracle, set, cfg);
    g = estimate_gradient(oracle, x);
    out.iterates.push_back(x);
    out.values.push_back(oracle.value(x));
    out.grad_norms.push_back(g.norm());
    if (out.grad_norms.back() < cfg.eps0) {
      out.stop = PgdStop::GradientSmall;
      return out;
    }
  }
  out.stop = PgdStop::MaxIterReached;
  return out;
}

/// Two-dimensional Rosenbrock-form performance 100 (x2 - x1^2)^2 + (1 - x1)^2.
inline PerformanceOracle rosenbrock_oracle(bool analytic_gradient, double fd_step = 1e-6) {
  PerformanceOracle oracle;
  oracle.eval = [](const Vector& x) {
    const double a = x(1) - x(0) * x(0);
    const double b = 1.0 - x(0);
    return 100.0 * a * a + b * b;
  };
  if (analytic_gradient) {
    oracle.grad = [](const Vector& x) {
      const double a = x(1) - x(0) * x(0);
      Vector g(2);
      g << -400.0 * x(0) * a - 2.0 * (1.0 - x(0)), 200.0 * a;
      return g;
    };
  }
  oracle.fd_step = fd_step;
  return oracle;
}

}  // namespace noesc
