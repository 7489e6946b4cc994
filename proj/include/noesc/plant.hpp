#pragma once

// Single-input single-output plants supplied in input-output normal form.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "noesc/errors.hpp"
#include "noesc/numerics.hpp"

namespace noesc {

/// Normal-form coordinates: xi = (y, y', ..., y^(r-1)) and internal state eta.
struct NormalCoordinates {
  Vector xi;
  Vector eta;
};

/// Plant x' = f(x) + g(x) u, y = h(x), together with its normal form
///   y^(r) = alpha(xi, eta, u),  eta' = beta(xi, eta, u)
/// and the coordinate change phi: x -> (xi, eta).
struct NormalFormPlant {
  std::string name;
  Eigen::Index n = 0;
  Eigen::Index r = 0;

  std::function<double(const Vector& xi, const Vector& eta, double u)> alpha;
  /// Solves alpha(xi, eta, u) = y_r for u.
  std::function<double(const Vector& xi, double y_r, const Vector& eta)> alpha_inv;
  std::function<Vector(const Vector& xi, const Vector& eta, double u)> beta;
  std::function<NormalCoordinates(const Vector& x)> phi;
  std::function<Vector(const Vector& xi, const Vector& eta)> phi_inv;
  std::function<Vector(const Vector& x, double u)> original_rhs;
  std::function<double(const Vector& x)> output;

  double y_min = -std::numeric_limits<double>::infinity();
  double y_max = std::numeric_limits<double>::infinity();

  [[nodiscard]] Eigen::Index internal_dim() const { return n - r; }

  void validate() const {
    if (!(r > 0 && r <= n)) throw InvalidArgument("relative degree must satisfy 0 < r <= n");
    if (!alpha || !alpha_inv || !beta || !phi || !phi_inv || !original_rhs || !output) {
      throw InvalidArgument("plant '" + name + "' is missing a map");
    }
    if (!(y_min < y_max)) throw InvalidArgument("plant output bounds need y_min < y_max");
  }
};

inline NormalCoordinates to_normal(const NormalFormPlant& plant, const Vector& x) {
  if (x.size() != plant.n) throw DimensionMismatch("state has wrong dimension");
  NormalCoordinates c = plant.phi(x);
  if (c.xi.size() != plant.r || c.eta.size() != plant.internal_dim()) {
    throw DimensionMismatch("phi returned coordinates of the wrong dimension");
  }
  return c;
}

inline Vector from_normal(const NormalFormPlant& plant, const Vector& xi, const Vector& eta) {
  if (xi.size() != plant.r || eta.size() != plant.internal_dim()) {
    throw DimensionMismatch("normal-form coordinates have wrong dimension");
  }
  Vector x = plant.phi_inv(xi, eta);
  if (x.size() != plant.n) throw DimensionMismatch("phi_inv returned the wrong dimension");
  return x;
}

/// Checks the supplied maps on sample states: phi round trip, output
/// consistency xi_0 = h(x), and alpha(xi, eta, alpha_inv(xi, y_r, eta)) = y_r.
/// Throws InvalidArgument naming the first violated identity.
inline void verify_normal_form(const NormalFormPlant& plant, std::span<const Vector> states,
                               double tol = 1e-10) {
  plant.validate();
  for (const Vector& x : states) {
    const NormalCoordinates c = to_normal(plant, x);
    const Vector back = from_normal(plant, c.xi, c.eta);
    if ((back - x).lpNorm<Eigen::Infinity>() > tol * std::max(1.0, x.lpNorm<Eigen::Infinity>())) {
      throw InvalidArgument("phi_inv(phi(x)) != x for plant '" + plant.name + "'");
    }
    if (std::abs(c.xi(0) - plant.output(x)) > tol) {
      throw InvalidArgument("first normal coordinate differs from h(x)");
    }
    for (const double y_r : {-1.0, 0.0, 2.5}) {
      const double u = plant.alpha_inv(c.xi, y_r, c.eta);
      if (std::abs(plant.alpha(c.xi, c.eta, u) - y_r) > tol * std::max(1.0, std::abs(y_r))) {
        throw InvalidArgument("alpha_inv does not invert alpha");
      }
    }
  }
}

struct SimulationResult {
  Trajectory x;
  std::vector<double> y;  // h(x) at the stored samples
  std::vector<double> u;  // control at the stored samples
};

/// Integrates the plant in original coordinates under u(t).
template <typename Control>
SimulationResult simulate_plant(const NormalFormPlant& plant, Control&& u_of_t,
                                const Vector& x0, double t_a, double t_b,
                                const IntegratorConfig& cfg) {
  if (x0.size() != plant.n) throw DimensionMismatch("x0 has wrong dimension");
  Trajectory traj = integrate_ivp(
      [&](double t, const Vector& x) { return plant.original_rhs(x, u_of_t(t)); }, t_a, t_b,
      x0, cfg);
  SimulationResult out;
  out.y.reserve(traj.size());
  out.u.reserve(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    out.y.push_back(plant.output(traj.values()[i]));
    out.u.push_back(u_of_t(traj.times()[i]));
  }
  out.x = std::move(traj);
  return out;
}

/// Two-state example plant
///   x1' = -x2^3 + u,  x2' = rho (2 x1^2 - 2 x2),  y = x1
/// with y = x1, eta = x2 and output bounds [-1.5, 1.5]. The internal dynamics
/// are stable for rho > 0 and unstable for rho < 0.
inline NormalFormPlant example_plant(double rho) {
  if (rho == 0.0 || !std::isfinite(rho)) {
    throw InvalidArgument("example plant requires a finite, nonzero rho");
  }
  NormalFormPlant p;
  p.name = "example";
  p.n = 2;
  p.r = 1;
  p.alpha = [](const Vector&, const Vector& eta, double u) {
    return -eta(0) * eta(0) * eta(0) + u;
  };
  p.alpha_inv = [](const Vector&, double y_r, const Vector& eta) {
    return y_r + eta(0) * eta(0) * eta(0);
  };
  p.beta = [rho](const Vector& xi, const Vector& eta, double) {
    Vector d(1);
    d(0) = rho * (2.0 * xi(0) * xi(0) - 2.0 * eta(0));
    return d;
  };
  p.phi = [](const Vector& x) {
    return NormalCoordinates{Vector::Constant(1, x(0)), Vector::Constant(1, x(1))};
  };
  p.phi_inv = [](const Vector& xi, const Vector& eta) {
    Vector x(2);
    x << xi(0), eta(0);
    return x;
  };
  p.original_rhs = [rho](const Vector& x, double u) {
    Vector d(2);
    d << -x(1) * x(1) * x(1) + u, rho * (2.0 * x(0) * x(0) - 2.0 * x(1));
    return d;
  };
  p.output = [](const Vector& x) { return x(0); };
  p.y_min = -1.5;
  p.y_max = 1.5;
  return p;
}

}  // namespace noesc
