#pragma once

// Constrained reference outputs: a sigmoid saturation of a polynomial
// virtual trajectory carrying the free parameters of the transition.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>

#include "noesc/errors.hpp"
#include "noesc/numerics.hpp"

namespace noesc {

inline constexpr int kMaxReferenceOrder = 3;

/// Sigmoid y = lower + (upper - lower) / (1 + exp(-steepness * zeta)),
/// i.e. upper - (upper - lower) / (1 + exp(steepness * zeta)).
struct SaturationMap {
  double lower = -1.0;  // asymptotic bounds
  double upper = 1.0;
  double steepness = 2.0;

  /// Asymptotic bounds [y_min - delta_y, y_max + delta_y]. The steepness
  /// defaults to 4 / (upper - lower).
  static SaturationMap from_output_bounds(double y_min, double y_max, double delta_y,
                                          std::optional<double> steepness = std::nullopt) {
    if (!(y_min < y_max)) throw InvalidArgument("saturation needs y_min < y_max");
    if (!(delta_y > 0.0)) throw InvalidArgument("saturation needs delta_y > 0");
    SaturationMap map;
    map.lower = y_min - delta_y;
    map.upper = y_max + delta_y;
    map.steepness = steepness.value_or(4.0 / (map.upper - map.lower));
    if (!(map.steepness > 0.0)) throw InvalidArgument("saturation steepness must be positive");
    return map;
  }

  [[nodiscard]] double width() const { return upper - lower; }
};

inline double saturate(const SaturationMap& map, double zeta) {
  return map.upper - map.width() / (1.0 + std::exp(map.steepness * zeta));
}

/// Inverse sigmoid; y must lie strictly inside the asymptotic bounds.
inline double saturate_inverse(const SaturationMap& map, double y) {
  if (!(y > map.lower && y < map.upper)) {
    throw BoundaryOutOfRange("output " + std::to_string(y) + " is outside the saturation range (" +
                             std::to_string(map.lower) + ", " + std::to_string(map.upper) + ")");
  }
  return (std::log(y - map.lower) - std::log(map.upper - y)) / map.steepness;
}

/// d^j y / d zeta^j for j = 0..3.
inline std::array<double, 4> saturation_derivatives(const SaturationMap& map, double zeta) {
  const double k = map.steepness;
  const double w = map.width();
  const double s = 1.0 / (1.0 + std::exp(-k * zeta));
  const double ds = s * (1.0 - s);
  return {map.upper - w * (1.0 - s), w * k * ds, w * k * k * ds * (1.0 - 2.0 * s),
          w * k * k * k * ds * (1.0 - 6.0 * s + 6.0 * s * s)};
}

/// Virtual trajectory on [t_k, t_k + delta_k]
///   zeta(tau) = zeta_k + a1 tau + sum_i gamma_i p_i tau^(i+1),
///   a1 = zeta_k1 - zeta_k - sum_i gamma_i p_i,  tau = (t - t_k) / delta_k,
/// so both endpoint values hold for every p.
struct AnsatzTrajectory {
  double zeta_k = 0.0;
  double zeta_k1 = 0.0;
  Vector gamma;
  Vector p;
  double delta_k = 1.0;
  double t_k = 0.0;

  [[nodiscard]] double t_k1() const { return t_k + delta_k; }
  [[nodiscard]] Eigen::Index degree() const { return p.size() + 1; }

  void validate() const {
    if (gamma.size() != p.size() || p.size() == 0) {
      throw DimensionMismatch("ansatz needs one gamma per free parameter");
    }
    if (!(gamma.array() > 0.0).all()) throw InvalidArgument("ansatz gamma must be positive");
    if (!(delta_k > 0.0)) throw InvalidArgument("transition duration must be positive");
  }
};

/// (zeta, zeta', ..., zeta^(order)) at time t, derivatives taken in t.
inline Vector ansatz_eval(const AnsatzTrajectory& a, double t, int order) {
  if (order < 0) throw InvalidArgument("negative derivative order");
  const double slack = 1e-12 * std::max(1.0, std::abs(a.t_k1()));
  if (!(t >= a.t_k - slack && t <= a.t_k1() + slack)) {
    throw OutOfDomain("ansatz evaluated outside its transition window at t = " +
                      std::to_string(t));
  }
  const double tau = std::clamp((t - a.t_k) / a.delta_k, 0.0, 1.0);

  // Polynomial coefficients in tau, c[0] + c[1] tau + ... + c[deg] tau^deg.
  const auto deg = static_cast<int>(a.degree());
  Vector coeff = Vector::Zero(deg + 1);
  const Vector gp = a.gamma.cwiseProduct(a.p);
  coeff(0) = a.zeta_k;
  coeff(1) = a.zeta_k1 - a.zeta_k - gp.sum();
  for (int i = 0; i < gp.size(); ++i) coeff(i + 2) = gp(i);

  Vector out = Vector::Zero(order + 1);
  double chain = 1.0;
  for (int j = 0; j <= order; ++j) {
    if (j > deg) break;
    // Horner on the j-th derivative in tau.
    double acc = 0.0;
    for (int m = deg; m >= j; --m) {
      double falling = 1.0;
      for (int q = 0; q < j; ++q) falling *= static_cast<double>(m - q);
      acc = acc * tau + falling * coeff(m);
    }
    out(j) = acc * chain;
    chain /= a.delta_k;
  }
  return out;
}

/// (y*, y*', ..., y*^(order)) with y* = saturate(zeta(t)), order <= 3.
inline Vector reference_output(const SaturationMap& map, const AnsatzTrajectory& a, double t,
                               int order) {
  if (order > kMaxReferenceOrder) {
    throw UnsupportedOrder("reference derivatives are available up to order 3, requested " +
                           std::to_string(order));
  }
  const Vector z = ansatz_eval(a, t, order);
  const auto d = saturation_derivatives(map, z(0));
  Vector y(order + 1);
  y(0) = saturate(map, z(0));
  if (order >= 1) y(1) = d[1] * z(1);
  if (order >= 2) y(2) = d[2] * z(1) * z(1) + d[1] * z(2);
  if (order >= 3) y(3) = d[3] * z(1) * z(1) * z(1) + 3.0 * d[2] * z(1) * z(2) + d[1] * z(3);
  return y;
}

}  // namespace noesc
