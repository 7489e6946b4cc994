// Acceptance run: prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "artifacts.hpp"
#include "config.hpp"
#include "noesc/esc.hpp"

using noesc::Vector;
using namespace noesc::app;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

double inf_dist(const Vector& a, const Vector& b) { return (a - b).lpNorm<Eigen::Infinity>(); }

ExperimentConfig preset_config(const std::string& preset, std::initializer_list<std::string> sets = {}) {
  ConfigLayers layers;
  layers.apply_preset(preset);
  for (const auto& s : sets) layers.apply_override(s);
  return build_config(layers);
}

double max_eta_first_windows(const noesc::EscLog& log, std::size_t windows) {
  double m = 0.0;
  for (const auto& rec : log.iterates) {
    if (rec.k >= 1 && rec.k <= windows) m = std::max(m, rec.max_abs_eta);
  }
  return m;
}

void criterion_first_step(const Experiment& ex) {
  const Vector target = vec2(1.5, 2.056);
  noesc::PgdConfig pgd = ex.esc.pgd;
  const Vector x1 = noesc::pgd_step(ex.x0, ex.oracle, ex.set, pgd);
  const Vector x1_fd = noesc::pgd_step(ex.x0, noesc::rosenbrock_oracle(false, 1e-6), ex.set, pgd);
  const double e = inf_dist(x1, target);
  const double e_fd = inf_dist(x1_fd, target);
  report(1, e <= 1e-12 && e_fd <= 1e-3,
         "analytic error " + fmt("%.3g", e) + " (tol 1e-12), finite-difference error " +
             fmt("%.3g", e_fd) + " (tol 1e-3)");
}

void criterion_iteration_count(const Experiment& ex) {
  const auto analytic = noesc::run_pgd(ex.x0, ex.oracle, ex.set, ex.esc.pgd);
  const auto fd = noesc::run_pgd(ex.x0, noesc::rosenbrock_oracle(false, 1e-6), ex.set, ex.esc.pgd);
  const double n = static_cast<double>(analytic.steps());
  const double n_fd = static_cast<double>(fd.steps());
  const double dist = inf_dist(analytic.final_iterate(), vec2(1.0, 1.0));
  const double j = analytic.values.back();
  const bool ok = analytic.converged() && fd.converged() && n >= 1500 && n <= 1550 &&
                  std::abs(n_fd - n) <= 0.05 * n && dist <= 0.05 && j < 1e-2;
  report(2, ok,
         "analytic " + fmt("%.0f", n) + " iterations, finite-difference " + fmt("%.0f", n_fd) +
             ", final distance " + fmt("%.4g", dist) + ", final J " + fmt("%.3g", j));
}

void criterion_feasibility(const noesc::EscLog& log) {
  bool ok = true;
  double max_x1 = -std::numeric_limits<double>::infinity();
  for (const auto& rec : log.iterates) {
    max_x1 = std::max(max_x1, rec.target(0));
    ok = ok && rec.target(0) <= 1.5;
  }
  double max_y = 0.0;
  for (const auto& s : log.dense) max_y = std::max(max_y, std::abs(s.y));
  ok = ok && max_y <= 2.0 + 1e-3 && !log.dense.empty();
  report(3, ok, "max iterate x1 " + fmt("%.17g", max_x1) + ", max |y| " + fmt("%.6g", max_y) +
                    " over " + std::to_string(log.dense.size()) + " samples");
}

void criterion_first_bvp(const Experiment& ex) {
  bool ok = false;
  std::string detail;
  try {
    const auto plan = noesc::plan_transition(ex.plant, ex.esc.map, ex.x0, vec2(1.5, 2.056), 0.0,
                                             1.0, Vector::Constant(1, 0.01),
                                             Vector::Constant(1, 1.0), ex.esc.bvp);
    const bool bounds = std::abs(plan.zeta.zeta_k - 0.25 * std::log(2.8 / 1.2)) < 1e-12 &&
                        std::abs(plan.zeta.zeta_k1 - 0.25 * std::log(3.5 / 0.5)) < 1e-12;
    ok = bounds && plan.bvp_residual < 1e-6 && plan.newton_iterations <= 15;
    detail = "residual " + fmt("%.3g", plan.bvp_residual) + " in " +
             std::to_string(plan.newton_iterations) + " Newton iterations, p* " +
             fmt("%.8g", plan.p_star(0));
  } catch (const noesc::Error& e) {
    detail = e.what();
  }
  report(4, ok, detail);
}

void criterion_tracking(const noesc::EscLog& log) {
  double worst = 0.0;
  for (const auto& rec : log.iterates) {
    if (rec.k >= 1) worst = std::max(worst, rec.tracking_error);
  }
  report(5, log.clean() && log.transitions() > 0 && worst < 1e-3,
         "max window-end error " + fmt("%.3g", worst) + " over " +
             std::to_string(log.transitions()) + " windows, termination " +
             noesc::to_string(log.termination));
}

void criterion_unstable(const noesc::EscLog& stable, const noesc::EscLog& unstable) {
  const double dist = inf_dist(unstable.final_state(), vec2(1.0, 1.0));
  const double eta_s = max_eta_first_windows(stable, 5);
  const double eta_u = max_eta_first_windows(unstable, 5);
  report(6, unstable.clean() && dist <= 0.05 && eta_u > eta_s,
         "rho=-1 final distance " + fmt("%.4g", dist) + ", max |eta| first 5 windows " +
             fmt("%.6g", eta_u) + " vs rho=1 " + fmt("%.6g", eta_s));
}

void criterion_gamma(const Experiment& ex) {
  // Solver tolerance leaves differences below 1e-9 indistinguishable from noise.
  const double noise = 1e-9;
  const Vector x1 = vec2(1.5, 2.056);
  const auto chord = [&](double gamma) {
    return noesc::plan_transition(ex.plant, ex.esc.map, ex.x0, x1, 0.0, 1.0,
                                  Vector::Constant(1, gamma), ex.esc.p_init, ex.esc.bvp)
        .chord_deviation();
  };
  const double small = chord(0.01);
  const double large = chord(1.0);
  report(7, large > small + noise,
         "chord deviation gamma=1 " + fmt("%.12g", large) + " vs gamma=0.01 " +
             fmt("%.12g", small));
}

void criterion_properties() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<std::string> broken;

  // Projection variational inequality.
  {
    const auto set = noesc::ConstraintSet::box(vec2(-1.5, -0.5), vec2(1.5, 2.0));
    double worst = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < 1000; ++i) {
      const Vector z = 4.0 * vec2(unit(rng), unit(rng));
      const Vector y = set.project(4.0 * vec2(unit(rng), unit(rng)));
      const Vector pz = set.project(z);
      worst = std::max(worst, (z - pz).dot(y - pz));
    }
    if (worst > 1e-12) broken.push_back("projection inequality " + fmt("%.3g", worst));
  }

  // Descent inequality with step 2 / (L + 2 eps).
  {
    double worst = -std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 20; ++trial) {
      const Vector d = (Vector::Random(3).array().abs() * 5.0 + 0.1).matrix();
      const Vector c = 2.0 * Vector::Random(3);
      noesc::PerformanceOracle q;
      q.eval = [d, c](const Vector& x) { return 0.5 * (d.array() * (x - c).array().square()).sum(); };
      q.grad = [d, c](const Vector& x) { return Vector(d.array() * (x - c).array()); };
      const double eps = 0.1;
      noesc::PgdConfig cfg;
      cfg.eps0 = 1e-10;
      cfg.max_iter = 200;
      cfg.step_rule = noesc::FixedFromLipschitz{d.maxCoeff(), eps};
      const auto set = noesc::ConstraintSet::box(Vector::Constant(3, -1.0), Vector::Constant(3, 1.0));
      const auto res = noesc::run_pgd(3.0 * Vector::Random(3), q, set, cfg);
      for (std::size_t k = 0; k + 1 < res.iterates.size(); ++k) {
        const double lhs = res.values[k + 1] - res.values[k];
        const double rhs = -eps * (res.iterates[k + 1] - res.iterates[k]).squaredNorm();
        worst = std::max(worst, lhs - rhs);
      }
    }
    if (worst > 1e-12) broken.push_back("descent inequality " + fmt("%.3g", worst));
  }

  // RK4 convergence order.
  {
    const auto rhs = [](double t, const Vector& v) { return Vector(-2.0 * v * std::cos(t)); };
    const double exact = std::exp(-2.0 * std::sin(1.0));
    const auto err = [&](double h) {
      return std::abs(noesc::integrate_ivp(rhs, 0.0, 1.0, Vector::Ones(1), {h, 1}).back()(0) - exact);
    };
    const double ratio = err(0.1) / err(0.05);
    if (!(ratio >= 14.0 && ratio <= 18.0)) broken.push_back("RK4 ratio " + fmt("%.4g", ratio));
  }

  // Coordinate round trips.
  {
    double worst = 0.0;
    for (double rho : {1.0, -1.0}) {
      const auto plant = noesc::example_plant(rho);
      for (int i = 0; i < 1000; ++i) {
        const Vector x = 3.0 * vec2(unit(rng), unit(rng));
        const auto c = noesc::to_normal(plant, x);
        worst = std::max(worst, inf_dist(noesc::from_normal(plant, c.xi, c.eta), x));
        worst = std::max(worst, inf_dist(noesc::to_normal(plant, noesc::from_normal(plant, c.xi, c.eta)).eta, c.eta));
      }
    }
    if (worst > 1e-10) broken.push_back("round trip " + fmt("%.3g", worst));
  }

  // Reference-output derivatives against central differences.
  {
    const auto map = noesc::SaturationMap::from_output_bounds(-1.5, 1.5, 0.5, 4.0);
    double worst = 0.0;
    const double h = 1e-5;
    for (int trial = 0; trial < 20; ++trial) {
      Vector gamma(2), p(2);
      gamma << 0.3, 0.1;
      p << 3.0 * unit(rng), 3.0 * unit(rng);
      const noesc::AnsatzTrajectory a{0.5 * unit(rng), 0.5 * unit(rng), gamma, p, 1.5, 2.0};
      for (double tau = 0.05; tau < 0.96; tau += 0.1) {
        const double t = a.t_k + tau * a.delta_k;
        const Vector y = noesc::reference_output(map, a, t, 3);
        const Vector yp = noesc::reference_output(map, a, t + h, 3);
        const Vector ym = noesc::reference_output(map, a, t - h, 3);
        for (int j = 0; j < 3; ++j) {
          worst = std::max(worst, std::abs((yp(j) - ym(j)) / (2 * h) - y(j + 1)));
        }
      }
    }
    if (worst > 1e-6) broken.push_back("reference derivatives " + fmt("%.3g", worst));
  }

  std::string detail = "projection, descent, RK4 order, round trip, reference derivatives";
  if (!broken.empty()) {
    detail = "failed:";
    for (const auto& b : broken) detail += " [" + b + "]";
  }
  report(8, broken.empty(), detail);
}

}  // namespace

int main() {
  try {
    const auto cfg_stable = preset_config("s4-default");
    const auto cfg_unstable = preset_config("s4-unstable");
    const auto ex = make_experiment(cfg_stable);

    criterion_first_step(ex);
    criterion_iteration_count(ex);

    const auto stable = run_experiment(cfg_stable);
    criterion_feasibility(stable);
    criterion_first_bvp(ex);
    criterion_tracking(stable);

    const auto unstable = run_experiment(cfg_unstable);
    criterion_unstable(stable, unstable);

    criterion_gamma(ex);
    criterion_properties();
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
