#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "noesc/optimizer.hpp"

using noesc::Backtracking;
using noesc::ConstraintSet;
using noesc::FixedFromLipschitz;
using noesc::PerformanceOracle;
using noesc::PgdConfig;
using noesc::Vector;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

ConstraintSet example_box() { return ConstraintSet::box(vec({-1.5, -kInf}), vec({1.5, kInf})); }

PerformanceOracle squared_norm() {
  PerformanceOracle o;
  o.eval = [](const Vector& x) { return x.squaredNorm(); };
  o.fd_step = 1e-5;
  return o;
}

// 0.5 x^T H x + b^T x with H = diag(h); gradient Lipschitz constant max(h).
PerformanceOracle diagonal_quadratic(const Vector& h, const Vector& b) {
  PerformanceOracle o;
  o.eval = [h, b](const Vector& x) { return 0.5 * x.dot(h.cwiseProduct(x)) + b.dot(x); };
  o.grad = [h, b](const Vector& x) { return Vector(h.cwiseProduct(x) + b); };
  return o;
}

// Euclidean ball of radius R around the origin.
ConstraintSet ball(Eigen::Index n, double radius) {
  return ConstraintSet::custom(n, [radius](const Vector& z) {
    const double norm = z.norm();
    return norm <= radius ? z : Vector(z * (radius / norm));
  });
}

}  // namespace

TEST(Project, InteriorPointIsUnchanged) {
  EXPECT_EQ(noesc::project(vec({0.5, 0.5}), example_box()), vec({0.5, 0.5}));
}

TEST(Project, ClampsFirstIterateOfExample) {
  EXPECT_EQ(noesc::project(vec({2.3112, 2.056}), example_box()), vec({1.5, 2.056}));
}

TEST(Project, SingleActiveBound) {
  const auto box = ConstraintSet::box(vec({-1.5, -1.5}), vec({1.5, 1.5}));
  EXPECT_EQ(noesc::project(vec({-3.0, 0.0}), box), vec({-1.5, 0.0}));
  EXPECT_EQ(noesc::project(vec({1.5, -1.5}), box), vec({1.5, -1.5}));
}

TEST(Project, RejectsWrongDimensionAndBadBox) {
  EXPECT_THROW(noesc::project(vec({1.0}), example_box()), noesc::DimensionMismatch);
  EXPECT_THROW(ConstraintSet::box(vec({1.0}), vec({0.0})), noesc::InvalidArgument);
  EXPECT_THROW(ConstraintSet::box(vec({0.0, 0.0}), vec({1.0})), noesc::DimensionMismatch);
}

TEST(Project, VariationalInequalityAndIdempotenceOnRandomSamples) {
  std::mt19937_64 rng(20211214);
  std::uniform_real_distribution<double> wide(-5.0, 5.0);
  const auto box = ConstraintSet::box(vec({-1.5, -1.0, -kInf}), vec({1.5, 2.0, 0.5}));
  const auto round = ball(3, 1.25);
  for (const ConstraintSet* set : {&box, &round}) {
    double worst = -kInf;
    for (int i = 0; i < 1000; ++i) {
      const Vector z = vec({wide(rng), wide(rng), wide(rng)});
      const Vector x = set->project(vec({wide(rng), wide(rng), wide(rng)}));
      const Vector pz = set->project(z);
      worst = std::max(worst, (z - pz).dot(x - pz));
      EXPECT_LE((set->project(pz) - pz).lpNorm<Eigen::Infinity>(), 1e-15);
      EXPECT_TRUE(set->contains(pz, 1e-12));
    }
    EXPECT_LE(worst, 1e-12);
  }
}

TEST(EstimateGradient, CentralDifferencesOnQuadratic) {
  const Vector g = noesc::estimate_gradient(squared_norm(), vec({1.0, 2.0}));
  EXPECT_NEAR(g(0), 2.0, 1e-8);
  EXPECT_NEAR(g(1), 4.0, 1e-8);
}

TEST(EstimateGradient, RosenbrockAtExampleStart) {
  // Closed form: (-400 x1 (x2 - x1^2) - 2 (1 - x1), 200 (x2 - x1^2)) = (-755.6, 472).
  const Vector x = vec({0.8, 3.0});
  const Vector analytic = noesc::estimate_gradient(noesc::rosenbrock_oracle(true), x);
  EXPECT_NEAR(analytic(0), -755.6, 1e-10);
  EXPECT_NEAR(analytic(1), 472.0, 1e-10);
  const Vector fd = noesc::estimate_gradient(noesc::rosenbrock_oracle(false, 1e-6), x);
  EXPECT_NEAR(fd(0), -755.6, 1e-4);
  EXPECT_NEAR(fd(1), 472.0, 1e-4);
}

TEST(EstimateGradient, ConstantIsZero) {
  PerformanceOracle o;
  o.eval = [](const Vector&) { return 7.0; };
  EXPECT_EQ(noesc::estimate_gradient(o, vec({1.0, -3.0})), Vector::Zero(2));
}

TEST(EstimateGradient, NonFiniteMeasurementRaises) {
  PerformanceOracle o;
  o.eval = [](const Vector& x) { return x(0) > 0.0 ? std::nan("") : 0.0; };
  EXPECT_THROW(noesc::estimate_gradient(o, vec({0.0})), noesc::NonFiniteValue);
}

TEST(PgdStep, FirstExampleStep) {
  PgdConfig cfg;
  cfg.step = 0.002;
  const Vector x1 =
      noesc::pgd_step(vec({0.8, 3.0}), noesc::rosenbrock_oracle(true), example_box(), cfg);
  EXPECT_NEAR(x1(0), 1.5, 1e-12);
  EXPECT_NEAR(x1(1), 2.056, 1e-12);
}

TEST(PgdStep, StationaryPointStays) {
  PgdConfig cfg;
  const Vector x = vec({1.0, 1.0});
  EXPECT_EQ(noesc::pgd_step(x, noesc::rosenbrock_oracle(true), example_box(), cfg), x);
}

TEST(PgdStep, ExactMinimizerOfUnconstrainedQuadratic) {
  PgdConfig cfg;
  cfg.step = 0.5;
  auto o = squared_norm();
  o.grad = [](const Vector& x) { return Vector(2.0 * x); };
  EXPECT_EQ(noesc::pgd_step(vec({1.0, 0.0}), o, ConstraintSet::unconstrained(2), cfg),
            Vector::Zero(2));
}

TEST(PgdConfigTest, LipschitzRuleStep) {
  PgdConfig cfg;
  cfg.step_rule = FixedFromLipschitz{10.0, 0.5};
  EXPECT_EQ(cfg.nominal_step(), 2.0 / 11.0);
  cfg.eps0 = 0.0;
  EXPECT_THROW(cfg.validate(), noesc::InvalidArgument);
}

TEST(RunPgd, ExampleIterationCountAndFeasibility) {
  PgdConfig cfg;
  cfg.step = 0.002;
  cfg.eps0 = 1e-2;
  const auto box = example_box();
  const auto oracle = noesc::rosenbrock_oracle(true);
  const auto res = noesc::run_pgd(vec({0.8, 3.0}), oracle, box, cfg);
  ASSERT_EQ(res.stop, noesc::PgdStop::GradientSmall);
  EXPECT_GE(res.steps(), 1500u);
  EXPECT_LE(res.steps(), 1550u);
  EXPECT_LT((res.final_iterate() - vec({1.0, 1.0})).lpNorm<Eigen::Infinity>(), 0.05);
  EXPECT_LT(res.values.back(), 1e-2);
  for (const auto& x : res.iterates) EXPECT_LE(x(0), 1.5);

  // Fixed point of the projected step at the terminal iterate, to within step * eps0.
  const Vector& xs = res.final_iterate();
  const Vector again = box.project(xs - cfg.step * noesc::estimate_gradient(oracle, xs));
  EXPECT_LT((again - xs).norm(), cfg.step * cfg.eps0);
}

TEST(RunPgd, ExampleDescentIsMonotoneOnlyAfterTheInitialOscillation) {
  // The nonconvex performance with step 0.002 overshoots the active bound
  // x1 = 1.5 in the first iterations, so J rises on some early steps.
  PgdConfig cfg;
  const auto res = noesc::run_pgd(vec({0.8, 3.0}), noesc::rosenbrock_oracle(true), example_box(), cfg);
  EXPECT_GT(res.values[2], res.values[1]);
  for (std::size_t k = 30; k + 1 < res.values.size(); ++k) {
    EXPECT_LE(res.values[k + 1], res.values[k]) << "k = " << k;
  }
}

TEST(RunPgd, FiniteDifferenceModeTracksAnalyticCount) {
  PgdConfig cfg;
  const auto analytic =
      noesc::run_pgd(vec({0.8, 3.0}), noesc::rosenbrock_oracle(true), example_box(), cfg);
  const auto fd =
      noesc::run_pgd(vec({0.8, 3.0}), noesc::rosenbrock_oracle(false, 1e-6), example_box(), cfg);
  const double ratio = static_cast<double>(fd.steps()) / static_cast<double>(analytic.steps());
  EXPECT_NEAR(ratio, 1.0, 0.05);
}

TEST(RunPgd, QuadraticConvergesInOneStep) {
  PgdConfig cfg;
  cfg.step = 0.5;
  auto o = squared_norm();
  o.grad = [](const Vector& x) { return Vector(2.0 * x); };
  const auto res = noesc::run_pgd(vec({1.0, 1.0}), o, ConstraintSet::unconstrained(2), cfg);
  EXPECT_LE(res.steps(), 2u);
  EXPECT_EQ(res.final_iterate(), Vector::Zero(2));
}

TEST(RunPgd, AlreadyStationaryStartTakesNoStep) {
  PgdConfig cfg;
  const auto res =
      noesc::run_pgd(vec({1.0, 1.0}), noesc::rosenbrock_oracle(true), example_box(), cfg);
  EXPECT_EQ(res.steps(), 0u);
  EXPECT_EQ(res.stop, noesc::PgdStop::InitialGradientSmall);
  EXPECT_EQ(res.final_iterate(), vec({1.0, 1.0}));
}

TEST(RunPgd, IterationCapIsFlagged) {
  PgdConfig cfg;
  cfg.max_iter = 10;
  const auto res =
      noesc::run_pgd(vec({0.8, 3.0}), noesc::rosenbrock_oracle(true), example_box(), cfg);
  EXPECT_EQ(res.stop, noesc::PgdStop::MaxIterReached);
  EXPECT_FALSE(res.converged());
  EXPECT_EQ(res.steps(), 10u);
}

TEST(RunPgd, DescentInequalityOnConvexQuadratics) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> curv(0.1, 20.0);
  std::uniform_real_distribution<double> lin(-5.0, 5.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector h = vec({curv(rng), curv(rng), curv(rng)});
    const Vector b = vec({lin(rng), lin(rng), lin(rng)});
    const double eps = 0.25;
    PgdConfig cfg;
    cfg.step_rule = FixedFromLipschitz{h.maxCoeff(), eps};
    cfg.eps0 = 1e-8;
    cfg.max_iter = 500;
    const auto box = ConstraintSet::box(vec({-1.0, -2.0, -0.5}), vec({1.0, 0.5, 3.0}));
    const auto o = diagonal_quadratic(h, b);
    const auto res = noesc::run_pgd(box.project(vec({lin(rng), lin(rng), lin(rng)})), o, box, cfg);
    for (std::size_t k = 0; k + 1 < res.iterates.size(); ++k) {
      const double dx2 = (res.iterates[k + 1] - res.iterates[k]).squaredNorm();
      EXPECT_LE(res.values[k + 1] - res.values[k], -eps * dx2 + 1e-12);
      EXPECT_TRUE(box.contains(res.iterates[k + 1]));
    }
  }
}

TEST(RunPgd, BacktrackingRecoversFromTooLargeStep) {
  PgdConfig cfg;
  cfg.step = 10.0;
  cfg.step_rule = Backtracking{};
  cfg.eps0 = 1e-6;
  const auto o = diagonal_quadratic(vec({4.0, 1.0}), vec({-1.0, 2.0}));
  const auto res = noesc::run_pgd(vec({3.0, 3.0}), o, ConstraintSet::unconstrained(2), cfg);
  EXPECT_TRUE(res.converged());
  EXPECT_NEAR(res.final_iterate()(0), 0.25, 1e-6);
  EXPECT_NEAR(res.final_iterate()(1), -2.0, 1e-6);
  for (std::size_t k = 0; k + 1 < res.values.size(); ++k) {
    EXPECT_LE(res.values[k + 1], res.values[k]);
  }
}
