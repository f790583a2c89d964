#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "momlab/error.hpp"
#include "momlab/optim.hpp"
#include "momlab/problems.hpp"
#include "momlab/rng.hpp"
#include "momlab/theory.hpp"
#include "oracles.hpp"

using namespace momlab;

namespace {

GradientSample exact(Vector v) { return {std::move(v), GradientKind::exact, std::nullopt}; }

double rel_gap(std::span<const double> a, std::span<const double> b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num = std::max(num, std::abs(a[i] - b[i]));
    den = std::max(den, std::abs(b[i]));
  }
  return num / std::max(den, 1e-300);
}

}  // namespace

TEST(AsgStep, SingleExactGradientStep) {
  OptState s = OptState::start({5.0});
  const OptimizerParams p{1.0, 0.0};
  const Vector y = peek_y(s, p);
  EXPECT_EQ(y, Vector{5.0});
  s = asg_step(s, exact(y), p);  // H = I, b = 0
  EXPECT_EQ(s.x_curr, Vector{0.0});
  EXPECT_EQ(s.k, 1u);
}

TEST(AsgStep, ZeroGradientAdvancesByMomentum) {
  OptState s;
  s.x_curr = {2.0, 1.0};
  s.x_prev = {1.0, 1.5};
  s.k = 3;
  const OptimizerParams p{0.5, 0.4};
  const OptState n = asg_step(s, exact({0.0, 0.0}), p);
  EXPECT_DOUBLE_EQ(n.x_curr[0], 2.0 + 0.4 * 1.0);
  EXPECT_DOUBLE_EQ(n.x_curr[1], 1.0 + 0.4 * -0.5);
  EXPECT_EQ(n.x_prev, s.x_curr);
}

TEST(AsgStep, RejectsBadGradients) {
  const OptState s = OptState::start({1.0, 2.0});
  EXPECT_THROW(asg_step(s, exact({1.0}), {0.1, 0.0}), DimensionMismatch);
  EXPECT_THROW(asg_step(s, exact({1.0, std::numeric_limits<double>::quiet_NaN()}), {0.1, 0.0}),
               PreconditionError);
}

TEST(AsgStep, NesterovRateOnQuadratic) {
  const SpectrumBounds b = SpectrumBounds::from_condition(4.0, 1.0);
  const Quadratic q = worst_case_quadratic(20, b.mu, b.L);
  RunOptions ro;
  ro.iterations = 200;
  ro.x0 = Vector(20, 1.0);
  const Trajectory t = run(q, {}, nesterov_defaults(b), ro);
  std::vector<double> head;
  for (double d : t.distances)
    if (d > 1e-13) head.push_back(d);
  ASSERT_GT(head.size(), 20u);
  const double rate = std::exp(oracle::log_slope(head));
  EXPECT_GE(rate, 0.48);
  EXPECT_LE(rate, 0.56);
}

TEST(StateSpaceStep, TrivialCases) {
  StateSpaceVec z{{1.0, -2.0}, {0.0, 0.0}};
  const StateSpaceVec a = state_space_step(z, exact({0.0, 0.0}), {0.5, 0.0});
  EXPECT_EQ(a.r, z.r);
  EXPECT_EQ(a.v, (Vector{0.0, 0.0}));
  const StateSpaceVec c = state_space_step(z, exact({3.0, 3.0}), {0.0, 0.7});
  EXPECT_EQ(c.r, z.r);
}

TEST(StateSpaceStep, MatchesAsgOnRandomProblems) {
  Rng master(2024);
  for (int problem = 0; problem < 20; ++problem) {
    const std::size_t d = 2 + master.uniform_index(7);
    const double Q = 1.0 + 50.0 * master.uniform();
    const Quadratic q = random_least_squares(master.next_u64(), 10 * d, d, Q);
    const OptimizerParams p{(1.0 + master.uniform()) / q.bounds.L / 2.0,
                            -0.5 + 1.4 * master.uniform()};
    const bool noisy = problem % 2 == 1;
    Rng noise_a(problem), noise_b(problem);

    Vector x0(d);
    for (double& v : x0) v = master.normal();
    OptState s = OptState::start(x0);
    StateSpaceVec z = StateSpaceVec::start(x0, q.x_star);
    for (int k = 0; k < 100; ++k) {
      const Vector y = peek_y(s, p);
      Vector y_ss(d);
      for (std::size_t i = 0; i < d; ++i) y_ss[i] = z.r[i] + q.x_star[i];
      ASSERT_LT(rel_gap(y_ss, y), 1e-9) << "problem " << problem << " k=" << k;
      const GradientSample ga = noisy ? grad_gaussian(q, y, 0.1, noise_a) : grad_exact(q, y);
      const GradientSample gb = noisy ? grad_gaussian(q, y_ss, 0.1, noise_b) : grad_exact(q, y_ss);
      s = asg_step(s, ga, p);
      z = state_space_step(z, gb, p);
    }
  }
}

TEST(Run, DeterministicDecayOnWorstCase) {
  const SpectrumBounds b = SpectrumBounds::from_condition(32.0, 1.0);
  const Quadratic q = worst_case_quadratic(100, b.mu, b.L);
  RunOptions ro;
  ro.iterations = 500;
  const OptimizerParams p = nesterov_defaults(b);
  const Trajectory t = run(q, {}, p, ro);
  ASSERT_EQ(t.size(), 500u);
  EXPECT_FALSE(t.diverged());
  const double r = rho(b, p);
  EXPECT_LT(t.distances.back(), t.initial_distance * std::pow(r, 500) * 10 + 1e-14);
}

TEST(Run, SameSeedSameTrajectory) {
  const Quadratic q = worst_case_quadratic(10, 0.1, 1.0);
  RunOptions ro;
  ro.iterations = 300;
  ro.seed = 99;
  ro.record.per_coordinate = true;
  const OracleConfig oc{OracleKind::gaussian, 0.05, true};
  const Trajectory a = run(q, oc, {0.5, 0.6}, ro);
  const Trajectory b = run(q, oc, {0.5, 0.6}, ro);
  EXPECT_EQ(a.distances, b.distances);
  EXPECT_EQ(a.per_coordinate, b.per_coordinate);
  ro.seed = 100;
  EXPECT_NE(run(q, oc, {0.5, 0.6}, ro).distances, a.distances);
}

TEST(Run, MomentumFreePathMatchesPlainSgd) {
  const Quadratic q = random_least_squares(5, 30, 3, 6.0);
  const double alpha = 0.7 / q.bounds.L;
  RunOptions ro;
  ro.iterations = 50;
  ro.x0 = {1.0, -1.0, 2.0};
  const Trajectory t = run(q, {}, {alpha, 0.0}, ro);
  Vector x = ro.x0;
  for (std::size_t k = 0; k < 50; ++k) {
    EXPECT_DOUBLE_EQ(t.distances[k], norm2(subtract(x, q.x_star)));
    const Vector g = q.H.apply(x);
    for (std::size_t i = 0; i < 3; ++i) x[i] -= alpha * (g[i] - q.b[i]);
  }
}

TEST(Run, OneIterationOneGradient) {
  const Quadratic q = worst_case_quadratic(4, 0.1, 1.0);
  std::size_t calls = 0;
  RunOptions ro;
  ro.iterations = 1;
  ro.record.gradients = true;
  ro.observer = [&](std::size_t, std::span<const double>) { ++calls; };
  const Trajectory t = run(q, {}, {0.5, 0.3}, ro);
  EXPECT_EQ(calls, 1u);
  EXPECT_EQ(t.gradients.size(), 1u);
  EXPECT_EQ(t.distances.size(), 1u);
}

TEST(Run, DivergenceGuardFires) {
  const Quadratic q = worst_case_quadratic(4, 0.1, 1.0);
  RunOptions ro;
  ro.iterations = 10000;
  ro.x0 = Vector(4, 1.0);
  const Trajectory t = run(q, {}, {3.0, 0.0}, ro);
  ASSERT_TRUE(t.diverged());
  EXPECT_EQ(t.distances.size(), *t.diverged_at);
  EXPECT_GT(t.distances.back(), 0.0);
}

TEST(Run, StateNormsRespectGelfandEnvelope) {
  const SpectrumBounds b = SpectrumBounds::from_condition(16.0, 1.0);
  const Quadratic q = worst_case_quadratic(12, b.mu, b.L);
  const OptimizerParams p{0.8, 0.5};
  RunOptions ro;
  ro.iterations = 400;
  ro.x0 = Vector(12, 1.0);
  ro.record.state_norms = true;
  const Trajectory t = run(q, {}, p, ro);
  const double env = rho(b, p) + 0.01;
  std::size_t usable = 0;
  while (usable < t.state_norms.size() && t.state_norms[usable] > 1e-10 * t.state_norms[0]) ++usable;
  ASSERT_GT(usable, 40u);
  double c = 0.0;
  for (std::size_t k = 0; k < usable; ++k)
    c = std::max(c, t.state_norms[k] / std::pow(env, static_cast<double>(k)));
  // The envelope constant is attained early and never needs to grow later.
  double late = 0.0;
  for (std::size_t k = usable / 2; k < usable; ++k)
    late = std::max(late, t.state_norms[k] / std::pow(env, static_cast<double>(k)));
  EXPECT_LT(late, c);
}

TEST(Run, MinibatchRecordsBatches) {
  const FiniteSumProblem fs = counterexample_finite_sum(5, 0.05, 100.0);
  RunOptions ro;
  ro.iterations = 40;
  ro.seed = 3;
  ro.record.batches = true;
  const Trajectory t = run(fs, {OracleKind::minibatch, 0.0, true}, {0.01, 0.5}, ro);
  ASSERT_EQ(t.sampled_batches.size(), 40u);
  for (std::size_t k = 1; k < 40; ++k) EXPECT_NE(t.sampled_batches[k], t.sampled_batches[k - 1]);
  EXPECT_THROW(run(fs.aggregate, {OracleKind::minibatch, 0.0, true}, {0.01, 0.5}, ro),
               UnsupportedProblem);
}

TEST(Run, OracleErrorsCarryIteration) {
  const Quadratic q = worst_case_quadratic(4, 0.1, 1.0);
  RunOptions ro;
  ro.iterations = 5;
  try {
    run(q, {OracleKind::gaussian, -1.0, true}, {0.5, 0.1}, ro);
    FAIL() << "negative sigma accepted";
  } catch (const IterationError& e) {
    EXPECT_EQ(e.iteration(), 1u);
  }
  ro.x0 = {1.0};
  EXPECT_THROW(run(q, {}, {0.5, 0.1}, ro), DimensionMismatch);
}
