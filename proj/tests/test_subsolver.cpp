#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "nowpac/ball_quadratic.hpp"
#include "nowpac/barrier.hpp"
#include "nowpac/errors.hpp"
#include "nowpac/subsolver.hpp"
#include "test_util.hpp"

using namespace nowpac;
using nowpac::test::vec;

namespace {

QuadraticModel linear(double c0, const Vector& g) {
  return {c0, g, Matrix::Zero(g.size(), g.size())};
}

SubproblemSpec spec_for(QuadraticModel objective, std::vector<QuadraticModel> cons, double eps,
                        double radius) {
  SubproblemSpec spec;
  spec.objective = std::move(objective);
  spec.constraint_models = std::move(cons);
  spec.ibp = {eps, eps, 0.0};
  spec.radius = radius;
  return spec;
}

/// Brute-force minimum of the subproblem on a square grid over the ball.
double grid_minimum(const SubproblemSpec& spec, double spacing) {
  const auto& obj = std::get<QuadraticModel>(spec.objective);
  const double r = spec.radius;
  const int steps = static_cast<int>(std::ceil(r / spacing));
  double best = 0.0;
  Vector s(2);
  for (int i = -steps; i <= steps; ++i) {
    s[0] = i * spacing;
    for (int j = -steps; j <= steps; ++j) {
      s[1] = j * spacing;
      if (s.squaredNorm() > r * r) continue;
      if ((model_constraint_values(spec.constraint_models, s, spec.ibp).array() > 0.0).any()) continue;
      best = std::min(best, obj.value(s) - obj.c0);
    }
  }
  return best;
}

}  // namespace

TEST_CASE("ball minimizer: interior, boundary and hard case") {
  // convex with interior minimum
  Matrix H = 2.0 * Matrix::Identity(2, 2);
  BallMinimum m = minimize_quadratic_on_ball(vec({-1.0, 0.0}), H, 1.0);
  CHECK((m.s - vec({0.5, 0.0})).norm() < 1e-12);
  CHECK(m.value == doctest::Approx(-0.25));
  // boundary
  m = minimize_quadratic_on_ball(vec({-4.0, 0.0}), H, 1.0);
  CHECK((m.s - vec({1.0, 0.0})).norm() < 1e-10);
  // indefinite, hard case: g orthogonal to the most negative eigenvector
  H << 1.0, 0.0, 0.0, -2.0;
  m = minimize_quadratic_on_ball(vec({0.5, 0.0}), H, 1.0);
  CHECK(m.s.norm() == doctest::Approx(1.0).epsilon(1e-10));
  // closed form: s1 = -0.5 / (1 + 2) , s2 = +-sqrt(1 - s1^2)
  CHECK(m.s[0] == doctest::Approx(-1.0 / 6.0).epsilon(1e-8));
  const double expected = 0.5 * m.s[0] + 0.5 * (m.s[0] * m.s[0] - 2.0 * m.s[1] * m.s[1]);
  CHECK(m.value == doctest::Approx(expected).epsilon(1e-12));
  CHECK(m.value == doctest::Approx(-0.5 / 6.0 + 0.5 * (1.0 / 36.0 - 2.0 * 35.0 / 36.0)).epsilon(1e-8));
}

TEST_CASE("ball minimizer against sampling") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    Matrix H(2, 2);
    H << u(rng), u(rng), 0, u(rng);
    H(1, 0) = H(0, 1);
    const Vector g = vec({u(rng), u(rng)});
    const BallMinimum m = minimize_quadratic_on_ball(g, H, 0.7);
    CHECK(m.s.norm() <= 0.7 + 1e-12);
    double best = 0.0;
    for (int a = 0; a <= 100; ++a) {
      for (int k = 0; k < 360; ++k) {
        const double r = 0.7 * a / 100.0;
        const Vector s = vec({r * std::cos(k * M_PI / 180), r * std::sin(k * M_PI / 180)});
        best = std::min(best, g.dot(s) + 0.5 * s.dot(H * s));
      }
    }
    CHECK(m.value <= best + 1e-12);
    CHECK(m.value >= best - 1e-2);
  }
}

TEST_CASE("barrier method on a convex problem with a known solution") {
  // min z1 + z2 s.t. |z|^2 <= 1: z* = -(1,1)/sqrt(2)
  BarrierProblem bp;
  bp.objective = {[](const Vector& z) { return z.sum(); },
                  [](const Vector& z) { return SmoothEval{z.sum(), Vector::Ones(2), Matrix::Zero(2, 2)}; }};
  bp.constraints.push_back({[](const Vector& z) { return z.squaredNorm() - 1.0; },
                            [](const Vector& z) {
                              return SmoothEval{z.squaredNorm() - 1.0, 2.0 * z, 2.0 * Matrix::Identity(2, 2)};
                            }});
  const BarrierResult r = minimize_with_barrier(bp, Vector::Zero(2));
  CHECK(r.converged);
  CHECK((r.z + vec({1, 1}) / std::sqrt(2.0)).norm() < 1e-5);
  CHECK(strictly_feasible(bp, r.z));

  const Vector interior = find_interior_point(bp.constraints, vec({3.0, 0.0}), 1.0, 1e-3, 200);
  REQUIRE(interior.size() == 2);
  CHECK(interior.squaredNorm() < 1.0 - 1e-3);
}

TEST_CASE("trial step: linear model over the ball") {
  const auto spec = spec_for(linear(0.0, vec({1, 0})), {}, 10.0, 0.1);
  const SubproblemSolution sol = solve_trial_step(spec);
  CHECK((sol.s - vec({-0.1, 0})).norm() < 1e-10);
  CHECK(sol.objective_value == doctest::Approx(-0.1).epsilon(1e-10));
}

TEST_CASE("trial step: offset constraint not binding") {
  const auto spec = spec_for(linear(0.0, vec({1, 0})), {linear(-0.05, vec({1, 0}))}, 10.0, 0.1);
  const SubproblemSolution sol = solve_trial_step(spec);
  CHECK((sol.s - vec({-0.1, 0})).norm() < 1e-6);
  CHECK(sol.objective_value == doctest::Approx(-0.1).epsilon(1e-6));
}

TEST_CASE("trial step: offset constraint binding") {
  // s1 + 10 |s|^2 <= 0.05 is the disk of radius sqrt(0.0075) about (-0.05, 0)
  const auto spec = spec_for(linear(0.0, vec({1, 0})), {linear(-0.05, vec({1, 0}))}, 10.0, 0.5);
  const SubproblemSolution sol = solve_trial_step(spec);
  const double root = (-1.0 - std::sqrt(3.0)) / 20.0;
  CHECK(root == doctest::Approx(-0.0500 - std::sqrt(0.0075)).epsilon(1e-12));
  CHECK(sol.s[0] == doctest::Approx(root).epsilon(1e-5));
  CHECK(std::abs(sol.s[1]) < 1e-3);
  CHECK(sol.objective_value == doctest::Approx(grid_minimum(spec, 1e-4)).epsilon(1e-3));
  CHECK(sol.active_set == std::vector<int>{0});
}

TEST_CASE("trial step rejects an infeasible center") {
  const auto spec = spec_for(linear(0.0, vec({1, 0})), {linear(0.01, vec({1, 0}))}, 10.0, 0.1);
  CHECK_THROWS_AS(solve_trial_step(spec), SubproblemInfeasibleStart);
}

TEST_CASE("trial step is never worse than the center") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 30; ++t) {
    Matrix H(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j <= i; ++j) H(i, j) = H(j, i) = u(rng);
    QuadraticModel obj{0.0, vec({u(rng), u(rng), u(rng)}), H};
    QuadraticModel con{-0.01 - 0.1 * std::abs(u(rng)), vec({u(rng), u(rng), u(rng)}), 0.5 * H};
    const auto spec = spec_for(obj, {con}, 1.0 + 5.0 * std::abs(u(rng)), 0.2);
    const SubproblemSolution sol = solve_trial_step(spec);
    CHECK(sol.objective_value <= 0.0);
    CHECK(sol.s.norm() <= 0.2 * (1 + 1e-12));
    CHECK(model_constraint_values(spec.constraint_models, sol.s, spec.ibp)[0] <= 1e-8);
  }
}

TEST_CASE("criticality measure") {
  SubproblemSpec spec;
  spec.objective = LinearObjective{vec({3, 4})};
  spec.radius = 0.37;
  CHECK(solve_criticality(vec({3, 4}), spec) == doctest::Approx(5.0).epsilon(1e-10));
  CHECK(solve_criticality(vec({0, 0}), spec) == 0.0);

  SubproblemSpec boundary;
  boundary.objective = LinearObjective{vec({-1, 0})};
  boundary.constraint_models = {linear(0.0, vec({1, 0}))};
  boundary.ibp = {10.0, 10.0, 0.0};
  boundary.radius = 0.05;
  CHECK(solve_criticality(vec({-1, 0}), boundary) <= 1e-6);
}

TEST_CASE("subsolver matches a grid search on random 2-D problems") {
  std::mt19937_64 rng(2718);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 5; ++t) {
    Matrix H(2, 2);
    H << u(rng), u(rng), 0, u(rng);
    H(1, 0) = H(0, 1);
    const QuadraticModel obj{0.0, vec({u(rng), u(rng)}), 2.0 * H};
    Matrix Hc(2, 2);
    Hc << u(rng), u(rng), 0, u(rng);
    Hc(1, 0) = Hc(0, 1);
    const QuadraticModel con{-0.02 - 0.05 * std::abs(u(rng)), vec({u(rng), u(rng)}), Hc};
    const auto spec = spec_for(obj, {con}, 0.5 + 5.0 * std::abs(u(rng)), 0.1);
    const SubproblemSolution sol = solve_trial_step(spec);
    CHECK(std::abs(sol.objective_value - grid_minimum(spec, 2e-4)) <= 1e-3);
  }
}
