#include "nowpac/subsolver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "nowpac/ball_quadratic.hpp"
#include "nowpac/barrier.hpp"
#include "nowpac/errors.hpp"

namespace nowpac {

namespace {

/// The subproblem in scaled coordinates u = s / radius, |u| <= 1.
struct ScaledProblem {
  Eigen::Index n = 0;
  double rho = 1.0;
  Vector g;  // objective gradient at 0 (original units)
  Matrix H;
  std::vector<QuadraticModel> cons;
  IbpParams ibp;

  double objective(const Vector& u) const {
    const Vector s = rho * u;
    return g.dot(s) + 0.5 * s.dot(H * s);
  }
  SmoothEval objective_eval(const Vector& u) const {
    const Vector s = rho * u;
    return {g.dot(s) + 0.5 * s.dot(H * s), rho * (g + H * s), rho * rho * H};
  }
  double constraint(std::size_t i, const Vector& u) const {
    const Vector s = rho * u;
    return cons[i].value(s) + ibp_value(s, ibp);
  }
  SmoothEval constraint_eval(std::size_t i, const Vector& u) const {
    const Vector s = rho * u;
    return {cons[i].value(s) + ibp_value(s, ibp),
            rho * (cons[i].gradient(s) + ibp_gradient(s, ibp)),
            rho * rho * (cons[i].H + ibp_hessian(s, ibp))};
  }
  double max_violation(const Vector& u) const {
    double v = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cons.size(); ++i) v = std::max(v, constraint(i, u));
    return v;
  }
  /// Typical magnitude of constraint changes over the unit ball.
  double constraint_scale() const {
    double scale = 0.0;
    for (const auto& c : cons) {
      scale = std::max({scale, rho * c.g.norm(), rho * rho * c.H.norm()});
    }
    return std::max({scale, ibp.eps_b_k * rho * rho, 1e-300});
  }
  double objective_scale() const { return std::max({rho * g.norm(), rho * rho * H.norm(), 1e-300}); }

  BarrierProblem barrier() const {
    BarrierProblem bp;
    bp.objective = {[this](const Vector& u) { return objective(u); },
                    [this](const Vector& u) { return objective_eval(u); }};
    for (std::size_t i = 0; i < cons.size(); ++i) {
      bp.constraints.push_back({[this, i](const Vector& u) { return constraint(i, u); },
                                [this, i](const Vector& u) { return constraint_eval(i, u); }});
    }
    bp.constraints.push_back(ball_constraint(n));
    bp.objective_scale = objective_scale();
    return bp;
  }

  static SmoothFunction ball_constraint(Eigen::Index n) {
    return {[](const Vector& z) { return z.squaredNorm() - 1.0; },
            [n](const Vector& z) {
              return SmoothEval{z.squaredNorm() - 1.0, 2.0 * z, 2.0 * Matrix::Identity(n, n)};
            }};
  }
};

/// A strictly interior point of the scaled feasible set near u = 0, or an
/// empty vector when the interior looks empty.
Vector interior_start(const ScaledProblem& sp, const BarrierProblem& bp, int max_steps) {
  const double cscale = sp.constraint_scale();
  return find_interior_point(bp.constraints, Vector::Zero(sp.n), cscale, 1e-6 * cscale, max_steps);
}

/// Largest strictly feasible point on the segment from `from` toward `to`.
Vector ray_start(const BarrierProblem& bp, const Vector& from, Vector to) {
  const double norm = to.norm();
  if (norm >= 0.999) to *= 0.999 / norm;
  for (int k = 20; k >= 1; --k) {
    const Vector cand = from + (static_cast<double>(k) / 20.0) * (to - from);
    if (strictly_feasible(bp, cand)) return cand;
  }
  return Vector();
}

SubproblemSolution solve_scaled(const ScaledProblem& sp) {
  const Eigen::Index n = sp.n;
  const Vector zero = Vector::Zero(n);
  const int max_steps = 200 * static_cast<int>(n);

  for (std::size_t i = 0; i < sp.cons.size(); ++i) {
    const double v0 = sp.constraint(i, zero);
    if (v0 > kFeasibilitySlack) {
      throw SubproblemInfeasibleStart("constraint model " + std::to_string(i) +
                                      " is violated at s = 0 (value " + std::to_string(v0) + ")");
    }
  }

  auto finish = [&](const Vector& u, bool converged) {
    SubproblemSolution sol;
    sol.s = sp.rho * u;
    const double norm = sol.s.norm();
    if (norm > sp.rho) sol.s *= sp.rho / norm;
    sol.objective_value = sp.objective(sol.s / sp.rho);
    sol.converged = converged;
    for (std::size_t i = 0; i < sp.cons.size(); ++i) {
      if (std::abs(sp.constraint(i, sol.s / sp.rho)) <= 1e-8) sol.active_set.push_back(static_cast<int>(i));
    }
    return sol;
  };

  if (sp.g.norm() == 0.0 && sp.H.norm() == 0.0) return finish(zero, true);

  // global minimizer over the ball; optimal if it satisfies the constraints
  const BallMinimum trs = minimize_quadratic_on_ball(sp.rho * sp.g, sp.rho * sp.rho * sp.H, 1.0);
  if (sp.cons.empty() || sp.max_violation(trs.s) <= 0.0) {
    if (trs.value <= 0.0) return finish(trs.s, trs.exact);
    return finish(zero, trs.exact);
  }

  const BarrierProblem bp = sp.barrier();
  const Vector u0 = interior_start(sp, bp, max_steps);
  if (u0.size() == 0) return finish(zero, false);

  std::vector<Vector> starts{u0};
  auto add_start = [&](const Vector& target) {
    Vector cand = ray_start(bp, u0, target);
    if (cand.size() == 0) return;
    for (const auto& s : starts) {
      if ((s - cand).norm() <= 1e-9) return;
    }
    starts.push_back(std::move(cand));
  };
  add_start(trs.s);
  if (sp.g.norm() > 0.0) add_start(-sp.g.normalized());
  if (sp.H.norm() > 0.0) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sp.H);
    if (eig.info() == Eigen::Success) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (eig.eigenvalues()[j] >= 0.0) break;
        add_start(eig.eigenvectors().col(j));
        add_start(-eig.eigenvectors().col(j));
      }
    }
  }

  BarrierOptions opts;
  opts.max_steps = max_steps;
  Vector best = zero;
  double best_value = 0.0;
  bool best_converged = false;
  bool any_converged = false;
  for (const auto& start : starts) {
    const BarrierResult res = minimize_with_barrier(bp, start, opts);
    any_converged = any_converged || res.converged;
    if (res.objective < best_value && sp.max_violation(res.z) <= 1e-8 &&
        res.z.squaredNorm() <= 1.0 + 1e-10) {
      best_value = res.objective;
      best = res.z;
      best_converged = res.converged;
    }
  }
  if (best_value == 0.0) best_converged = any_converged;
  return finish(best, best_converged);
}

ScaledProblem make_scaled(const Vector& g, const Matrix& H, const SubproblemSpec& spec) {
  if (!(spec.radius > 0.0)) throw InvalidConfig("subproblem radius must be positive");
  spec.ibp.validate();
  ScaledProblem sp;
  sp.n = g.size();
  sp.rho = spec.radius;
  sp.g = g;
  sp.H = H;
  sp.cons = spec.constraint_models;
  sp.ibp = spec.ibp;
  for (const auto& c : sp.cons) {
    if (c.g.size() != sp.n) throw DimensionMismatch("constraint model dimension mismatch");
  }
  return sp;
}

}  // namespace

SubproblemSolution solve_trial_step(const SubproblemSpec& spec) {
  return std::visit(
      [&](const auto& obj) {
        using T = std::decay_t<decltype(obj)>;
        if constexpr (std::is_same_v<T, QuadraticModel>) {
          return solve_scaled(make_scaled(obj.g, obj.H, spec));
        } else {
          const auto n = obj.g.size();
          return solve_scaled(make_scaled(obj.g, Matrix::Zero(n, n), spec));
        }
      },
      spec.objective);
}

SubproblemSolution solve_linear_subproblem(const Vector& g, const SubproblemSpec& spec) {
  const auto n = g.size();
  return solve_scaled(make_scaled(g, Matrix::Zero(n, n), spec));
}

double solve_criticality(const Vector& g, const SubproblemSpec& spec) {
  const SubproblemSolution sol = solve_linear_subproblem(g, spec);
  return std::abs(std::min(sol.objective_value, 0.0)) / spec.radius;
}

}  // namespace nowpac
