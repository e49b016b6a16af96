#include "nowpac/barrier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

namespace nowpac {

bool strictly_feasible(const BarrierProblem& problem, const Vector& z) {
  for (const auto& c : problem.constraints) {
    const double v = c.value(z);
    if (!(v < 0.0)) return false;
  }
  return true;
}

namespace {

double barrier_value(const BarrierProblem& problem, const Vector& z, double mu) {
  double acc = problem.objective.value(z) / problem.objective_scale;
  for (const auto& c : problem.constraints) {
    const double v = c.value(z);
    if (!(v < 0.0)) return std::numeric_limits<double>::infinity();
    acc -= mu * std::log(-v);
  }
  return std::isfinite(acc) ? acc : std::numeric_limits<double>::infinity();
}

struct Local {
  Vector grad;
  Matrix hess;
};

Local barrier_derivatives(const BarrierProblem& problem, const Vector& z, double mu) {
  const SmoothEval obj = problem.objective.eval(z);
  Local out{obj.gradient / problem.objective_scale, obj.hessian / problem.objective_scale};
  for (const auto& c : problem.constraints) {
    const SmoothEval e = c.eval(z);
    const double inv = 1.0 / (-e.value);
    out.grad += mu * inv * e.gradient;
    out.hess += mu * (inv * e.hessian + inv * inv * e.gradient * e.gradient.transpose());
  }
  out.hess = 0.5 * (out.hess + out.hess.transpose());
  return out;
}

}  // namespace

BarrierResult minimize_with_barrier(const BarrierProblem& problem, const Vector& start,
                                    const BarrierOptions& options) {
  BarrierResult res;
  res.z = start;
  const auto dim = start.size();
  double mu = options.mu_initial;
  bool budget_hit = false;

  while (true) {
    // Newton iterations on the barrier function for the current mu
    for (int inner = 0; inner < 100; ++inner) {
      if (res.steps >= options.max_steps) {
        budget_hit = true;
        break;
      }
      const Local local = barrier_derivatives(problem, res.z, mu);
      Eigen::SelfAdjointEigenSolver<Matrix> eig(local.hess);
      if (eig.info() != Eigen::Success) {
        budget_hit = true;
        break;
      }
      const Vector& lam = eig.eigenvalues();
      const Matrix& V = eig.eigenvectors();
      const double lam_scale = std::max(1.0, lam.cwiseAbs().maxCoeff());
      const double floor = 1e-12 * lam_scale;
      Vector gv = V.transpose() * local.grad;
      Vector dv(dim);
      for (Eigen::Index i = 0; i < dim; ++i) dv[i] = -gv[i] / std::max(std::abs(lam[i]), floor);
      Vector d = V * dv;
      double decrement = -local.grad.dot(d);

      const bool negative_curvature = lam[0] < -1e-9 * lam_scale;
      if (decrement <= 1e-20) {
        if (!negative_curvature) break;
        // saddle: follow the most negative curvature direction
        d = V.col(0);
        if (local.grad.dot(d) > 0.0) d = -d;
        decrement = std::max(decrement, 0.0);
      }

      const double b0 = barrier_value(problem, res.z, mu);
      double t = 1.0;
      if (negative_curvature && decrement <= 1e-20) {
        // expand the step until the barrier stops decreasing
        t = 1e-3;
        double bt = barrier_value(problem, res.z + t * d, mu);
        while (t < 1e3) {
          const double b2 = barrier_value(problem, res.z + 2.0 * t * d, mu);
          if (!(b2 < bt)) break;
          t *= 2.0;
          bt = b2;
        }
        if (!(bt < b0)) break;
      } else {
        const double slope = local.grad.dot(d);
        while (t > 1e-20) {
          const double bt = barrier_value(problem, res.z + t * d, mu);
          if (bt <= b0 + 1e-4 * t * slope) break;
          t *= 0.5;
        }
        if (t <= 1e-20) break;
      }
      const Vector step = t * d;
      res.z += step;
      ++res.steps;
      if (options.stop && options.stop(res.z)) {
        res.stopped_early = true;
        res.objective = problem.objective.value(res.z);
        return res;
      }
      if (step.norm() <= 1e-15 * (1.0 + res.z.norm())) break;
    }
    if (budget_hit) break;
    if (mu <= options.mu_final) {
      res.converged = true;
      break;
    }
    mu = std::max(mu * options.mu_factor, options.mu_final);
  }
  res.objective = problem.objective.value(res.z);
  return res;
}

Vector find_interior_point(const std::vector<SmoothFunction>& constraints, const Vector& start,
                           double scale, double target, int max_steps) {
  const Eigen::Index n = start.size();
  auto max_value = [&](const Vector& z) {
    double v = -std::numeric_limits<double>::infinity();
    for (const auto& c : constraints) v = std::max(v, c.value(z));
    return v;
  };
  const double v0 = max_value(start);
  if (v0 < -target) return start;
  if (!std::isfinite(v0)) return Vector();

  // z = (x, t): min t s.t. c_j(x) - t < 0, t > -t_floor
  const double t0 = v0 + scale;
  const double t_floor = std::abs(t0) + 10.0 * scale;
  BarrierProblem bp;
  bp.objective = {[n](const Vector& z) { return z[n]; },
                  [n](const Vector& z) {
                    SmoothEval e{z[n], Vector::Zero(n + 1), Matrix::Zero(n + 1, n + 1)};
                    e.gradient[n] = 1.0;
                    return e;
                  }};
  for (const auto& c : constraints) {
    bp.constraints.push_back({[&c, n](const Vector& z) { return c.value(z.head(n)) - z[n]; },
                              [&c, n](const Vector& z) {
                                const SmoothEval ce = c.eval(z.head(n));
                                SmoothEval e{ce.value - z[n], Vector::Zero(n + 1),
                                             Matrix::Zero(n + 1, n + 1)};
                                e.gradient.head(n) = ce.gradient;
                                e.gradient[n] = -1.0;
                                e.hessian.topLeftCorner(n, n) = ce.hessian;
                                return e;
                              }});
  }
  bp.constraints.push_back({[n, t_floor](const Vector& z) { return -z[n] - t_floor; },
                            [n, t_floor](const Vector& z) {
                              SmoothEval e{-z[n] - t_floor, Vector::Zero(n + 1),
                                           Matrix::Zero(n + 1, n + 1)};
                              e.gradient[n] = -1.0;
                              return e;
                            }});
  bp.objective_scale = scale;

  Vector z0(n + 1);
  z0.head(n) = start;
  z0[n] = t0;
  BarrierOptions opts;
  opts.max_steps = max_steps;
  opts.mu_final = 1e-14;
  opts.stop = [&](const Vector& z) { return max_value(z.head(n)) < -target; };
  const BarrierResult res = minimize_with_barrier(bp, z0, opts);
  const Vector x = res.z.head(n);
  if (max_value(x) < 0.0) return x;
  return Vector();
}

}  // namespace nowpac
