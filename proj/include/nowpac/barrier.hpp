#pragma once

#include <functional>
#include <vector>

#include "nowpac/blackbox.hpp"

namespace nowpac {

struct SmoothEval {
  double value = 0.0;
  Vector gradient;
  Matrix hessian;
};

/// A twice differentiable function given by a value-only callable (used in
/// line searches) and a full evaluation.
struct SmoothFunction {
  std::function<double(const Vector&)> value;
  std::function<SmoothEval(const Vector&)> eval;
};

/// min objective(z) s.t. constraints_j(z) < 0.
struct BarrierProblem {
  SmoothFunction objective;
  std::vector<SmoothFunction> constraints;
  double objective_scale = 1.0;  // typical magnitude of objective changes
};

struct BarrierOptions {
  double mu_initial = 1e-1;
  double mu_factor = 0.2;
  double mu_final = 1e-12;
  int max_steps = 400;
  /// Optional early exit, checked after every accepted step.
  std::function<bool(const Vector&)> stop;
};

struct BarrierResult {
  Vector z;
  double objective = 0.0;
  bool converged = false;
  bool stopped_early = false;
  int steps = 0;
};

/// Primal log-barrier method with eigenvalue-modified Newton steps and
/// negative-curvature moves. `start` must be strictly feasible.
BarrierResult minimize_with_barrier(const BarrierProblem& problem, const Vector& start,
                                    const BarrierOptions& options = {});

/// True iff every constraint is strictly negative at z.
bool strictly_feasible(const BarrierProblem& problem, const Vector& z);

/// Phase-1 search: minimizes t subject to c_j(z) - t < 0 starting from
/// `start` and stops as soon as every c_j(z) < -target. `scale` is the typical
/// magnitude of constraint changes. Returns an empty vector on failure.
Vector find_interior_point(const std::vector<SmoothFunction>& constraints, const Vector& start,
                           double scale, double target, int max_steps);

}  // namespace nowpac
