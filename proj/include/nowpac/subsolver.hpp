#pragma once

#include <variant>
#include <vector>

#include "nowpac/feasibility.hpp"
#include "nowpac/surrogate.hpp"

namespace nowpac {

/// Linear objective <g, d>, used by the criticality measure.
struct LinearObjective {
  Vector g;
};

/// min objective(s) over { s : m_ci(s) + h(s) <= 0 for all i, |s| <= radius }.
struct SubproblemSpec {
  std::variant<QuadraticModel, LinearObjective> objective;
  std::vector<QuadraticModel> constraint_models;
  IbpParams ibp;
  double radius = 1.0;
};

struct SubproblemSolution {
  Vector s;
  double objective_value = 0.0;  // objective(s) - objective(0)
  std::vector<int> active_set;   // constraints within 1e-8 of zero
  bool converged = false;
};

inline constexpr double kFeasibilitySlack = 1e-10;

/// Approximate local minimizer of the objective model over the approximated
/// feasible domain intersected with the trust ball. Never worse than s = 0.
/// Throws SubproblemInfeasibleStart if s = 0 violates a constraint by more
/// than the slack.
SubproblemSolution solve_trial_step(const SubproblemSpec& spec);

/// Minimizer of <g, d> over the same set; see criticality_measure.
SubproblemSolution solve_linear_subproblem(const Vector& g, const SubproblemSpec& spec);

/// alpha(rho) = |min <g, d>| / rho over the approximated feasible domain and
/// the trust ball of radius rho = spec.radius.
double solve_criticality(const Vector& g, const SubproblemSpec& spec);

}  // namespace nowpac
