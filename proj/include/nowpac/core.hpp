#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nowpac/blackbox.hpp"
#include "nowpac/feasibility.hpp"
#include "nowpac/subsolver.hpp"
#include "nowpac/surrogate.hpp"

namespace nowpac {

/// Solver parameters. Defaults follow the published NOWPAC defaults where
/// those exist.
struct SolverConfig {
  double eps_b = 10.0;      // inner boundary path constant
  double eta_0 = 0.1;       // step rejection threshold
  double eta_1 = 0.7;       // step acceptance threshold
  double gamma = 0.8;       // radius decrease factor
  double gamma_inc = 2.0;   // radius increase factor
  double omega = 0.6;       // criticality decrease factor
  double eps_c = 1e-2;      // criticality threshold
  double mu = 1.0;          // rho <= mu * alpha in the criticality step
  double p = 0.0;           // inner boundary path order reduction
  double q = 0.0;           // step-size order reduction (only q = 0 is used)
  double rho_0 = 0.1;
  double rho_min = 1e-5;
  double rho_max = 1.0;
  double mu_1 = 1e-4;       // sufficient model decrease fraction (logged)
  long max_evals = 100000;
  double feasibility_margin = 0.0;
  int noise_window = 5;
  double tau_threshold = 1.0;
  int nc_limit = 1;
  bool early_termination = true;
  std::uint64_t seed = 0;

  // geometry and inner boundary path heuristics
  double scale_factor = 2.0;
  double lambda_threshold = 100.0;
  double eps_b_min_ratio = 1e-3;
  int infeasible_escalation = 3;
  double eps_b_max_ratio = 1e3;

  /// Throws InvalidConfig naming the offending field and its admissible range.
  void validate() const;
  GeometryOptions geometry() const { return {scale_factor, lambda_threshold, 0}; }
};

enum class StepStatus {
  successful,
  acceptable,
  rejected,
  infeasible_trial,
  criticality_shrink,
  noise_terminated,
};

const char* to_string(StepStatus status);

struct IterationRecord {
  int k = 0;
  Vector x;
  double f = 0.0;
  double rho = 0.0;
  double alpha = 0.0;
  std::optional<double> r_k;
  StepStatus status = StepStatus::rejected;
  std::vector<double> hessian_norms;
  long evals_so_far = 0;
  std::size_t set_size = 0;
  bool sufficient_decrease = true;
  bool subsolver_converged = true;
};

enum class NoiseClass { convergent, non_convergent, insufficient_data };

const char* to_string(NoiseClass c);

/// Hessian norms of each model collected at rejected steps, with the fitted
/// log-log growth slope tau.
struct NoiseIndicatorState {
  struct Sample {
    double rho;
    double hessian_norm;
  };
  std::vector<std::deque<Sample>> samples;  // one window per model
  std::vector<std::optional<double>> tau;
  int consecutive_nc = 0;
  NoiseClass last = NoiseClass::insufficient_data;
};

/// Least-squares slope of log |H| against log(1/rho); nullopt with fewer than
/// three samples or no spread in rho.
std::optional<double> regression_slope(const std::deque<NoiseIndicatorState::Sample>& samples);

/// Pushes the samples of a rejected step and reclassifies. Models flagged as
/// not significant (Hessian indistinguishable from round-off) do not
/// contribute a sample. Non-rejected steps leave the state untouched.
NoiseClass noise_indicator_update(NoiseIndicatorState& state, bool rejected, double rho,
                                  const std::vector<double>& hessian_norms,
                                  const SolverConfig& config,
                                  const std::vector<bool>& significant = {});

/// (f_old - f_new) / (m_old - m_new); -infinity when the model decrease is
/// not above the floor.
double acceptance_ratio(double f_old, double f_new, double m_old, double m_new,
                        double denom_floor = 1e-14);

/// Radius after a step with ratio r_k, capped at rho_max.
double trust_region_update(double rho, double r_k, const SolverConfig& config);

StepStatus classify_step(double r_k, const SolverConfig& config);

struct TrustRegionState {
  Vector x;
  double f = 0.0;
  Vector c;
  double rho = 0.0;
  IbpParams ibp;
  InterpolationSet set;
  ModelBundle models;
  int k = 0;
  double alpha = 0.0;
  int consecutive_infeasible = 0;
  std::vector<IterationRecord> history;
  NoiseIndicatorState noise;

  /// Appends a history record describing the current state.
  void record(StepStatus status, std::optional<double> r_k, long evals);
};

/// Evaluates x0, checks its feasibility and builds the initial fully linear
/// models. Throws InfeasibleStart.
TrustRegionState initialize(ProblemRef problem, const SolverConfig& config, EvalCounter& counter);

/// alpha_k(rho_k) for the current models.
double criticality_measure(const TrustRegionState& state);

/// Criticality step: while alpha <= eps_c and (models not fully linear or
/// rho > mu * alpha), shrink rho by omega and rebuild fully linear models.
/// Stops shrinking once rho < rho_min.
TrustRegionState criticality_step(TrustRegionState state, const SolverConfig& config,
                                  ProblemRef problem, EvalCounter& counter);

struct TrialStep {
  SubproblemSolution solution;
  double model_decrease = 0.0;
  bool sufficient_decrease = true;  // m(0) - m(s) >= mu_1 * alpha * rho
};

TrialStep compute_trial_step(const TrustRegionState& state, const SolverConfig& config);

struct TrialCheck {
  bool feasible = false;
  Evaluation value;
};

/// Evaluates the trial point. If a constraint exceeds -feasibility_margin the
/// radius shrinks by gamma, the point joins the interpolation set, the models
/// are made fully linear again and an infeasible_trial record is added.
TrialCheck check_trial_feasibility(TrustRegionState& state, const Vector& s, ProblemRef problem,
                                   EvalCounter& counter, const SolverConfig& config);

enum class Termination { rho_min, max_evals, noise_detected, improvement_stalled };

const char* to_string(Termination t);

struct OptimizationResult {
  Vector x_best;
  double f_best = 0.0;
  Vector c_best;
  std::vector<IterationRecord> history;
  Termination termination = Termination::rho_min;
  long evaluations = 0;
  double final_rho = 0.0;
  std::string message;
};

/// Runs the trust-region loop from problem.x0 until rho < rho_min, the
/// evaluation budget is spent, noise is detected (if early termination is on)
/// or geometry improvement stalls.
OptimizationResult optimize(ProblemRef problem, const SolverConfig& config);
OptimizationResult optimize(ProblemRef problem, const SolverConfig& config, EvalCounter& counter);

/// `key = value` lines for every configuration field.
void write_config(std::ostream& os, const SolverConfig& config, const std::string& prefix = "");

/// Config header followed by one line per record:
/// `k,status,rho,alpha,r_k,f,x_1..x_n,Hf_norm,Hc1_norm..`.
void write_history(std::ostream& os, const OptimizationResult& result,
                   const SolverConfig& config, const std::string& problem_name);

/// Sets a configuration field from its textual value, checking the type.
/// Throws InvalidConfig for unknown keys or malformed values; ranges are
/// checked by SolverConfig::validate.
void set_config_field(SolverConfig& config, const std::string& key, const std::string& value);

/// Names accepted by set_config_field.
std::vector<std::string> config_field_names();

}  // namespace nowpac
