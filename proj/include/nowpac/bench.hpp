#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nowpac/blackbox.hpp"
#include "nowpac/core.hpp"

namespace nowpac {

/// f = (x2 - x1^2)^2 + (x1 - 1)^2, unconstrained, x0 = (1.5, 1.5).
BlackBoxProblem rosenbrock();

/// f = -exp(x'Dx), D = diag(1..5), with sin(|x|^2) <= 1/2 and
/// |x - (3/8) e5| <= 3/8, x0 = (0.1, ..., 0.1).
BlackBoxProblem aniso_exp();

/// Problems of the Hock-Schittkowski collection, constraints rewritten as
/// c(x) <= 0. Supported ids: 29, 43, 100, 113, 227, 228, 264, 285.
BlackBoxProblem hs_problem(int id);
std::vector<int> hs_problem_ids();

/// Looks up "rosenbrock", "aniso_exp" or "hsNNN". Throws UnknownProblemId.
BlackBoxProblem problem_by_name(const std::string& name);
std::vector<std::string> problem_names();

/// |min <grad f(x), d>| over { d : c(x+d) + eps_b |d|^(2/(1+p)) <= 0, |d| <= 1 }
/// on the true functions. Uses a barrier method with finite-difference
/// Hessians of the analytic gradients.
double exact_criticality_oracle(const BlackBoxProblem& problem, const Vector& x, double eps_b,
                                double p = 0.0);

/// The same quantity by exhaustive search on a grid of the unit disk with the
/// given spacing (n <= 2 only).
double grid_criticality_oracle(const BlackBoxProblem& problem, const Vector& x, double eps_b,
                               double p = 0.0, double spacing = 1e-3);

struct NoiseSpec {
  double delta_f = 0.0;
  double delta_c = 0.0;
};

struct BenchmarkCase {
  std::string name;
  BlackBoxProblem problem;
  double sc = 1e-5;                 // rho_min
  std::optional<NoiseSpec> noise;
  int replicates = 1;
  std::uint64_t seed = 0;           // replicate i uses seed + i

  /// Throws InvalidConfig.
  void validate() const;
};

struct BenchmarkResult {
  std::string case_name;
  double sc = 0.0;
  double n_evals = 0.0;
  std::optional<double> d_x;
  std::optional<double> d_f_abs;
  std::optional<double> d_f_rel;
  std::optional<double> n_saved;
  std::string terminated_by;
  std::uint64_t seed = 0;
  bool feasible_history = true;  // every accepted iterate satisfies the true constraints
};

struct BenchmarkOptions {
  std::string history_dir;  // empty: no history files
  int threads = 1;
};

/// One result per replicate. Noise cases also run the twin without early
/// termination to fill n_saved.
std::vector<BenchmarkResult> run_benchmark(const BenchmarkCase& bench_case,
                                           const SolverConfig& config,
                                           const BenchmarkOptions& options = {});

/// Means over replicates; terminated_by becomes the most frequent reason.
BenchmarkResult aggregate(const std::vector<BenchmarkResult>& results);

enum class TableFormat { csv, markdown };

/// Columns case,SC,n_evals,d_x,d_f_abs,d_f_rel,n_saved,terminated_by.
/// Throws EmptyResults.
std::string emit_table(const std::vector<BenchmarkResult>& results, TableFormat format);

/// Distance measures of a point against the problem's known optimum.
struct ErrorMeasures {
  std::optional<double> d_x;
  std::optional<double> d_f_abs;
  std::optional<double> d_f_rel;
};
ErrorMeasures error_measures(const BlackBoxProblem& problem, const Vector& x);

/// `<case>_<sc>_<seed>.hist`.
std::string history_file_name(const std::string& case_name, double sc, std::uint64_t seed);

}  // namespace nowpac
