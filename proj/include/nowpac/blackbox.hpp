#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace nowpac {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Objective value and constraint values c_1..c_r at one point.
struct Evaluation {
  double f = 0.0;
  Vector c;
};

/// Analytic first derivatives; columns of `dc` are the constraint gradients.
struct Gradients {
  Vector df;
  Matrix dc;  // n x r
};

struct KnownOptimum {
  Vector x;
  double f = 0.0;
};

struct Box {
  Vector lower;
  Vector upper;
};

/// An objective f and inequality constraints c_i(x) <= 0 behind a callable.
///
/// `analytic_grad` is only consulted by benchmark diagnostics; the solver never
/// calls it. `domain` documents where the problem is defined and is not
/// enforced by the solver.
struct BlackBoxProblem {
  std::string name;
  int n = 0;
  int r = 0;
  std::function<Evaluation(const Vector&)> eval;
  std::function<Gradients(const Vector&)> analytic_grad;
  Vector x0;
  std::optional<KnownOptimum> known_optimum;
  std::optional<Box> domain;

  bool has_gradients() const { return static_cast<bool>(analytic_grad); }
};

/// Adds independent Uniform[-delta, delta] noise to every output of every
/// evaluation. The k-th draw depends only on (seed, k).
class NoisyProblem {
 public:
  NoisyProblem(BlackBoxProblem inner, double delta_f_max, double delta_c_max,
               std::uint64_t seed);

  const BlackBoxProblem& inner() const { return inner_; }
  double delta_f_max() const { return delta_f_max_; }
  double delta_c_max() const { return delta_c_max_; }
  std::uint64_t seed() const { return seed_; }

  /// Evaluates the inner problem and perturbs the result. Advances the stream.
  Evaluation sample(const Vector& x);

  /// Restarts the noise stream from the seed.
  void reset();

 private:
  double draw(double half_width);

  BlackBoxProblem inner_;
  double delta_f_max_;
  double delta_c_max_;
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

struct EvalRecord {
  Vector x;
  double f = 0.0;
  Vector c;
};

/// Counts evaluations and keeps a log of every one of them.
class EvalCounter {
 public:
  std::size_t count() const { return log_.size(); }
  const std::vector<EvalRecord>& log() const { return log_; }
  void record(const Vector& x, const Evaluation& e) { log_.push_back({x, e.f, e.c}); }

  /// Writes `k,x_1,...,x_n,f,c_1,...,c_r` lines with 17 significant digits.
  void write(std::ostream& os) const;

 private:
  std::vector<EvalRecord> log_;
};

/// Non-owning handle over either kind of problem.
class ProblemRef {
 public:
  ProblemRef(const BlackBoxProblem& p) : target_(&p) {}  // NOLINT
  ProblemRef(NoisyProblem& p) : target_(&p) {}           // NOLINT

  const BlackBoxProblem& info() const;
  Evaluation raw(const Vector& x) const;

 private:
  std::variant<const BlackBoxProblem*, NoisyProblem*> target_;
};

/// Evaluates f and c at x, records the call in `counter`.
/// Throws DimensionMismatch or NonFiniteEvaluation.
Evaluation evaluate(ProblemRef problem, const Vector& x, EvalCounter& counter);

/// True iff c_i(x) <= -margin for every i. Counts as one evaluation.
bool is_feasible(ProblemRef problem, const Vector& x, double margin, EvalCounter& counter);

/// The margin test on already known constraint values.
bool satisfies_constraints(const Vector& c, double margin);

}  // namespace nowpac
