#include "nowpac/blackbox.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "nowpac/errors.hpp"

namespace nowpac {

NoisyProblem::NoisyProblem(BlackBoxProblem inner, double delta_f_max, double delta_c_max,
                           std::uint64_t seed)
    : inner_(std::move(inner)),
      delta_f_max_(delta_f_max),
      delta_c_max_(delta_c_max),
      seed_(seed),
      engine_(seed) {
  if (!(delta_f_max >= 0.0) || !(delta_c_max >= 0.0)) {
    throw InvalidConfig("noise half-widths must be nonnegative");
  }
}

void NoisyProblem::reset() { engine_.seed(seed_); }

double NoisyProblem::draw(double half_width) {
  // 53 random bits -> [0,1); independent of the standard library's
  // distribution implementation.
  const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  return half_width * (2.0 * u - 1.0);
}

Evaluation NoisyProblem::sample(const Vector& x) {
  Evaluation e = inner_.eval(x);
  const double df = draw(delta_f_max_);
  if (delta_f_max_ > 0.0) e.f += df;
  for (Eigen::Index i = 0; i < e.c.size(); ++i) {
    const double dc = draw(delta_c_max_);
    if (delta_c_max_ > 0.0) e.c[i] += dc;
  }
  return e;
}

const BlackBoxProblem& ProblemRef::info() const {
  return std::visit(
      [](auto* p) -> const BlackBoxProblem& {
        if constexpr (std::is_same_v<decltype(p), NoisyProblem*>) {
          return p->inner();
        } else {
          return *p;
        }
      },
      target_);
}

Evaluation ProblemRef::raw(const Vector& x) const {
  return std::visit(
      [&](auto* p) -> Evaluation {
        if constexpr (std::is_same_v<decltype(p), NoisyProblem*>) {
          return p->sample(x);
        } else {
          return p->eval(x);
        }
      },
      target_);
}

Evaluation evaluate(ProblemRef problem, const Vector& x, EvalCounter& counter) {
  const BlackBoxProblem& info = problem.info();
  if (x.size() != info.n) {
    throw DimensionMismatch("problem '" + info.name + "' expects " + std::to_string(info.n) +
                            " variables, got " + std::to_string(x.size()));
  }
  Evaluation e = problem.raw(x);
  if (e.c.size() != info.r) {
    throw DimensionMismatch("problem '" + info.name + "' returned " + std::to_string(e.c.size()) +
                            " constraint values, expected " + std::to_string(info.r));
  }
  counter.record(x, e);
  if (!std::isfinite(e.f) || !e.c.allFinite()) {
    throw NonFiniteEvaluation("problem '" + info.name + "' returned a non-finite value at evaluation " +
                              std::to_string(counter.count()));
  }
  return e;
}

bool satisfies_constraints(const Vector& c, double margin) {
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    if (!(c[i] <= -margin)) return false;
  }
  return true;
}

bool is_feasible(ProblemRef problem, const Vector& x, double margin, EvalCounter& counter) {
  if (margin < 0.0) throw InvalidConfig("feasibility margin must be nonnegative");
  return satisfies_constraints(evaluate(problem, x, counter).c, margin);
}

void EvalCounter::write(std::ostream& os) const {
  char buf[64];
  for (std::size_t k = 0; k < log_.size(); ++k) {
    const auto& rec = log_[k];
    os << k;
    for (Eigen::Index i = 0; i < rec.x.size(); ++i) {
      std::snprintf(buf, sizeof buf, ",%.17g", rec.x[i]);
      os << buf;
    }
    std::snprintf(buf, sizeof buf, ",%.17g", rec.f);
    os << buf;
    for (Eigen::Index i = 0; i < rec.c.size(); ++i) {
      std::snprintf(buf, sizeof buf, ",%.17g", rec.c[i]);
      os << buf;
    }
    os << '\n';
  }
}

}  // namespace nowpac
