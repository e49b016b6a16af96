#include "nowpac/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

#include "nowpac/barrier.hpp"
#include "nowpac/errors.hpp"
#include "nowpac/feasibility.hpp"

namespace nowpac {

namespace {

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

/// Builds a problem from a combined value/gradient routine.
BlackBoxProblem make_problem(std::string name, int n, int r,
                             std::function<void(const Vector&, Evaluation*, Gradients*)> fn,
                             Vector x0, Vector x_star, double f_star) {
  BlackBoxProblem p;
  p.name = std::move(name);
  p.n = n;
  p.r = r;
  p.eval = [fn, n, r](const Vector& x) {
    Evaluation e{0.0, Vector::Zero(r)};
    (void)n;
    fn(x, &e, nullptr);
    return e;
  };
  p.analytic_grad = [fn, n, r](const Vector& x) {
    Gradients g{Vector::Zero(n), Matrix::Zero(n, r)};
    fn(x, nullptr, &g);
    return g;
  };
  p.x0 = std::move(x0);
  p.known_optimum = KnownOptimum{std::move(x_star), f_star};
  return p;
}

BlackBoxProblem hs29() {
  return make_problem(
      "hs29", 3, 1,
      [](const Vector& x, Evaluation* e, Gradients* g) {
        if (e) {
          e->f = -x[0] * x[1] * x[2];
          e->c[0] = x[0] * x[0] + 2.0 * x[1] * x[1] + 4.0 * x[2] * x[2] - 48.0;
        }
        if (g) {
          g->df << -x[1] * x[2], -x[0] * x[2], -x[0] * x[1];
          g->dc.col(0) << 2.0 * x[0], 4.0 * x[1], 8.0 * x[2];
        }
      },
      vec({1.0, 1.0, 1.0}), vec({4.0, 2.0 * std::sqrt(2.0), 2.0}), -16.0 * std::sqrt(2.0));
}

/// Rosen-Suzuki problem; HS43 and HS264 differ only in the second constant.
BlackBoxProblem rosen_suzuki(std::string name, double c2_constant) {
  return make_problem(
      std::move(name), 4, 3,
      [c2_constant](const Vector& x, Evaluation* e, Gradients* g) {
        if (e) {
          e->f = x[0] * x[0] + x[1] * x[1] + 2.0 * x[2] * x[2] + x[3] * x[3] - 5.0 * x[0] -
                 5.0 * x[1] - 21.0 * x[2] + 7.0 * x[3];
          e->c[0] = x.squaredNorm() + x[0] - x[1] + x[2] - x[3] - 8.0;
          e->c[1] = x[0] * x[0] + 2.0 * x[1] * x[1] + x[2] * x[2] + 2.0 * x[3] * x[3] - x[0] -
                    x[3] - c2_constant;
          e->c[2] = 2.0 * x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + 2.0 * x[0] - x[1] - x[3] - 5.0;
        }
        if (g) {
          g->df << 2.0 * x[0] - 5.0, 2.0 * x[1] - 5.0, 4.0 * x[2] - 21.0, 2.0 * x[3] + 7.0;
          g->dc.col(0) << 2.0 * x[0] + 1.0, 2.0 * x[1] - 1.0, 2.0 * x[2] + 1.0, 2.0 * x[3] - 1.0;
          g->dc.col(1) << 2.0 * x[0] - 1.0, 4.0 * x[1], 2.0 * x[2], 4.0 * x[3] - 1.0;
          g->dc.col(2) << 4.0 * x[0] + 2.0, 2.0 * x[1] - 1.0, 2.0 * x[2], -1.0;
        }
      },
      Vector::Zero(4), vec({0.0, 1.0, 2.0, -1.0}), -44.0);
}

BlackBoxProblem hs100() {
  return make_problem(
      "hs100", 7, 4,
      [](const Vector& x, Evaluation* e, Gradients* g) {
        if (e) {
          e->f = std::pow(x[0] - 10.0, 2) + 5.0 * std::pow(x[1] - 12.0, 2) + std::pow(x[2], 4) +
                 3.0 * std::pow(x[3] - 11.0, 2) + 10.0 * std::pow(x[4], 6) + 7.0 * x[5] * x[5] +
                 std::pow(x[6], 4) - 4.0 * x[5] * x[6] - 10.0 * x[5] - 8.0 * x[6];
          e->c[0] = 2.0 * x[0] * x[0] + 3.0 * std::pow(x[1], 4) + x[2] + 4.0 * x[3] * x[3] +
                    5.0 * x[4] - 127.0;
          e->c[1] = 7.0 * x[0] + 3.0 * x[1] + 10.0 * x[2] * x[2] + x[3] - x[4] - 282.0;
          e->c[2] = 23.0 * x[0] + x[1] * x[1] + 6.0 * x[5] * x[5] - 8.0 * x[6] - 196.0;
          e->c[3] = 4.0 * x[0] * x[0] + x[1] * x[1] - 3.0 * x[0] * x[1] + 2.0 * x[2] * x[2] +
                    5.0 * x[5] - 11.0 * x[6];
        }
        if (g) {
          g->df << 2.0 * (x[0] - 10.0), 10.0 * (x[1] - 12.0), 4.0 * std::pow(x[2], 3),
              6.0 * (x[3] - 11.0), 60.0 * std::pow(x[4], 5), 14.0 * x[5] - 4.0 * x[6] - 10.0,
              4.0 * std::pow(x[6], 3) - 4.0 * x[5] - 8.0;
          g->dc.col(0) << 4.0 * x[0], 12.0 * std::pow(x[1], 3), 1.0, 8.0 * x[3], 5.0, 0.0, 0.0;
          g->dc.col(1) << 7.0, 3.0, 20.0 * x[2], 1.0, -1.0, 0.0, 0.0;
          g->dc.col(2) << 23.0, 2.0 * x[1], 0.0, 0.0, 0.0, 12.0 * x[5], -8.0;
          g->dc.col(3) << 8.0 * x[0] - 3.0 * x[1], 2.0 * x[1] - 3.0 * x[0], 4.0 * x[2], 0.0, 0.0,
              5.0, -11.0;
        }
      },
      vec({1.0, 2.0, 0.0, 4.0, 0.0, 1.0, 1.0}),
      vec({2.330499, 1.951372, -0.4775414, 4.365726, -0.6244870, 1.038131, 1.594227}),
      680.6300573);
}

BlackBoxProblem hs113() {
  return make_problem(
      "hs113", 10, 8,
      [](const Vector& x, Evaluation* e, Gradients* g) {
        const double x1 = x[0], x2 = x[1], x3 = x[2], x4 = x[3], x5 = x[4], x6 = x[5],
                     x7 = x[6], x8 = x[7], x9 = x[8], x10 = x[9];
        if (e) {
          e->f = x1 * x1 + x2 * x2 + x1 * x2 - 14.0 * x1 - 16.0 * x2 + std::pow(x3 - 10.0, 2) +
                 4.0 * std::pow(x4 - 5.0, 2) + std::pow(x5 - 3.0, 2) + 2.0 * std::pow(x6 - 1.0, 2) +
                 5.0 * x7 * x7 + 7.0 * std::pow(x8 - 11.0, 2) + 2.0 * std::pow(x9 - 10.0, 2) +
                 std::pow(x10 - 7.0, 2) + 45.0;
          e->c[0] = -105.0 + 4.0 * x1 + 5.0 * x2 - 3.0 * x7 + 9.0 * x8;
          e->c[1] = 10.0 * x1 - 8.0 * x2 - 17.0 * x7 + 2.0 * x8;
          e->c[2] = -8.0 * x1 + 2.0 * x2 + 5.0 * x9 - 2.0 * x10 - 12.0;
          e->c[3] = 3.0 * std::pow(x1 - 2.0, 2) + 4.0 * std::pow(x2 - 3.0, 2) + 2.0 * x3 * x3 -
                    7.0 * x4 - 120.0;
          e->c[4] = 5.0 * x1 * x1 + 8.0 * x2 + std::pow(x3 - 6.0, 2) - 2.0 * x4 - 40.0;
          e->c[5] = 0.5 * std::pow(x1 - 8.0, 2) + 2.0 * std::pow(x2 - 4.0, 2) + 3.0 * x5 * x5 - x6 -
                    30.0;
          e->c[6] = x1 * x1 + 2.0 * std::pow(x2 - 2.0, 2) - 2.0 * x1 * x2 + 14.0 * x5 - 6.0 * x6;
          e->c[7] = -3.0 * x1 + 6.0 * x2 + 12.0 * std::pow(x9 - 8.0, 2) - 7.0 * x10;
        }
        if (g) {
          g->df << 2.0 * x1 + x2 - 14.0, 2.0 * x2 + x1 - 16.0, 2.0 * (x3 - 10.0), 8.0 * (x4 - 5.0),
              2.0 * (x5 - 3.0), 4.0 * (x6 - 1.0), 10.0 * x7, 14.0 * (x8 - 11.0),
              4.0 * (x9 - 10.0), 2.0 * (x10 - 7.0);
          g->dc.setZero();
          g->dc(0, 0) = 4.0, g->dc(1, 0) = 5.0, g->dc(6, 0) = -3.0, g->dc(7, 0) = 9.0;
          g->dc(0, 1) = 10.0, g->dc(1, 1) = -8.0, g->dc(6, 1) = -17.0, g->dc(7, 1) = 2.0;
          g->dc(0, 2) = -8.0, g->dc(1, 2) = 2.0, g->dc(8, 2) = 5.0, g->dc(9, 2) = -2.0;
          g->dc(0, 3) = 6.0 * (x1 - 2.0), g->dc(1, 3) = 8.0 * (x2 - 3.0), g->dc(2, 3) = 4.0 * x3,
          g->dc(3, 3) = -7.0;
          g->dc(0, 4) = 10.0 * x1, g->dc(1, 4) = 8.0, g->dc(2, 4) = 2.0 * (x3 - 6.0),
          g->dc(3, 4) = -2.0;
          g->dc(0, 5) = x1 - 8.0, g->dc(1, 5) = 4.0 * (x2 - 4.0), g->dc(4, 5) = 6.0 * x5,
          g->dc(5, 5) = -1.0;
          g->dc(0, 6) = 2.0 * x1 - 2.0 * x2, g->dc(1, 6) = 4.0 * (x2 - 2.0) - 2.0 * x1,
          g->dc(4, 6) = 14.0, g->dc(5, 6) = -6.0;
          g->dc(0, 7) = -3.0, g->dc(1, 7) = 6.0, g->dc(8, 7) = 24.0 * (x9 - 8.0),
          g->dc(9, 7) = -7.0;
        }
      },
      vec({2.0, 3.0, 5.0, 5.0, 1.0, 2.0, 7.0, 3.0, 6.0, 10.0}),
      vec({2.171996, 2.363683, 8.773926, 5.095984, 0.9906548, 1.430574, 1.321644, 9.828726,
           8.280092, 8.375927}),
      24.3062091);
}

BlackBoxProblem hs227() {
  return make_problem(
      "hs227", 2, 2,
      [](const Vector& x, Evaluation* e, Gradients* g) {
        if (e) {
          e->f = std::pow(x[0] - 2.0, 2) + std::pow(x[1] - 1.0, 2);
          e->c[0] = x[0] * x[0] - x[1];
          e->c[1] = x[1] * x[1] - x[0];
        }
        if (g) {
          g->df << 2.0 * (x[0] - 2.0), 2.0 * (x[1] - 1.0);
          g->dc.col(0) << 2.0 * x[0], -1.0;
          g->dc.col(1) << -1.0, 2.0 * x[1];
        }
      },
      vec({0.5, 0.5}), vec({1.0, 1.0}), 1.0);
}

BlackBoxProblem hs228() {
  return make_problem(
      "hs228", 2, 2,
      [](const Vector& x, Evaluation* e, Gradients* g) {
        if (e) {
          e->f = x[0] * x[0] + x[1];
          e->c[0] = x[0] + x[1] - 1.0;
          e->c[1] = x[0] * x[0] + x[1] * x[1] - 9.0;
        }
        if (g) {
          g->df << 2.0 * x[0], 1.0;
          g->dc.col(0) << 1.0, 1.0;
          g->dc.col(1) << 2.0 * x[0], 2.0 * x[1];
        }
      },
      vec({0.0, 0.0}), vec({0.0, -3.0}), -3.0);
}

BlackBoxProblem hs285() {
  static const double a[10][15] = {
      {100, 100, 10, 5, 10, 0, 0, 25, 0, 10, 55, 5, 45, 20, 0},
      {90, 100, 10, 35, 20, 5, 0, 35, 55, 25, 20, 0, 40, 25, 10},
      {70, 50, 0, 55, 25, 100, 40, 50, 0, 30, 60, 10, 30, 0, 40},
      {50, 0, 0, 65, 35, 100, 35, 60, 0, 15, 0, 75, 35, 30, 65},
      {50, 10, 70, 60, 45, 45, 0, 35, 65, 5, 75, 100, 75, 10, 0},
      {40, 0, 50, 95, 50, 35, 10, 60, 0, 45, 15, 20, 0, 5, 5},
      {30, 60, 30, 90, 0, 30, 5, 25, 0, 70, 20, 25, 70, 15, 15},
      {20, 30, 40, 25, 40, 25, 15, 10, 80, 20, 30, 30, 5, 65, 20},
      {10, 70, 10, 35, 25, 65, 0, 30, 0, 0, 25, 0, 15, 50, 55},
      {5, 10, 100, 5, 20, 5, 10, 35, 95, 70, 20, 10, 35, 10, 30}};
  static const double b[10] = {385, 470, 560, 565, 645, 430, 485, 455, 390, 460};
  static const double w[15] = {486, 640, 758, 776, 477, 707, 175, 619,
                               627, 614, 475, 377, 524, 468, 529};
  return make_problem(
      "hs285", 15, 10,
      [](const Vector& x, Evaluation* e, Gradients* g) {
        if (e) {
          e->f = 0.0;
          for (int i = 0; i < 15; ++i) e->f -= w[i] * x[i];
          for (int j = 0; j < 10; ++j) {
            double s = -b[j];
            for (int i = 0; i < 15; ++i) s += a[j][i] * x[i] * x[i];
            e->c[j] = s;
          }
        }
        if (g) {
          for (int i = 0; i < 15; ++i) g->df[i] = -w[i];
          for (int j = 0; j < 10; ++j) {
            for (int i = 0; i < 15; ++i) g->dc(i, j) = 2.0 * a[j][i] * x[i];
          }
        }
      },
      Vector::Zero(15), Vector::Ones(15), -8252.0);
}

std::string fmt_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 6);
  return std::string(buf, res.ptr);
}

std::string fmt_optional(const std::optional<double>& v) {
  return v ? fmt_number(*v) : std::string("NA");
}

/// Constraint of the oracle subproblem: c_i(x + d) + h(d).
SmoothFunction oracle_constraint(const BlackBoxProblem& problem, const Vector& x, Eigen::Index i,
                                 const IbpParams& ibp) {
  auto value = [&problem, x, i, ibp](const Vector& d) {
    return problem.eval(x + d).c[i] + ibp_value(d, ibp);
  };
  auto eval = [&problem, x, i, ibp](const Vector& d) {
    const Eigen::Index n = d.size();
    SmoothEval e;
    e.value = problem.eval(x + d).c[i] + ibp_value(d, ibp);
    e.gradient = problem.analytic_grad(x + d).dc.col(i) + ibp_gradient(d, ibp);
    Matrix h(n, n);
    const double step = 1e-6 * std::max(1.0, (x + d).cwiseAbs().maxCoeff());
    for (Eigen::Index j = 0; j < n; ++j) {
      Vector dp = d, dm = d;
      dp[j] += step;
      dm[j] -= step;
      h.col(j) = (problem.analytic_grad(x + dp).dc.col(i) - problem.analytic_grad(x + dm).dc.col(i)) /
                 (2.0 * step);
    }
    e.hessian = 0.5 * (h + h.transpose()) + ibp_hessian(d, ibp);
    return e;
  };
  return {value, eval};
}

}  // namespace

BlackBoxProblem rosenbrock() {
  return make_problem(
      "rosenbrock", 2, 0,
      [](const Vector& x, Evaluation* e, Gradients* g) {
        const double a = x[1] - x[0] * x[0];
        if (e) e->f = a * a + std::pow(x[0] - 1.0, 2);
        if (g) g->df << -4.0 * x[0] * a + 2.0 * (x[0] - 1.0), 2.0 * a;
      },
      vec({1.5, 1.5}), vec({1.0, 1.0}), 0.0);
}

BlackBoxProblem aniso_exp() {
  const Vector diag = vec({1.0, 2.0, 3.0, 4.0, 5.0});
  Vector x_star = Vector::Zero(5);
  x_star[4] = std::sqrt(std::asin(0.5));
  const double f_star = -std::exp(5.0 * std::asin(0.5));
  return make_problem(
      "aniso_exp", 5, 2,
      [diag](const Vector& x, Evaluation* e, Gradients* g) {
        const double q = x.dot(diag.cwiseProduct(x));
        const double sq = x.squaredNorm();
        Vector shifted = x;
        shifted[4] -= 0.375;
        const double dist = shifted.norm();
        if (e) {
          e->f = -std::exp(q);
          e->c[0] = std::sin(sq) - 0.5;
          e->c[1] = dist - 0.375;
        }
        if (g) {
          g->df = -std::exp(q) * 2.0 * diag.cwiseProduct(x);
          g->dc.col(0) = std::cos(sq) * 2.0 * x;
          g->dc.col(1) = dist > 0.0 ? Vector(shifted / dist) : Vector::Zero(5);
        }
      },
      Vector::Constant(5, 0.1), x_star, f_star);
}

std::vector<int> hs_problem_ids() { return {29, 43, 100, 113, 227, 228, 264, 285}; }

BlackBoxProblem hs_problem(int id) {
  switch (id) {
    case 29: return hs29();
    case 43: return rosen_suzuki("hs43", 10.0);
    case 100: return hs100();
    case 113: return hs113();
    case 227: return hs227();
    case 228: return hs228();
    case 264: return rosen_suzuki("hs264", 9.0);
    case 285: return hs285();
    default: break;
  }
  throw UnknownProblemId("no Hock-Schittkowski problem " + std::to_string(id) +
                         " (supported: 29, 43, 100, 113, 227, 228, 264, 285)");
}

std::vector<std::string> problem_names() {
  std::vector<std::string> names{"rosenbrock", "aniso_exp"};
  for (int id : hs_problem_ids()) names.push_back("hs" + std::to_string(id));
  return names;
}

BlackBoxProblem problem_by_name(const std::string& name) {
  if (name == "rosenbrock") return rosenbrock();
  if (name == "aniso_exp") return aniso_exp();
  if (name.size() > 2 && name.rfind("hs", 0) == 0) {
    const std::string digits = name.substr(2);
    if (std::all_of(digits.begin(), digits.end(), [](char ch) { return ch >= '0' && ch <= '9'; }) &&
        digits.size() <= 4) {
      return hs_problem(std::stoi(digits));
    }
  }
  throw UnknownProblemId("unknown problem '" + name + "'");
}

double exact_criticality_oracle(const BlackBoxProblem& problem, const Vector& x, double eps_b,
                                double p) {
  if (!problem.has_gradients()) {
    throw InvalidConfig("criticality oracle needs analytic gradients for '" + problem.name + "'");
  }
  const Eigen::Index n = problem.n;
  const IbpParams ibp{eps_b, eps_b, p};
  ibp.validate();
  const Gradients grads = problem.analytic_grad(x);
  const Vector g = grads.df;
  if (g.norm() == 0.0) return 0.0;

  BarrierProblem bp;
  bp.objective = {[g](const Vector& d) { return g.dot(d); },
                  [g, n](const Vector& d) {
                    return SmoothEval{g.dot(d), g, Matrix::Zero(n, n)};
                  }};
  double cscale = eps_b;
  for (Eigen::Index i = 0; i < problem.r; ++i) {
    bp.constraints.push_back(oracle_constraint(problem, x, i, ibp));
    cscale = std::max(cscale, grads.dc.col(i).norm());
  }
  bp.constraints.push_back({[](const Vector& d) { return d.squaredNorm() - 1.0; },
                            [n](const Vector& d) {
                              return SmoothEval{d.squaredNorm() - 1.0, 2.0 * d,
                                                2.0 * Matrix::Identity(n, n)};
                            }});
  bp.objective_scale = g.norm();

  const int max_steps = 400 * static_cast<int>(n);
  const Vector start =
      find_interior_point(bp.constraints, Vector::Zero(n), cscale, 1e-9 * cscale, max_steps);
  if (start.size() == 0) return 0.0;

  std::vector<Vector> starts{start};
  const Vector toward = -0.999 * g.normalized();
  for (int k = 20; k >= 1; --k) {
    const Vector cand = start + (static_cast<double>(k) / 20.0) * (toward - start);
    if (strictly_feasible(bp, cand)) {
      starts.push_back(cand);
      break;
    }
  }

  BarrierOptions opts;
  opts.max_steps = max_steps;
  double best = 0.0;
  for (const auto& s : starts) {
    const BarrierResult res = minimize_with_barrier(bp, s, opts);
    if (strictly_feasible(bp, res.z)) best = std::min(best, res.objective);
  }
  return std::abs(best);
}

double grid_criticality_oracle(const BlackBoxProblem& problem, const Vector& x, double eps_b,
                               double p, double spacing) {
  if (problem.n > 2) throw InvalidConfig("grid oracle supports n <= 2 only");
  if (!problem.has_gradients()) {
    throw InvalidConfig("criticality oracle needs analytic gradients for '" + problem.name + "'");
  }
  const IbpParams ibp{eps_b, eps_b, p};
  const Vector g = problem.analytic_grad(x).df;
  const int steps = static_cast<int>(std::ceil(1.0 / spacing));
  double best = 0.0;
  auto consider = [&](const Vector& d) {
    if (d.squaredNorm() > 1.0) return;
    const double value = g.dot(d);
    if (value >= best) return;
    const Evaluation e = problem.eval(x + d);
    if (satisfies_constraints(e.c.array() + ibp_value(d, ibp), 0.0)) best = value;
  };
  if (problem.n == 1) {
    for (int i = -steps; i <= steps; ++i) consider(Vector::Constant(1, i * spacing));
  } else {
    Vector d(2);
    for (int i = -steps; i <= steps; ++i) {
      for (int j = -steps; j <= steps; ++j) {
        d << i * spacing, j * spacing;
        consider(d);
      }
    }
  }
  return std::abs(best);
}

void BenchmarkCase::validate() const {
  if (!(sc > 0.0)) throw InvalidConfig("benchmark case '" + name + "': SC must be positive");
  if (replicates < 1) {
    throw InvalidConfig("benchmark case '" + name + "': replicates must be at least 1");
  }
  if (noise && (!(noise->delta_f >= 0.0) || !(noise->delta_c >= 0.0))) {
    throw InvalidConfig("benchmark case '" + name + "': noise levels must be nonnegative");
  }
}

ErrorMeasures error_measures(const BlackBoxProblem& problem, const Vector& x) {
  ErrorMeasures m;
  if (!problem.known_optimum) return m;
  const KnownOptimum& opt = *problem.known_optimum;
  m.d_x = (x - opt.x).norm();
  m.d_f_abs = std::abs(problem.eval(x).f - opt.f);
  if (opt.f != 0.0) m.d_f_rel = *m.d_f_abs / std::abs(opt.f);
  return m;
}

std::string history_file_name(const std::string& case_name, double sc, std::uint64_t seed) {
  return case_name + "_" + fmt_number(sc) + "_" + std::to_string(seed) + ".hist";
}

namespace {

struct SingleRun {
  OptimizationResult result;
  SolverConfig config;
};

SingleRun run_once(const BenchmarkCase& bc, const SolverConfig& base, std::uint64_t seed,
                   bool early_termination) {
  SolverConfig config = base;
  config.rho_min = bc.sc;
  config.seed = seed;
  config.early_termination = early_termination;
  if (bc.noise) {
    NoisyProblem noisy(bc.problem, bc.noise->delta_f, bc.noise->delta_c, seed);
    return {optimize(noisy, config), config};
  }
  return {optimize(bc.problem, config), config};
}

bool history_feasible(const BlackBoxProblem& problem, const OptimizationResult& result,
                      double tolerance) {
  for (const auto& rec : result.history) {
    if (rec.status != StepStatus::successful && rec.status != StepStatus::acceptable) continue;
    const Evaluation e = problem.eval(rec.x);
    if (!satisfies_constraints(e.c, -tolerance)) return false;
  }
  return satisfies_constraints(problem.eval(result.x_best).c, -tolerance);
}

BenchmarkResult run_replicate(const BenchmarkCase& bc, const SolverConfig& config,
                              std::uint64_t seed, const BenchmarkOptions& options) {
  BenchmarkResult out;
  out.case_name = bc.name;
  out.sc = bc.sc;
  out.seed = seed;
  try {
    const SingleRun run = run_once(bc, config, seed, config.early_termination);
    out.n_evals = static_cast<double>(run.result.evaluations);
    out.terminated_by = to_string(run.result.termination);
    const ErrorMeasures m = error_measures(bc.problem, run.result.x_best);
    out.d_x = m.d_x;
    out.d_f_abs = m.d_f_abs;
    out.d_f_rel = m.d_f_rel;
    const double tol = bc.noise ? bc.noise->delta_c : 0.0;
    out.feasible_history = history_feasible(bc.problem, run.result, tol);
    if (bc.noise && config.early_termination) {
      const SingleRun twin = run_once(bc, config, seed, false);
      out.n_saved = static_cast<double>(twin.result.evaluations - run.result.evaluations);
    }
    if (!options.history_dir.empty()) {
      std::filesystem::create_directories(options.history_dir);
      std::ofstream os(std::filesystem::path(options.history_dir) /
                       history_file_name(bc.name, bc.sc, seed));
      write_history(os, run.result, run.config, bc.problem.name);
    }
  } catch (const Error& e) {
    out.terminated_by = std::string("error: ") + e.what();
  }
  return out;
}

}  // namespace

std::vector<BenchmarkResult> run_benchmark(const BenchmarkCase& bench_case,
                                           const SolverConfig& config,
                                           const BenchmarkOptions& options) {
  bench_case.validate();
  SolverConfig checked = config;
  checked.rho_min = bench_case.sc;
  checked.validate();

  const auto count = static_cast<std::size_t>(bench_case.replicates);
  std::vector<BenchmarkResult> results(count);
  const int threads = std::max(1, std::min<int>(options.threads, static_cast<int>(count)));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      results[i] = run_replicate(bench_case, checked, bench_case.seed + i, options);
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return results;
}

BenchmarkResult aggregate(const std::vector<BenchmarkResult>& results) {
  if (results.empty()) throw EmptyResults("no benchmark results to aggregate");
  BenchmarkResult out;
  out.case_name = results.front().case_name;
  out.sc = results.front().sc;
  out.seed = results.front().seed;
  const double m = static_cast<double>(results.size());
  auto mean = [&](auto member) -> std::optional<double> {
    double acc = 0.0;
    for (const auto& r : results) {
      if (!(r.*member)) return std::nullopt;
      acc += *(r.*member);
    }
    return acc / m;
  };
  double evals = 0.0;
  std::map<std::string, int> reasons;
  for (const auto& r : results) {
    evals += r.n_evals;
    ++reasons[r.terminated_by];
    out.feasible_history = out.feasible_history && r.feasible_history;
  }
  out.n_evals = evals / m;
  out.d_x = mean(&BenchmarkResult::d_x);
  out.d_f_abs = mean(&BenchmarkResult::d_f_abs);
  out.d_f_rel = mean(&BenchmarkResult::d_f_rel);
  out.n_saved = mean(&BenchmarkResult::n_saved);
  out.terminated_by =
      std::max_element(reasons.begin(), reasons.end(),
                       [](const auto& a, const auto& b) { return a.second < b.second; })
          ->first;
  return out;
}

std::string emit_table(const std::vector<BenchmarkResult>& results, TableFormat format) {
  if (results.empty()) throw EmptyResults("no benchmark results to print");
  static const char* header[] = {"case",    "SC",      "n_evals", "d_x",
                                 "d_f_abs", "d_f_rel", "n_saved", "terminated_by"};
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : results) {
    rows.push_back({r.case_name, fmt_number(r.sc), fmt_number(r.n_evals), fmt_optional(r.d_x),
                    fmt_optional(r.d_f_abs), fmt_optional(r.d_f_rel), fmt_optional(r.n_saved),
                    r.terminated_by});
  }
  std::ostringstream os;
  if (format == TableFormat::csv) {
    for (int i = 0; i < 8; ++i) os << (i ? "," : "") << header[i];
    os << '\n';
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
      os << '\n';
    }
  } else {
    os << '|';
    for (const char* h : header) os << ' ' << h << " |";
    os << "\n|";
    for (int i = 0; i < 8; ++i) os << "---|";
    os << '\n';
    for (const auto& row : rows) {
      os << '|';
      for (const auto& cell : row) os << ' ' << cell << " |";
      os << '\n';
    }
  }
  return os.str();
}

}  // namespace nowpac
