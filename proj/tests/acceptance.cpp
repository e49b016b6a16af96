// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <unistd.h>
#include <vector>

#include <Eigen/Dense>

#include "nowpac/bench.hpp"
#include "nowpac/core.hpp"
#include "nowpac/errors.hpp"
#include "nowpac/subsolver.hpp"
#include "nowpac/surrogate.hpp"

using namespace nowpac;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int id, const Outcome& o) {
  std::printf("criterion %d: %s  %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

/// Every recorded iterate satisfies the true constraints.
bool history_feasible(const BlackBoxProblem& problem, const OptimizationResult& result) {
  if (problem.r == 0) return true;
  for (const auto& rec : result.history)
    if ((problem.eval(rec.x).c.array() > 0.0).any()) return false;
  return (problem.eval(result.x_best).c.array() <= 0.0).all();
}

Outcome solve_check(const BlackBoxProblem& problem, double dx_tol, std::optional<double> df_tol,
                    long max_evals, double max_seconds) {
  SolverConfig config;
  config.rho_min = 1e-5;
  const auto t0 = Clock::now();
  const OptimizationResult res = optimize(problem, config);
  const double secs = seconds_since(t0);
  const ErrorMeasures err = error_measures(problem, res.x_best);
  const bool feasible = history_feasible(problem, res);
  Outcome o;
  o.pass = err.d_x && *err.d_x <= dx_tol && res.evaluations <= max_evals && secs < max_seconds &&
           feasible;
  if (df_tol) o.pass = o.pass && err.d_f_abs && *err.d_f_abs <= *df_tol;
  std::ostringstream os;
  os << problem.name << " evals=" << res.evaluations << " d_x=" << fmt("%.3e", err.d_x.value_or(NAN))
     << " d_f=" << fmt("%.3e", err.d_f_abs.value_or(NAN)) << " feasible=" << feasible
     << " time=" << fmt("%.2fs", secs) << " terminated_by=" << to_string(res.termination);
  o.detail = os.str();
  return o;
}

Outcome criterion_1() { return solve_check(rosenbrock(), 1e-3, 1e-6, 300, 5.0); }

Outcome criterion_2() { return solve_check(aniso_exp(), 1e-3, std::nullopt, 600, 30.0); }

Outcome criterion_3() {
  const std::map<int, long> reference_evals{{29, 50}, {43, 66}, {227, 18}, {228, 28}, {264, 53}};
  Outcome o;
  std::ostringstream os;
  for (const auto& [id, evals] : reference_evals) {
    const BlackBoxProblem problem = hs_problem(id);
    SolverConfig config;
    config.rho_min = 1e-3;
    const OptimizationResult res = optimize(problem, config);
    const ErrorMeasures err = error_measures(problem, res.x_best);
    const bool feasible = history_feasible(problem, res);
    const bool ok = err.d_f_rel && *err.d_f_rel <= 1e-2 && res.evaluations <= 5 * evals && feasible;
    o.pass = o.pass && ok;
    os << "hs" << id << "(evals=" << res.evaluations << "/" << 5 * evals
       << " d_f_rel=" << fmt("%.2e", err.d_f_rel.value_or(NAN)) << " feasible=" << feasible << ") ";
  }
  o.detail = os.str();
  return o;
}

Outcome criterion_4() {
  const auto f = [](const Vector& x) { return std::exp(x[0]) + x[1] * x[1] * x[1]; };
  const auto grad = [](const Vector& x) { return vec2(std::exp(x[0]), 3 * x[1] * x[1]); };
  BlackBoxProblem problem;
  problem.name = "exp_cubic";
  problem.n = 2;
  problem.x0 = vec2(0.3, 0.4);
  problem.eval = [f](const Vector& x) { return Evaluation{f(x), Vector()}; };
  const std::vector<double> radii{0.1, 0.05, 0.025, 0.0125};
  std::vector<double> ve, ge;
  double worst_lambda = 0.0;
  for (double rho : radii) {
    EvalCounter counter;
    InterpolationSet set(problem.x0, problem.eval(problem.x0));
    const ImprovedSet out = ensure_fully_linear(set, problem, counter, rho);
    worst_lambda = std::max(worst_lambda, poisedness(out.set, rho));
    const auto d = fully_linear_diagnostics(out.models.f, f, grad, problem.x0, rho);
    ve.push_back(d.max_value_error);
    ge.push_back(d.max_gradient_error);
  }
  // least-squares slopes of log error against log rho
  const auto slope = [&](const std::vector<double>& e) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < radii.size(); ++i) {
      mx += std::log(radii[i]);
      my += std::log(e[i]);
    }
    mx /= radii.size();
    my /= radii.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < radii.size(); ++i) {
      sxy += (std::log(radii[i]) - mx) * (std::log(e[i]) - my);
      sxx += (std::log(radii[i]) - mx) * (std::log(radii[i]) - mx);
    }
    return sxy / sxx;
  };
  const double sv = slope(ve), sg = slope(ge);
  Outcome o;
  o.pass = sv >= 1.8 && sg >= 0.8 && worst_lambda <= 100.0;
  o.detail = "value_slope=" + fmt("%.3f", sv) + " gradient_slope=" + fmt("%.3f", sg) +
             " max_lambda=" + fmt("%.2f", worst_lambda);
  return o;
}

/// Minimum Frobenius-norm interpolant in monomial form (c, g1, g2, H11, H12, H22)
/// from its KKT system.
Vector mfn_oracle(const std::vector<Vector>& pts, const std::vector<double>& v, const Vector& center) {
  const auto m = static_cast<Eigen::Index>(pts.size());
  Matrix A(m, 6);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Vector y = pts[static_cast<std::size_t>(i)] - center;
    A.row(i) << 1, y[0], y[1], 0.5 * y[0] * y[0], y[0] * y[1], 0.5 * y[1] * y[1];
  }
  Matrix W = Matrix::Zero(6, 6);
  W(3, 3) = 1;
  W(4, 4) = 2;
  W(5, 5) = 1;
  Matrix K = Matrix::Zero(6 + m, 6 + m);
  K.topLeftCorner(6, 6) = 2 * W;
  K.topRightCorner(6, m) = A.transpose();
  K.bottomLeftCorner(m, 6) = A;
  Vector rhs = Vector::Zero(6 + m);
  for (Eigen::Index i = 0; i < m; ++i) rhs[6 + i] = v[static_cast<std::size_t>(i)];
  return K.fullPivLu().solve(rhs).head(6);
}

Outcome criterion_5() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst_full = 0.0, worst_under = 0.0;
  int full_sets = 0, under_sets = 0;
  while (full_sets < 50 || under_sets < 50) {
    const double c0 = u(rng);
    const Vector g = vec2(u(rng), u(rng));
    Matrix H(2, 2);
    H << u(rng), u(rng), 0, u(rng);
    H(1, 0) = H(0, 1);
    const auto q = [&](const Vector& x) { return c0 + g.dot(x) + 0.5 * x.dot(H * x); };
    const Vector center = vec2(u(rng), u(rng));
    const double radius = 0.05 + 0.5 * std::abs(u(rng));
    const std::size_t m = under_sets < 50 && (full_sets >= 50 || rng() % 2) ? 4 + rng() % 2 : 6;
    std::vector<Vector> pts{center};
    while (pts.size() < m) pts.push_back(center + radius * vec2(u(rng), u(rng)));
    InterpolationSet set(center, Evaluation{q(center), Vector()});
    for (std::size_t i = 1; i < m; ++i) set.add(pts[i], Evaluation{q(pts[i]), Vector()});
    std::vector<double> v;
    for (const auto& y : set.points()) v.push_back(q(y));
    try {
      if (poisedness(set, radius * std::sqrt(2.0)) > 100.0) continue;
    } catch (const SingularGeometry&) {
      continue;
    }
    const QuadraticModel model = build_mfn_model(set, v);
    Vector got(6);
    got << model.c0, model.g[0], model.g[1], model.H(0, 0), model.H(0, 1), model.H(1, 1);
    if (m == 6) {
      // exact quadratic about the set center
      Vector want(6);
      const Vector gc = g + H * center;
      want << q(center), gc[0], gc[1], H(0, 0), H(0, 1), H(1, 1);
      worst_full = std::max(worst_full, (got - want).norm() / std::max(1.0, want.norm()));
      ++full_sets;
    } else {
      const Vector want = mfn_oracle(set.points(), v, center);
      worst_under = std::max(worst_under, (got - want).norm() / std::max(1.0, want.norm()));
      ++under_sets;
    }
  }
  Outcome o;
  o.pass = worst_full <= 1e-6 && worst_under <= 1e-6;
  o.detail = "full_sets=50 max_rel_err=" + fmt("%.2e", worst_full) +
             " underdetermined_sets=50 max_rel_err_vs_kkt=" + fmt("%.2e", worst_under);
  return o;
}

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

Matrix random_symmetric(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix H(2, 2);
  H << u(rng), u(rng), 0, u(rng);
  H(1, 0) = H(0, 1);
  return H;
}

Outcome criterion_6() {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    SubproblemSpec spec;
    spec.objective = QuadraticModel{0.0, vec2(u(rng), u(rng)), random_symmetric(rng, 2.0)};
    const int r = 1 + static_cast<int>(rng() % 2);
    for (int i = 0; i < r; ++i)
      spec.constraint_models.push_back(
          {-0.01 - 0.05 * std::abs(u(rng)), vec2(u(rng), u(rng)), random_symmetric(rng, 1.0)});
    const double eps = 0.5 + 5.0 * std::abs(u(rng));
    spec.ibp = {eps, eps, 0.0};
    spec.radius = 0.05 + 0.1 * std::abs(u(rng));
    const SubproblemSolution sol = solve_trial_step(spec);
    worst = std::max(worst, std::abs(sol.objective_value - grid_minimum(spec, 1e-4)));
  }
  Outcome o;
  o.pass = worst <= 1e-3;
  o.detail = "problems=20 max_abs_diff_vs_grid=" + fmt("%.2e", worst);
  return o;
}

Outcome criterion_7() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst_interior = 0.0, worst_boundary = 0.0;
  for (int t = 0; t < 20; ++t) {
    // no constraint reaches the trust ball
    const Vector g = vec2(u(rng), u(rng));
    SubproblemSpec interior;
    interior.objective = LinearObjective{g};
    interior.constraint_models = {{-1.0, 0.1 * vec2(u(rng), u(rng)), Matrix::Zero(2, 2)}};
    interior.ibp = {10.0, 10.0, 0.0};
    interior.radius = 0.05 + 0.1 * std::abs(u(rng));
    worst_interior = std::max(worst_interior, std::abs(solve_criticality(g, interior) - g.norm()));

    // active linear constraint a's <= 0 with g = -lambda a: every feasible
    // direction has <g, d> >= 0, so the point is critical
    const Vector a = vec2(u(rng), u(rng));
    const Vector gb = -(0.1 + std::abs(u(rng))) * a;
    SubproblemSpec boundary;
    boundary.objective = LinearObjective{gb};
    boundary.constraint_models = {{0.0, a, Matrix::Zero(2, 2)}};
    const double eps = 0.5 + 10.0 * std::abs(u(rng));
    boundary.ibp = {eps, eps, 0.0};
    boundary.radius = 0.05 + 0.1 * std::abs(u(rng));
    worst_boundary = std::max(worst_boundary, std::abs(solve_criticality(gb, boundary)));
  }
  Outcome o;
  o.pass = worst_interior <= 1e-6 && worst_boundary <= 1e-6;
  o.detail = "cases=20 max_interior_err=" + fmt("%.2e", worst_interior) +
             " max_boundary_alpha=" + fmt("%.2e", worst_boundary);
  return o;
}

Outcome criterion_8() {
  const std::vector<std::pair<double, double>> levels{{1e-2, 1.01e-2}, {1e-3, 7.75e-4}, {1e-4, 8.75e-5}};
  BenchmarkOptions options;
  options.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const auto t0 = Clock::now();
  Outcome o;
  std::ostringstream os;
  for (const auto& [delta, reference_df] : levels) {
    BenchmarkCase bc;
    bc.name = "rosenbrock";
    bc.problem = rosenbrock();
    bc.sc = 1e-5;
    bc.noise = NoiseSpec{delta, 0.0};
    bc.replicates = 100;
    bc.seed = 1;
    SolverConfig config;
    config.rho_min = bc.sc;
    const auto results = run_benchmark(bc, config, options);
    int early = 0;
    double df = 0.0, saved = 0.0;
    for (const auto& r : results) {
      if (r.terminated_by == to_string(Termination::noise_detected)) ++early;
      df += r.d_f_abs.value_or(NAN);
      saved += r.n_saved.value_or(NAN);
    }
    df /= results.size();
    saved /= results.size();
    const double ratio = df / reference_df;
    const bool ok_a = delta != 1e-2 || early >= 90;
    const bool ok_b = ratio >= 0.1 && ratio <= 10.0;
    const bool ok_c = saved > 0.0;
    o.pass = o.pass && ok_a && ok_b && ok_c;
    os << "delta=" << fmt("%g", delta) << "(early=" << early << "/100 mean_d_f=" << fmt("%.2e", df)
       << " reference=" << fmt("%.2e", reference_df) << " mean_n_saved=" << fmt("%.1f", saved) << ") ";
  }
  const double secs = seconds_since(t0);
  o.pass = o.pass && secs < 600.0;
  os << "time=" << fmt("%.1fs", secs);
  o.detail = os.str();
  return o;
}

Outcome criterion_9() {
  SolverConfig config;
  const std::vector<double> rhos{1e-1, 5e-2, 2.5e-2, 1.25e-2, 6e-3};
  const auto run = [&](const std::function<double(double)>& norm, NoiseClass& last) {
    NoiseIndicatorState state;
    for (double rho : rhos) last = noise_indicator_update(state, true, rho, {norm(rho)}, config);
    return state.tau[0].value_or(NAN);
  };
  NoiseClass c_growth{}, c_flat{};
  const double tau_growth = run([](double rho) { return 3.0 / (rho * rho); }, c_growth);
  const double tau_flat = run([](double) { return 4.2; }, c_flat);
  Outcome o;
  o.pass = std::abs(tau_growth - 2.0) <= 0.01 && c_growth == NoiseClass::non_convergent &&
           std::abs(tau_flat) <= 0.01 && c_flat == NoiseClass::convergent;
  o.detail = "tau(C/rho^2)=" + fmt("%.4f", tau_growth) + " " + to_string(c_growth) +
             " tau(const)=" + fmt("%.4f", tau_flat) + " " + to_string(c_flat);
  return o;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome criterion_10() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / ("nowpac_acceptance_" + std::to_string(::getpid()));
  Outcome o;
  std::ostringstream os;
  const std::vector<std::pair<std::string, std::optional<NoiseSpec>>> cases{
      {"hs29", std::nullopt}, {"rosenbrock", NoiseSpec{1e-3, 0.0}}, {"aniso_exp", NoiseSpec{1e-4, 1e-4}}};
  for (const auto& [name, noise] : cases) {
    BenchmarkCase bc;
    bc.name = name;
    bc.problem = problem_by_name(name);
    bc.sc = 1e-4;
    bc.noise = noise;
    bc.seed = 42;
    SolverConfig config;
    config.rho_min = bc.sc;
    config.seed = 42;
    std::string contents[2];
    for (int run = 0; run < 2; ++run) {
      BenchmarkOptions options;
      options.history_dir = (root / std::to_string(run)).string();
      fs::create_directories(options.history_dir);
      run_benchmark(bc, config, options);
      contents[run] = slurp(fs::path(options.history_dir) / history_file_name(name, bc.sc, bc.seed));
    }
    const bool same = !contents[0].empty() && contents[0] == contents[1];
    o.pass = o.pass && same;
    os << name << "(" << contents[0].size() << " bytes " << (same ? "identical" : "differ") << ") ";
  }
  fs::remove_all(root);
  o.detail = os.str();
  return o;
}

}  // namespace

int main() {
  const std::vector<std::function<Outcome()>> criteria{criterion_1, criterion_2, criterion_3, criterion_4,
                                                       criterion_5, criterion_6, criterion_7, criterion_8,
                                                       criterion_9, criterion_10};
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    report(static_cast<int>(i + 1), o);
  }
  return failures == 0 ? 0 : 1;
}
