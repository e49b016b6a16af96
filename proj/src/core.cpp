#include "nowpac/core.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <ostream>
#include <utility>
#include <variant>

#include "nowpac/errors.hpp"

namespace nowpac {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

using FieldPtr = std::variant<double SolverConfig::*, long SolverConfig::*, int SolverConfig::*,
                              bool SolverConfig::*, std::uint64_t SolverConfig::*>;

struct Field {
  const char* name;
  FieldPtr ptr;
};

const std::vector<Field>& fields() {
  static const std::vector<Field> table{
      {"eps_b", &SolverConfig::eps_b},
      {"eta_0", &SolverConfig::eta_0},
      {"eta_1", &SolverConfig::eta_1},
      {"gamma", &SolverConfig::gamma},
      {"gamma_inc", &SolverConfig::gamma_inc},
      {"omega", &SolverConfig::omega},
      {"eps_c", &SolverConfig::eps_c},
      {"mu", &SolverConfig::mu},
      {"p", &SolverConfig::p},
      {"q", &SolverConfig::q},
      {"rho_0", &SolverConfig::rho_0},
      {"rho_min", &SolverConfig::rho_min},
      {"rho_max", &SolverConfig::rho_max},
      {"mu_1", &SolverConfig::mu_1},
      {"max_evals", &SolverConfig::max_evals},
      {"feasibility_margin", &SolverConfig::feasibility_margin},
      {"noise_window", &SolverConfig::noise_window},
      {"tau_threshold", &SolverConfig::tau_threshold},
      {"nc_limit", &SolverConfig::nc_limit},
      {"early_termination", &SolverConfig::early_termination},
      {"seed", &SolverConfig::seed},
      {"scale_factor", &SolverConfig::scale_factor},
      {"lambda_threshold", &SolverConfig::lambda_threshold},
      {"eps_b_min_ratio", &SolverConfig::eps_b_min_ratio},
      {"infeasible_escalation", &SolverConfig::infeasible_escalation},
      {"eps_b_max_ratio", &SolverConfig::eps_b_max_ratio},
  };
  return table;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* what) {
  throw InvalidConfig("config field '" + key + "': cannot parse '" + value + "' as " + what);
}

double parse_double(const std::string& key, const std::string& value) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (value.empty() || end != value.c_str() + value.size() || errno == ERANGE) {
    bad_value(key, value, "a real number");
  }
  return v;
}

long long parse_integer(const std::string& key, const std::string& value) {
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(value.c_str(), &end, 10);
  if (value.empty() || end != value.c_str() + value.size() || errno == ERANGE) {
    bad_value(key, value, "an integer");
  }
  return v;
}

void require(bool ok, const std::string& field, const std::string& range, double value) {
  if (!ok) throw InvalidConfig("config field '" + field + "' = " + fmt(value) + " outside " + range);
}

/// Forces the model constants to the observed center values so that s = 0 is
/// always feasible for the constraint models of a feasible iterate.
void pin_center(ModelBundle& models, const InterpolationSet& set) {
  models.f.c0 = set.f_center();
  const Vector c = set.c_center();
  for (std::size_t i = 0; i < models.c.size(); ++i) models.c[i].c0 = c[static_cast<Eigen::Index>(i)];
}

void rebuild_fully_linear(TrustRegionState& state, ProblemRef problem, EvalCounter& counter,
                          const SolverConfig& config) {
  ImprovedSet improved = ensure_fully_linear(std::move(state.set), problem, counter, state.rho,
                                             config.geometry());
  state.set = std::move(improved.set);
  state.models = std::move(improved.models);
  pin_center(state.models, state.set);
}

/// Model rebuild after an accepted step: points far outside the new region
/// are dropped while at least n+1 remain; geometry is only repaired when the
/// system turns singular.
void rebuild_after_success(TrustRegionState& state, ProblemRef problem, EvalCounter& counter,
                           const SolverConfig& config) {
  const double limit = config.scale_factor * state.rho;
  while (state.set.size() > state.set.min_size()) {
    std::size_t far = state.set.size();
    double dist = limit;
    for (std::size_t i = 0; i < state.set.size(); ++i) {
      if (i == state.set.center_index()) continue;
      const double d = state.set.distance_to_center(i);
      if (d > dist) {
        dist = d;
        far = i;
      }
    }
    if (far == state.set.size()) break;
    state.set.remove(far);
  }
  try {
    state.models = build_models(state.set);
    pin_center(state.models, state.set);
  } catch (const SingularGeometry&) {
    rebuild_fully_linear(state, problem, counter, config);
  }
}

/// A Hessian norm says something about noise only when the set determines a
/// full quadratic (minimum-norm Hessians of smaller sets swing with the
/// geometry) and its contribution over the trust region stands out from
/// round-off in the model values.
std::vector<bool> hessian_significance(const ModelBundle& models, const InterpolationSet& set,
                                       double rho) {
  std::vector<bool> out;
  const bool determined = set.size() >= set.max_size();
  auto check = [rho, determined](const QuadraticModel& m) {
    const double h = m.hessian_norm();
    const double scale = std::max({std::abs(m.c0), m.g.norm() * rho, 1e-300});
    return determined && h > 0.0 && h * rho * rho > 1e-10 * scale;
  };
  out.push_back(check(models.f));
  for (const auto& c : models.c) out.push_back(check(c));
  return out;
}

double decrease_floor(double f) { return 1e-14 * std::max(1.0, std::abs(f)); }

}  // namespace

void SolverConfig::validate() const {
  require(gamma_inc > 1.0, "gamma_inc", "(1, inf)", gamma_inc);
  require(gamma > 0.0 && gamma < 1.0, "gamma", "(0, 1)", gamma);
  require(omega > 0.0 && omega < 1.0, "omega", "(0, 1)", omega);
  require(eta_0 >= 0.0 && eta_0 <= eta_1, "eta_0", "[0, eta_1]", eta_0);
  require(eta_1 > 0.0 && eta_1 < 1.0, "eta_1", "(0, 1)", eta_1);
  require(eps_b > 0.0, "eps_b", "(0, inf)", eps_b);
  require(eps_c > 0.0, "eps_c", "(0, inf)", eps_c);
  require(mu > 0.0, "mu", "(0, inf)", mu);
  require(p >= 0.0 && p < 1.0, "p", "[0, 1)", p);
  require(q >= 0.0 && q < 1.0, "q", "[0, 1)", q);
  require(rho_min > 0.0, "rho_min", "(0, rho_0)", rho_min);
  require(rho_min < rho_0, "rho_min", "(0, rho_0)", rho_min);
  require(rho_0 <= rho_max, "rho_0", "(rho_min, rho_max]", rho_0);
  require(mu_1 > 0.0 && mu_1 < 1.0, "mu_1", "(0, 1)", mu_1);
  require(max_evals > 0, "max_evals", "[1, inf)", static_cast<double>(max_evals));
  require(feasibility_margin >= 0.0, "feasibility_margin", "[0, inf)", feasibility_margin);
  require(noise_window >= 3, "noise_window", "[3, inf)", noise_window);
  require(tau_threshold > 0.0, "tau_threshold", "(0, inf)", tau_threshold);
  require(nc_limit >= 1, "nc_limit", "[1, inf)", nc_limit);
  require(scale_factor >= 1.0, "scale_factor", "[1, inf)", scale_factor);
  require(lambda_threshold > 1.0, "lambda_threshold", "(1, inf)", lambda_threshold);
  require(eps_b_min_ratio > 0.0 && eps_b_min_ratio <= 1.0, "eps_b_min_ratio", "(0, 1]",
          eps_b_min_ratio);
  require(infeasible_escalation >= 1, "infeasible_escalation", "[1, inf)", infeasible_escalation);
  require(eps_b_max_ratio >= 1.0, "eps_b_max_ratio", "[1, inf)", eps_b_max_ratio);
}

const char* to_string(StepStatus status) {
  switch (status) {
    case StepStatus::successful: return "successful";
    case StepStatus::acceptable: return "acceptable";
    case StepStatus::rejected: return "rejected";
    case StepStatus::infeasible_trial: return "infeasible_trial";
    case StepStatus::criticality_shrink: return "criticality_shrink";
    case StepStatus::noise_terminated: return "noise_terminated";
  }
  return "unknown";
}

const char* to_string(NoiseClass c) {
  switch (c) {
    case NoiseClass::convergent: return "convergent";
    case NoiseClass::non_convergent: return "non_convergent";
    case NoiseClass::insufficient_data: return "insufficient_data";
  }
  return "unknown";
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::rho_min: return "rho_min";
    case Termination::max_evals: return "max_evals";
    case Termination::noise_detected: return "noise_detected";
    case Termination::improvement_stalled: return "improvement_stalled";
  }
  return "unknown";
}

std::optional<double> regression_slope(const std::deque<NoiseIndicatorState::Sample>& samples) {
  if (samples.size() < 3) return std::nullopt;
  const double m = static_cast<double>(samples.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& s : samples) {
    sx += -std::log(s.rho);
    sy += std::log(s.hessian_norm);
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& s : samples) {
    const double dx = -std::log(s.rho) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(s.hessian_norm) - my);
  }
  if (sxx <= 1e-12 * m) return std::nullopt;
  return sxy / sxx;
}

NoiseClass noise_indicator_update(NoiseIndicatorState& state, bool rejected, double rho,
                                  const std::vector<double>& hessian_norms,
                                  const SolverConfig& config,
                                  const std::vector<bool>& significant) {
  if (!rejected) return state.last;
  if (state.samples.size() < hessian_norms.size()) {
    state.samples.resize(hessian_norms.size());
    state.tau.resize(hessian_norms.size());
  }
  const auto window = static_cast<std::size_t>(config.noise_window);
  for (std::size_t j = 0; j < hessian_norms.size(); ++j) {
    const bool use = hessian_norms[j] > 0.0 && std::isfinite(hessian_norms[j]) &&
                     (significant.empty() || significant[j]);
    if (use) {
      state.samples[j].push_back({rho, hessian_norms[j]});
      while (state.samples[j].size() > window) state.samples[j].pop_front();
    }
    state.tau[j] = regression_slope(state.samples[j]);
  }

  bool any = false, nc = false;
  for (const auto& t : state.tau) {
    if (!t) continue;
    any = true;
    if (*t >= config.tau_threshold) nc = true;
  }
  if (nc) {
    ++state.consecutive_nc;
    state.last = NoiseClass::non_convergent;
  } else {
    state.consecutive_nc = 0;
    state.last = any ? NoiseClass::convergent : NoiseClass::insufficient_data;
  }
  return state.last;
}

double acceptance_ratio(double f_old, double f_new, double m_old, double m_new,
                        double denom_floor) {
  const double denom = m_old - m_new;
  if (!(denom > denom_floor)) return -std::numeric_limits<double>::infinity();
  return (f_old - f_new) / denom;
}

double trust_region_update(double rho, double r_k, const SolverConfig& config) {
  double next = rho;
  if (r_k >= config.eta_1) {
    next = config.gamma_inc * rho;
  } else if (r_k < config.eta_0) {
    next = config.gamma * rho;
  }
  return std::min(next, config.rho_max);
}

StepStatus classify_step(double r_k, const SolverConfig& config) {
  if (r_k >= config.eta_1) return StepStatus::successful;
  if (r_k >= config.eta_0) return StepStatus::acceptable;
  return StepStatus::rejected;
}

void TrustRegionState::record(StepStatus status, std::optional<double> r_k, long evals) {
  IterationRecord rec;
  rec.k = k;
  rec.x = x;
  rec.f = f;
  rec.rho = rho;
  rec.alpha = alpha;
  rec.r_k = r_k;
  rec.status = status;
  rec.hessian_norms = models.hessian_norms();
  rec.evals_so_far = evals;
  rec.set_size = set.size();
  history.push_back(std::move(rec));
}

TrustRegionState initialize(ProblemRef problem, const SolverConfig& config, EvalCounter& counter) {
  const BlackBoxProblem& info = problem.info();
  if (info.x0.size() != info.n) throw DimensionMismatch("x0 has the wrong dimension");
  const Evaluation e0 = evaluate(problem, info.x0, counter);
  if (!satisfies_constraints(e0.c, 0.0)) {
    throw InfeasibleStart("initial point violates constraint(s) of problem '" + info.name + "'");
  }
  TrustRegionState state;
  state.x = info.x0;
  state.f = e0.f;
  state.c = e0.c;
  state.rho = config.rho_0;
  state.ibp = {config.eps_b, config.eps_b, config.p};
  state.set = InterpolationSet(info.x0, e0);
  rebuild_fully_linear(state, problem, counter, config);
  return state;
}

double criticality_measure(const TrustRegionState& state) {
  SubproblemSpec spec;
  spec.objective = LinearObjective{state.models.f.g};
  spec.constraint_models = state.models.c;
  spec.ibp = state.ibp;
  spec.radius = state.rho;
  return solve_criticality(state.models.f.g, spec);
}

TrustRegionState criticality_step(TrustRegionState state, const SolverConfig& config,
                                  ProblemRef problem, EvalCounter& counter) {
  if (state.alpha > config.eps_c) return state;
  while (state.rho >= config.rho_min) {
    const bool fully_linear = is_fully_linear(state.set, state.rho, config.geometry());
    if (fully_linear && state.rho <= config.mu * state.alpha) break;
    state.rho *= config.omega;
    rebuild_fully_linear(state, problem, counter, config);
    state.alpha = criticality_measure(state);
    state.record(StepStatus::criticality_shrink, std::nullopt, static_cast<long>(counter.count()));
  }
  return state;
}

TrialStep compute_trial_step(const TrustRegionState& state, const SolverConfig& config) {
  SubproblemSpec spec;
  spec.objective = state.models.f;
  spec.constraint_models = state.models.c;
  spec.ibp = state.ibp;
  spec.radius = state.rho;
  TrialStep step;
  step.solution = solve_trial_step(spec);
  step.model_decrease = -step.solution.objective_value;
  step.sufficient_decrease = step.model_decrease >= config.mu_1 * state.alpha * state.rho;
  return step;
}

TrialCheck check_trial_feasibility(TrustRegionState& state, const Vector& s, ProblemRef problem,
                                   EvalCounter& counter, const SolverConfig& config) {
  const Vector x_new = state.x + s;
  TrialCheck check;
  check.value = evaluate(problem, x_new, counter);
  check.feasible = satisfies_constraints(check.value.c, config.feasibility_margin);
  if (check.feasible) {
    state.consecutive_infeasible = 0;
    return check;
  }

  state.set = update_set_after_step(std::move(state.set), x_new, check.value, false, state.rho);
  if (++state.consecutive_infeasible >= config.infeasible_escalation) {
    const double cap = config.eps_b_max_ratio * config.eps_b;
    state.ibp.eps_b = std::min(2.0 * state.ibp.eps_b, cap);
    state.ibp.eps_b_k = std::min(2.0 * state.ibp.eps_b_k, cap);
    state.consecutive_infeasible = 0;
  }
  state.rho *= config.gamma;
  rebuild_fully_linear(state, problem, counter, config);
  state.record(StepStatus::infeasible_trial, std::nullopt, static_cast<long>(counter.count()));
  return check;
}

OptimizationResult optimize(ProblemRef problem, const SolverConfig& config) {
  EvalCounter counter;
  return optimize(problem, config, counter);
}

OptimizationResult optimize(ProblemRef problem, const SolverConfig& config, EvalCounter& counter) {
  config.validate();
  TrustRegionState state = initialize(problem, config, counter);
  const auto evals = [&] { return static_cast<long>(counter.count()); };
  const auto budget_spent = [&] { return evals() >= config.max_evals; };

  OptimizationResult result;
  Termination term = Termination::rho_min;
  try {
    while (true) {
      if (budget_spent()) {
        term = Termination::max_evals;
        break;
      }
      // criticality
      state.alpha = criticality_measure(state);
      state = criticality_step(std::move(state), config, problem, counter);
      if (state.rho < config.rho_min) {
        term = Termination::rho_min;
        break;
      }

      // trial step, repeated after infeasible trials
      TrialStep trial;
      TrialCheck check;
      bool degenerate = false;
      bool stop = false;
      while (true) {
        trial = compute_trial_step(state, config);
        if (!(trial.model_decrease > decrease_floor(state.f))) {
          degenerate = true;
          break;
        }
        check = check_trial_feasibility(state, trial.solution.s, problem, counter, config);
        if (check.feasible) break;
        if (state.rho < config.rho_min) {
          term = Termination::rho_min;
          stop = true;
        } else if (budget_spent()) {
          term = Termination::max_evals;
          stop = true;
        }
        if (stop) break;
        state.alpha = criticality_measure(state);
      }
      if (stop) break;

      // acceptance
      const Vector s = trial.solution.s;
      const double rho_k = state.rho;
      double r_k = -std::numeric_limits<double>::infinity();
      if (!degenerate) {
        r_k = acceptance_ratio(state.f, check.value.f, state.models.f.c0,
                               state.models.f.value(s), decrease_floor(state.f));
      }
      const StepStatus status = classify_step(r_k, config);
      const bool accepted = status != StepStatus::rejected;
      const std::vector<double> norms = state.models.hessian_norms();
      const std::vector<bool> significant = hessian_significance(state.models, state.set, rho_k);

      if (!degenerate) {
        state.set =
            update_set_after_step(std::move(state.set), state.x + s, check.value, accepted, rho_k);
      }
      if (accepted) {
        state.x = state.set.center();
        state.f = check.value.f;
        state.c = check.value.c;
      }

      // radius and inner boundary path update
      state.rho = trust_region_update(rho_k, r_k, config);
      state.ibp = adapt_eps_b(state.ibp, s.norm(), rho_k, config.eps_b_min_ratio);

      // Hessian samples describe one intermediate point; progress starts over
      if (accepted) state.noise = NoiseIndicatorState{};
      const NoiseClass noise = noise_indicator_update(
          state.noise, status == StepStatus::rejected, rho_k, norms, config, significant);

      // model improvement
      if (accepted) {
        rebuild_after_success(state, problem, counter, config);
      } else {
        rebuild_fully_linear(state, problem, counter, config);
      }
      state.record(status, degenerate ? std::nullopt : std::optional<double>(r_k), evals());
      state.history.back().sufficient_decrease = trial.sufficient_decrease;
      state.history.back().subsolver_converged = trial.solution.converged;
      ++state.k;

      if (config.early_termination && noise == NoiseClass::non_convergent &&
          state.noise.consecutive_nc >= config.nc_limit) {
        state.record(StepStatus::noise_terminated, std::nullopt, evals());
        term = Termination::noise_detected;
        break;
      }
      if (state.rho < config.rho_min) {
        term = Termination::rho_min;
        break;
      }
    }
  } catch (const ImprovementStalled& e) {
    term = Termination::improvement_stalled;
    result.message = e.what();
  } catch (const SingularGeometry& e) {
    term = Termination::improvement_stalled;
    result.message = e.what();
  }

  result.x_best = state.x;
  result.f_best = state.f;
  result.c_best = state.c;
  result.history = std::move(state.history);
  result.termination = term;
  result.evaluations = evals();
  result.final_rho = state.rho;
  return result;
}

void write_config(std::ostream& os, const SolverConfig& config, const std::string& prefix) {
  for (const auto& field : fields()) {
    os << prefix << field.name << " = ";
    std::visit(
        [&](auto ptr) {
          using T = std::decay_t<decltype(config.*ptr)>;
          if constexpr (std::is_same_v<T, double>) {
            os << fmt(config.*ptr);
          } else if constexpr (std::is_same_v<T, bool>) {
            os << (config.*ptr ? "true" : "false");
          } else {
            os << config.*ptr;
          }
        },
        field.ptr);
    os << '\n';
  }
}

void write_history(std::ostream& os, const OptimizationResult& result,
                   const SolverConfig& config, const std::string& problem_name) {
  os << "# problem = " << problem_name << '\n';
  write_config(os, config, "# ");
  os << "# terminated_by = " << to_string(result.termination) << '\n';
  os << "# evaluations = " << result.evaluations << '\n';
  os << "# k,status,rho,alpha,r_k,f,x..,Hf_norm,Hc_norm..\n";
  for (const auto& rec : result.history) {
    os << rec.k << ',' << to_string(rec.status) << ',' << fmt(rec.rho) << ',' << fmt(rec.alpha)
       << ',' << (rec.r_k ? fmt(*rec.r_k) : std::string("NA")) << ',' << fmt(rec.f);
    for (Eigen::Index i = 0; i < rec.x.size(); ++i) os << ',' << fmt(rec.x[i]);
    for (double h : rec.hessian_norms) os << ',' << fmt(h);
    os << '\n';
  }
}

void set_config_field(SolverConfig& config, const std::string& key, const std::string& value) {
  for (const auto& field : fields()) {
    if (key != field.name) continue;
    std::visit(
        [&](auto ptr) {
          using T = std::decay_t<decltype(config.*ptr)>;
          if constexpr (std::is_same_v<T, double>) {
            config.*ptr = parse_double(key, value);
          } else if constexpr (std::is_same_v<T, bool>) {
            if (value == "true" || value == "1") {
              config.*ptr = true;
            } else if (value == "false" || value == "0") {
              config.*ptr = false;
            } else {
              bad_value(key, value, "a boolean");
            }
          } else if constexpr (std::is_same_v<T, std::uint64_t>) {
            if (!value.empty() && value[0] == '-') bad_value(key, value, "a nonnegative integer");
            errno = 0;
            char* end = nullptr;
            const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
            if (value.empty() || end != value.c_str() + value.size() || errno == ERANGE) {
              bad_value(key, value, "a nonnegative integer");
            }
            config.*ptr = static_cast<T>(v);
          } else {
            const long long v = parse_integer(key, value);
            if (v < std::numeric_limits<T>::min() || v > std::numeric_limits<T>::max()) {
              bad_value(key, value, "an integer in range");
            }
            config.*ptr = static_cast<T>(v);
          }
        },
        field.ptr);
    return;
  }
  throw InvalidConfig("unknown config field '" + key + "'");
}

std::vector<std::string> config_field_names() {
  std::vector<std::string> out;
  for (const auto& field : fields()) out.emplace_back(field.name);
  return out;
}

}  // namespace nowpac
