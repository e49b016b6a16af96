#include "nowpac/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>

#include <CLI11.hpp>

#include "nowpac/errors.hpp"

namespace nowpac {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::pair<std::string, std::string> split_assignment(const std::string& text,
                                                     const std::string& where) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) {
    throw UsageError(where + ": expected key=value, got '" + text + "'");
  }
  std::string key = trim(text.substr(0, eq));
  std::string value = trim(text.substr(eq + 1));
  if (key.empty()) throw UsageError(where + ": empty key in '" + text + "'");
  return {std::move(key), std::move(value)};
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string format_vector(const Vector& v) {
  std::string s;
  char buf[32];
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.10g", v[i]);
    if (i) s += ',';
    s += buf;
  }
  return s;
}

struct RawArgs {
  std::vector<std::string> problems;
  std::vector<std::string> sets;
  std::string config_file;
  std::string out;
  std::string format = "csv";
  std::optional<std::uint64_t> seed;
  std::vector<double> noise_f;
  std::optional<double> noise_c;
  std::optional<int> replicates;
  int threads = 1;
  bool no_early_termination = false;
  std::vector<double> sc;
};

void add_common(CLI::App& cmd, RawArgs& raw) {
  cmd.add_option("--set", raw.sets, "Override a solver parameter, key=value (repeatable)")
      ->allow_extra_args(false);
  cmd.add_option("--config", raw.config_file, "File of key = value lines");
  cmd.add_option("--out", raw.out, "Directory for history files (default: $NOWPAC_OUT)");
  cmd.add_option("--seed", raw.seed, "Random seed");
  cmd.add_option("--noise-c", raw.noise_c, "Constraint noise half-width")
      ->check(CLI::NonNegativeNumber);
  cmd.add_flag("--no-early-termination", raw.no_early_termination,
               "Disable noise-based early termination");
}

void add_table(CLI::App& cmd, RawArgs& raw) {
  cmd.add_option("--format", raw.format, "Table format")
      ->check(CLI::IsMember({"csv", "markdown"}));
  cmd.add_option("--replicates", raw.replicates, "Runs per case")->check(CLI::PositiveNumber);
  cmd.add_option("--threads", raw.threads, "Worker threads")->check(CLI::PositiveNumber);
}

int finish_bench(const std::vector<BenchmarkResult>& rows, const std::vector<bool>& infeasible,
                 TableFormat format, std::ostream& out, std::ostream& err) {
  out << emit_table(rows, format);
  int code = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].terminated_by.rfind("error:", 0) == 0) {
      err << rows[i].case_name << ": " << rows[i].terminated_by << '\n';
      code = 1;
    }
    if (infeasible[i]) {
      err << rows[i].case_name << ": an accepted iterate violates the true constraints\n";
      code = 1;
    }
  }
  return code;
}

BenchmarkOptions bench_options(const CliInvocation& inv) {
  BenchmarkOptions opts;
  opts.history_dir = inv.output_dir;
  opts.threads = inv.threads;
  return opts;
}

bool any_infeasible(const std::vector<BenchmarkResult>& results) {
  for (const auto& r : results) {
    if (!r.feasible_history) return true;
  }
  return false;
}

int run_solve(const CliInvocation& inv, std::ostream& out) {
  const BlackBoxProblem problem = problem_by_name(inv.problems.front());
  const double delta_f = inv.noise_f.empty() ? 0.0 : inv.noise_f.front();
  OptimizationResult result;
  if (delta_f > 0.0 || inv.noise_c > 0.0) {
    NoisyProblem noisy(problem, delta_f, inv.noise_c, inv.config.seed);
    result = optimize(noisy, inv.config);
  } else {
    result = optimize(problem, inv.config);
  }

  out << "problem=" << problem.name << '\n';
  out << "evaluations=" << result.evaluations << '\n';
  out << "x_best=" << format_vector(result.x_best) << '\n';
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", result.f_best);
  out << "f_best=" << buf << '\n';
  if (result.c_best.size() > 0) out << "c_best=" << format_vector(result.c_best) << '\n';
  std::snprintf(buf, sizeof buf, "%.6g", result.final_rho);
  out << "final_rho=" << buf << '\n';
  const ErrorMeasures m = error_measures(problem, result.x_best);
  if (m.d_x) out << "d_x=" << format_number(*m.d_x) << '\n';
  if (m.d_f_abs) out << "d_f_abs=" << format_number(*m.d_f_abs) << '\n';
  if (!result.message.empty()) out << "message=" << result.message << '\n';
  if (!inv.output_dir.empty()) {
    std::filesystem::create_directories(inv.output_dir);
    const auto path = std::filesystem::path(inv.output_dir) /
                      history_file_name(problem.name, inv.config.rho_min, inv.config.seed);
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path.string());
    write_history(os, result, inv.config, problem.name);
    out << "history=" << path.string() << '\n';
  }
  out << "terminated_by=" << to_string(result.termination) << '\n';
  return 0;
}

int run_bench(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
  const std::vector<std::string> names = inv.problems.empty() ? problem_names() : inv.problems;
  const std::vector<double> levels =
      inv.sc.empty() ? std::vector<double>{inv.config.rho_min} : inv.sc;
  const double delta_f = inv.noise_f.empty() ? 0.0 : inv.noise_f.front();
  std::vector<BenchmarkResult> rows;
  std::vector<bool> infeasible;
  for (const auto& name : names) {
    for (double sc : levels) {
      BenchmarkCase bc;
      bc.name = name;
      bc.problem = problem_by_name(name);
      bc.sc = sc;
      if (delta_f > 0.0 || inv.noise_c > 0.0) bc.noise = NoiseSpec{delta_f, inv.noise_c};
      bc.replicates = inv.replicates;
      bc.seed = inv.config.seed;
      const auto results = run_benchmark(bc, inv.config, bench_options(inv));
      rows.push_back(aggregate(results));
      infeasible.push_back(any_infeasible(results));
    }
  }
  return finish_bench(rows, infeasible, inv.format, out, err);
}

int run_sweep(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
  const std::string& name = inv.problems.front();
  const std::vector<double> levels =
      inv.noise_f.empty() ? std::vector<double>{1e-2, 1e-3, 1e-4, 1e-5} : inv.noise_f;
  std::vector<BenchmarkResult> rows;
  std::vector<bool> infeasible;
  for (double delta : levels) {
    BenchmarkCase bc;
    bc.name = name + "_df" + format_number(delta);
    bc.problem = problem_by_name(name);
    bc.sc = inv.config.rho_min;
    bc.noise = NoiseSpec{delta, inv.noise_c};
    bc.replicates = inv.replicates;
    bc.seed = inv.config.seed;
    const auto results = run_benchmark(bc, inv.config, bench_options(inv));
    rows.push_back(aggregate(results));
    infeasible.push_back(any_infeasible(results));
  }
  return finish_bench(rows, infeasible, inv.format, out, err);
}

}  // namespace

void apply_config_file(SolverConfig& config, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("--config: cannot open '" + path + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto [key, value] = split_assignment(line, path + ":" + std::to_string(lineno));
    set_config_field(config, key, value);
  }
}

CliInvocation parse_args(int argc, const char* const* argv) {
  RawArgs raw;
  CLI::App app{"Derivative-free constrained trust-region optimizer", "nowpac"};
  app.require_subcommand(1);

  CLI::App* solve = app.add_subcommand("solve", "Solve one problem");
  solve->add_option("problem", raw.problems, "Problem id")->required()->expected(1);
  add_common(*solve, raw);
  solve->add_option("--noise-f", raw.noise_f, "Objective noise half-width")
      ->check(CLI::NonNegativeNumber)
      ->expected(1);

  CLI::App* bench = app.add_subcommand("bench", "Run a benchmark suite");
  bench->add_option("problems", raw.problems, "Problem ids (default: all)");
  add_common(*bench, raw);
  add_table(*bench, raw);
  bench->add_option("--sc", raw.sc, "Stopping thresholds rho_min, comma separated")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  bench->add_option("--noise-f", raw.noise_f, "Objective noise half-width")
      ->check(CLI::NonNegativeNumber)
      ->expected(1);

  CLI::App* sweep = app.add_subcommand("sweep", "Noise-level sweep on one problem");
  sweep->add_option("problem", raw.problems, "Problem id")->required()->expected(1);
  add_common(*sweep, raw);
  add_table(*sweep, raw);
  sweep->add_option("--noise-f", raw.noise_f, "Objective noise half-widths, comma separated")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);

  CliInvocation inv;
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    inv.help = true;
    inv.help_text = app.help();
    return inv;
  } catch (const CLI::CallForAllHelp&) {
    inv.help = true;
    inv.help_text = app.help("", CLI::AppFormatMode::All);
    return inv;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }
  for (CLI::App* sub : {solve, bench, sweep}) {
    if (sub->parsed() && (sub->count("--help") > 0)) {
      inv.help = true;
      inv.help_text = sub->help();
      return inv;
    }
  }

  if (solve->parsed()) inv.subcommand = Subcommand::solve;
  if (bench->parsed()) inv.subcommand = Subcommand::bench;
  if (sweep->parsed()) inv.subcommand = Subcommand::sweep;

  for (const auto& name : raw.problems) {
    try {
      (void)problem_by_name(name);
    } catch (const UnknownProblemId& e) {
      throw UsageError(e.what());
    }
  }
  inv.problems = raw.problems;

  if (!raw.config_file.empty()) apply_config_file(inv.config, raw.config_file);
  for (const auto& text : raw.sets) {
    auto kv = split_assignment(text, "--set");
    set_config_field(inv.config, kv.first, kv.second);
    inv.overrides.push_back(std::move(kv));
  }
  if (raw.seed) inv.config.seed = *raw.seed;
  if (raw.no_early_termination) inv.config.early_termination = false;
  inv.config.validate();

  inv.output_dir = raw.out;
  if (inv.output_dir.empty()) {
    if (const char* env = std::getenv("NOWPAC_OUT")) inv.output_dir = env;
  }
  inv.format = raw.format == "markdown" ? TableFormat::markdown : TableFormat::csv;
  inv.sc = raw.sc;
  inv.noise_f = raw.noise_f;
  inv.noise_c = raw.noise_c.value_or(0.0);
  inv.threads = raw.threads;
  inv.replicates = raw.replicates.value_or(inv.subcommand == Subcommand::sweep ? 100 : 1);
  return inv;
}

int run_invocation(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
  if (inv.help) {
    out << inv.help_text;
    return 0;
  }
  switch (inv.subcommand) {
    case Subcommand::solve: return run_solve(inv, out);
    case Subcommand::bench: return run_bench(inv, out, err);
    case Subcommand::sweep: return run_sweep(inv, out, err);
  }
  return 2;
}

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CliInvocation inv;
  try {
    inv = parse_args(argc, argv);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const InvalidConfig& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  }
  try {
    return run_invocation(inv, out, err);
  } catch (const InvalidConfig& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const UnknownProblemId& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace nowpac
