#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "nowpac/cli.hpp"
#include "nowpac/errors.hpp"

using namespace nowpac;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::initializer_list<const char*> args) {
  std::vector<const char*> argv{"nowpac"};
  argv.insert(argv.end(), args.begin(), args.end());
  std::ostringstream out, err;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

CliInvocation parse(std::initializer_list<const char*> args) {
  std::vector<const char*> argv{"nowpac"};
  argv.insert(argv.end(), args.begin(), args.end());
  return parse_args(static_cast<int>(argv.size()), argv.data());
}

std::string last_line(const std::string& text) {
  const auto end = text.find_last_not_of('\n');
  const auto start = text.rfind('\n', end);
  return text.substr(start == std::string::npos ? 0 : start + 1, end - (start == std::string::npos ? 0 : start + 1) + 1);
}

}  // namespace

TEST_CASE("parse solve with overrides") {
  const CliInvocation inv = parse({"solve", "rosenbrock", "--set", "rho_min=1e-5", "--set", "eta_1=0.8"});
  CHECK(inv.subcommand == Subcommand::solve);
  CHECK(inv.problems == std::vector<std::string>{"rosenbrock"});
  CHECK(inv.config.rho_min == 1e-5);
  CHECK(inv.config.eta_1 == 0.8);
  CHECK(inv.overrides.size() == 2);
}

TEST_CASE("range and usage errors") {
  CHECK_THROWS_AS(parse({"solve", "rosenbrock", "--set", "gamma=1.5"}), InvalidConfig);
  CHECK_THROWS_AS(parse({"solve", "rosenbrock", "--set", "bogus=1"}), InvalidConfig);
  CHECK_THROWS_AS(parse({"solve", "rosenbrock", "--set", "gamma"}), UsageError);
  CHECK_THROWS_AS(parse({"solve"}), UsageError);
  CHECK_THROWS_AS(parse({"frobnicate"}), UsageError);
  CHECK_THROWS_AS(parse({"bench", "--format", "xml"}), UsageError);
  CHECK_THROWS_AS(parse({"solve", "hs999"}), UsageError);
  CHECK_THROWS_AS(parse({"bench", "--replicates", "0"}), UsageError);
}

TEST_CASE("parse bench and sweep") {
  const CliInvocation bench = parse({"bench", "--format", "csv"});
  CHECK(bench.subcommand == Subcommand::bench);
  CHECK(bench.problems.empty());
  CHECK(bench.format == TableFormat::csv);
  CHECK(bench.replicates == 1);

  const CliInvocation sweep = parse({"sweep", "rosenbrock", "--noise-f", "1e-2,1e-3", "--seed", "9",
                                     "--format", "markdown", "--no-early-termination"});
  CHECK(sweep.noise_f == std::vector<double>{1e-2, 1e-3});
  CHECK(sweep.config.seed == 9);
  CHECK(sweep.format == TableFormat::markdown);
  CHECK_FALSE(sweep.config.early_termination);
  CHECK(sweep.replicates == 100);
}

TEST_CASE("config file then overrides") {
  const auto path = std::filesystem::temp_directory_path() / "nowpac_cli_test.cfg";
  {
    std::ofstream os(path);
    os << "# comment\n"
       << "gamma = 0.5\n"
       << "\n"
       << "eta_1 = 0.9  # trailing comment\n";
  }
  const std::string p = path.string();
  const CliInvocation inv = parse({"solve", "rosenbrock", "--config", p.c_str(), "--set", "eta_1=0.75"});
  CHECK(inv.config.gamma == 0.5);
  CHECK(inv.config.eta_1 == 0.75);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(parse({"solve", "rosenbrock", "--config", "/nonexistent/file"}), UsageError);
}

TEST_CASE("output directory falls back to the environment") {
  ::setenv("NOWPAC_OUT", "/tmp/from_env", 1);
  CHECK(parse({"solve", "rosenbrock"}).output_dir == "/tmp/from_env");
  CHECK(parse({"solve", "rosenbrock", "--out", "/tmp/flag"}).output_dir == "/tmp/flag");
  ::unsetenv("NOWPAC_OUT");
  CHECK(parse({"solve", "rosenbrock"}).output_dir.empty());
}

TEST_CASE("solve prints the termination reason last") {
  const Run r = run({"solve", "rosenbrock"});
  CHECK(r.code == 0);
  CHECK(last_line(r.out) == "terminated_by=rho_min");
  CHECK(r.out.find("evaluations=") != std::string::npos);
}

TEST_CASE("exit codes") {
  CHECK(run({"solve", "hs999"}).code == 2);
  CHECK(run({"solve", "rosenbrock", "--set", "gamma=1.5"}).code == 2);
  CHECK(run({"solve", "rosenbrock", "--set", "rho_min=1"}).code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("solve writes a history file echoing every setting") {
  const auto dir = std::filesystem::temp_directory_path() / "nowpac_cli_hist";
  std::filesystem::remove_all(dir);
  const std::string d = dir.string();
  const Run r = run({"solve", "hs227", "--out", d.c_str(), "--seed", "3", "--set", "eta_0=0.05"});
  REQUIRE(r.code == 0);
  const auto file = dir / "hs227_1e-05_3.hist";
  REQUIRE(std::filesystem::exists(file));
  std::ifstream is(file);
  std::stringstream text;
  text << is.rdbuf();
  for (const auto& key : config_field_names()) CHECK(text.str().find("# " + key + " = ") != std::string::npos);
  CHECK(text.str().find("# eta_0 = 0.050000000000000003") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("bench and sweep emit one row per case") {
  const Run bench = run({"bench", "hs227", "hs228", "--sc", "1e-3", "--format", "csv"});
  CHECK(bench.code == 0);
  std::istringstream is(bench.out);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(is, line)) lines.push_back(line);
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "case,SC,n_evals,d_x,d_f_abs,d_f_rel,n_saved,terminated_by");
  CHECK(lines[1].rfind("hs227,0.001,", 0) == 0);

  const Run sweep = run({"sweep", "rosenbrock", "--noise-f", "1e-2,1e-3", "--replicates", "3"});
  CHECK(sweep.code == 0);
  std::istringstream ss(sweep.out);
  std::size_t rows = 0;
  while (std::getline(ss, line)) ++rows;
  CHECK(rows == 3);
  CHECK(sweep.out.find("rosenbrock_df0.01,") != std::string::npos);
}
