// Benchmark driver: nlmin run <plaplace|gl|hyper> [options]

#include <CLI11.hpp>

#include <charconv>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "nlmin/report.hpp"

namespace {

int parse_int(const std::string& s) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw CLI::ValidationError("--levels", "not an integer: " + s);
  return value;
}

/// "3", "1..4" or "1,3,5"
std::vector<int> parse_levels(const std::string& spec) {
  std::vector<int> levels;
  if (const auto dots = spec.find(".."); dots != std::string::npos) {
    const int lo = parse_int(spec.substr(0, dots));
    const int hi = parse_int(spec.substr(dots + 2));
    for (int l = lo; l <= hi; ++l) levels.push_back(l);
  } else {
    std::size_t start = 0;
    while (start <= spec.size()) {
      const std::size_t comma = spec.find(',', start);
      levels.push_back(parse_int(spec.substr(start, comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  if (levels.empty()) throw CLI::ValidationError("--levels", "empty level range: " + spec);
  for (const int l : levels) {
    if (l < 1) throw CLI::ValidationError("--levels", "levels start at 1");
  }
  return levels;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Newton minimization of finite element energies"};
  app.require_subcommand(1);

  CLI::App* run = app.add_subcommand("run", "run a benchmark and print its table");
  std::string name;
  std::string levels = "1";
  std::string solver = "auto";
  std::string format = "text";
  std::string export_path;
  std::string export_format = "csv";
  nlmin::RunOptions options;

  run->add_option("benchmark", name, "plaplace, gl or hyper")
      ->required()
      ->check(CLI::IsMember({"plaplace", "gl", "hyper"}));
  run->add_option("--levels,--level", levels, "level, range a..b or list a,b,c")->capture_default_str();
  run->add_option("--tol-grad", options.newton.grad_tol, "gradient tolerance, scaled by 1+|J|")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run->add_option("--tol-energy", options.newton.energy_tol, "relative energy decrease tolerance")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run->add_option("--max-iters", options.newton.max_iters, "Newton iteration limit")->capture_default_str();
  run->add_option("--solver", solver, "linear solver")
      ->check(CLI::IsMember({"auto", "direct", "amg", "diag-cg"}))
      ->capture_default_str();
  run->add_option("--format", format, "table format")
      ->check(CLI::IsMember({"text", "csv", "json"}))
      ->capture_default_str();
  run->add_option("--export", export_path, "write the finest level's solution to this file");
  run->add_option("--export-format", export_format, "solution file format")
      ->check(CLI::IsMember({"csv", "vtk", "vtk-legacy"}))
      ->capture_default_str();
  run->add_option("--steps", options.hyper_steps, "load steps of the bar benchmark")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run->add_flag("--parallel-levels", options.parallel_levels, "run levels concurrently");
  bool log = false;
  run->add_flag("--log", log, "print one line per Newton step to stderr");

  try {
    app.parse(argc, argv);
    options.levels = parse_levels(levels);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  options.newton.linear.choice = nlmin::solver_choice_from_string(solver);
  const nlmin::Benchmark kind = nlmin::benchmark_from_string(name);
  const nlmin::TableFormat table = nlmin::table_format_from_string(format);

  if (log) {
    options.on_iteration = [](int level, const nlmin::IterationRecord& r) {
      std::cerr << std::setprecision(12) << "level " << level << " it " << r.iteration << " J " << r.energy << " |g| " << r.grad_norm
                << " alpha " << r.alpha << " " << nlmin::to_string(r.path) << " inner " << r.inner_iterations
                << " shift " << r.shift << '\n';
    };
  }

  nlmin::BenchmarkReport report;
  try {
    report = nlmin::run_benchmark(kind, options);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  if (table != nlmin::TableFormat::Text) std::cerr << "# " << report.config << '\n';
  nlmin::report_table(report, table, std::cout);

  if (!export_path.empty() && !report.solutions.empty() && report.solutions.back().problem) {
    const nlmin::LevelSolution& last = report.solutions.back();
    try {
      nlmin::export_solution(*last.problem, last.u_star, export_path,
                             nlmin::export_format_from_string(export_format));
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 1;
    }
  }

  if (!report.complete) {
    std::cerr << "not converged: " << report.error << '\n';
    return 2;
  }
  return 0;
}
