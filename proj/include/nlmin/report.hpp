#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "nlmin/energies.hpp"
#include "nlmin/minimize.hpp"

namespace nlmin {

struct ReportRow {
  int level = 0;
  std::size_t dofs = 0;
  double setup_s = 0.0;
  double solve_s = 0.0;
  std::size_t iters = 0;
  double J = 0.0;
  int step = 0;  // load step, bar only
};

struct RunOptions {
  std::vector<int> levels{1};
  BenchmarkSettings settings;
  NewtonConfig newton;
  bool parallel_levels = false;
  int hyper_steps = 24;
  /// every this many load steps a bar row is reported
  int hyper_report_every = 3;
  /// called after every Newton step with the level being solved
  std::function<void(int level, const IterationRecord&)> on_iteration;
};

/// Final state of one level, kept for export.
struct LevelSolution {
  std::shared_ptr<const EnergyProblem> problem;
  std::vector<double> u_star;
};

struct BenchmarkReport {
  Benchmark kind = Benchmark::PLaplace;
  std::vector<ReportRow> rows;
  std::vector<LevelSolution> solutions;
  std::string config;
  bool complete = true;
  std::string error;
};

std::string config_echo(Benchmark kind, const RunOptions& options);

/// Builds and minimizes every requested level. A level that fails to
/// converge ends the run: the report keeps the rows finished so far and
/// sets complete = false.
BenchmarkReport run_benchmark(Benchmark kind, const RunOptions& options);

enum class TableFormat { Text, Csv, Json };
TableFormat table_format_from_string(std::string_view name);

void report_table(const BenchmarkReport& report, TableFormat format, std::ostream& out);

enum class ExportFormat { Csv, VtkLegacy };
ExportFormat export_format_from_string(std::string_view name);

/// Writes the full nodal field (Dirichlet values included).
void export_solution(const EnergyProblem& problem, std::span<const double> u_star, const std::string& path,
                     ExportFormat format);

}  // namespace nlmin
