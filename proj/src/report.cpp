#include "nlmin/report.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <future>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace nlmin {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string shortest(double x) {
  char buf[32];
  const auto end = std::to_chars(buf, buf + sizeof buf, x).ptr;
  return {buf, end};
}

std::string full_precision(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct LevelOutcome {
  std::vector<ReportRow> rows;
  LevelSolution solution;
  std::string error;
};

LevelOutcome run_level(Benchmark kind, int level, const RunOptions& options) {
  LevelOutcome out;
  const auto setup_start = Clock::now();
  auto problem = std::make_shared<EnergyProblem>(build_problem(kind, level, options.settings));
  const double setup_s = seconds_since(setup_start);
  out.solution.problem = problem;
  NewtonConfig newton = options.newton;
  if (options.on_iteration) {
    newton.observer = [&options, level](const IterationRecord& r) { options.on_iteration(level, r); };
  }

  try {
    if (kind == Benchmark::NeoHooke) {
      auto group_start = Clock::now();
      const auto on_step = [&](const ContinuationStep& step) {
        out.solution.u_star = step.result.u_star;
        if (step.step % options.hyper_report_every != 0) return;
        ReportRow row{level, problem->num_free(), setup_s, seconds_since(group_start), step.result.iterations,
                      step.result.J_star, step.step};
        out.rows.push_back(row);
        group_start = Clock::now();
      };
      out.solution.u_star = problem->initial_guess();
      continuation_hyperelastic(*problem, newton, options.hyper_steps, on_step);
    } else {
      const auto solve_start = Clock::now();
      const MinimizeResult result = newton_minimize(*problem, problem->initial_guess(), newton);
      out.rows.push_back({level, problem->num_free(), setup_s, seconds_since(solve_start), result.iterations,
                          result.J_star, 0});
      out.solution.u_star = result.u_star;
    }
  } catch (const std::exception& e) {
    out.error = "level " + std::to_string(level) + ": " + e.what();
  }
  return out;
}

}  // namespace

std::string config_echo(Benchmark kind, const RunOptions& options) {
  std::ostringstream os;
  os << "benchmark=" << to_string(kind) << " levels=";
  for (std::size_t i = 0; i < options.levels.size(); ++i) os << (i ? "," : "") << options.levels[i];
  const NewtonConfig& n = options.newton;
  os << " tol_grad=" << shortest(n.grad_tol) << " tol_energy=" << shortest(n.energy_tol) << " max_iters=" << n.max_iters
     << " solver=" << to_string(n.linear.choice) << " direct_threshold=" << n.linear.direct_threshold
     << " rtol=" << shortest(n.linear.rtol) << " maxiter=" << n.linear.maxiter << " alpha_max=" << shortest(n.linesearch.alpha_max);
  const BenchmarkSettings& s = options.settings;
  switch (kind) {
    case Benchmark::PLaplace: os << " p=" << shortest(s.p) << " f=" << shortest(s.load); break;
    case Benchmark::GinzburgLandau: os << " eps=" << shortest(s.eps); break;
    case Benchmark::NeoHooke:
      os << " E=" << shortest(s.young) << " nu=" << shortest(s.poisson) << " steps=" << options.hyper_steps;
      break;
  }
  return os.str();
}

BenchmarkReport run_benchmark(Benchmark kind, const RunOptions& options) {
  for (const int level : options.levels) {
    if (level < 1) throw std::invalid_argument("run_benchmark: level must be >= 1, got " + std::to_string(level));
  }
  BenchmarkReport report;
  report.kind = kind;
  report.config = config_echo(kind, options);

  std::vector<LevelOutcome> outcomes;
  if (options.parallel_levels) {
    std::vector<std::future<LevelOutcome>> futures;
    for (const int level : options.levels) {
      futures.push_back(std::async(std::launch::async, run_level, kind, level, std::cref(options)));
    }
    for (auto& f : futures) outcomes.push_back(f.get());
  } else {
    for (const int level : options.levels) {
      outcomes.push_back(run_level(kind, level, options));
      if (!outcomes.back().error.empty()) break;
    }
  }

  for (auto& outcome : outcomes) {
    report.rows.insert(report.rows.end(), outcome.rows.begin(), outcome.rows.end());
    report.solutions.push_back(std::move(outcome.solution));
    if (!outcome.error.empty()) {
      report.complete = false;
      report.error = outcome.error;
      break;
    }
  }
  return report;
}

TableFormat table_format_from_string(std::string_view name) {
  if (name == "text") return TableFormat::Text;
  if (name == "csv") return TableFormat::Csv;
  if (name == "json") return TableFormat::Json;
  throw std::invalid_argument("unknown table format '" + std::string(name) + "'");
}

void report_table(const BenchmarkReport& report, TableFormat format, std::ostream& out) {
  const bool bar = report.kind == Benchmark::NeoHooke;
  switch (format) {
    case TableFormat::Text: {
      out << "# " << report.config << '\n';
      out << std::setw(8) << "dofs" << std::setw(11) << "setup_s" << std::setw(11) << "solve_s" << std::setw(7)
          << "iters" << std::setw(14) << "J";
      if (bar) out << std::setw(6) << "step";
      out << '\n';
      for (const ReportRow& r : report.rows) {
        out << std::setw(8) << r.dofs << std::fixed << std::setprecision(3) << std::setw(11) << r.setup_s
            << std::setw(11) << r.solve_s << std::setw(7) << r.iters << std::setprecision(4) << std::setw(14) << r.J;
        if (bar) out << std::setw(6) << r.step;
        out << '\n';
      }
      out.unsetf(std::ios::floatfield);
      if (!report.complete) out << "# incomplete: " << report.error << '\n';
      break;
    }
    case TableFormat::Csv: {
      out << "dofs,setup_s,solve_s,iters,J" << (bar ? ",step" : "") << '\n';
      for (const ReportRow& r : report.rows) {
        out << r.dofs << ',' << full_precision(r.setup_s) << ',' << full_precision(r.solve_s) << ',' << r.iters << ','
            << full_precision(r.J);
        if (bar) out << ',' << r.step;
        out << '\n';
      }
      break;
    }
    case TableFormat::Json: {
      nlohmann::ordered_json rows = nlohmann::ordered_json::array();
      for (const ReportRow& r : report.rows) {
        nlohmann::ordered_json row;
        row["dofs"] = r.dofs;
        row["setup_s"] = r.setup_s;
        row["solve_s"] = r.solve_s;
        row["iters"] = r.iters;
        row["J"] = r.J;
        if (bar) row["step"] = r.step;
        rows.push_back(std::move(row));
      }
      out << rows.dump(2) << '\n';
      break;
    }
  }
}

ExportFormat export_format_from_string(std::string_view name) {
  if (name == "csv") return ExportFormat::Csv;
  if (name == "vtk" || name == "vtk-legacy") return ExportFormat::VtkLegacy;
  throw std::invalid_argument("unknown export format '" + std::string(name) + "'");
}

void export_solution(const EnergyProblem& problem, std::span<const double> u_star, const std::string& path,
                     ExportFormat format) {
  const MeshData& mesh = problem.mesh();
  const std::size_t comps = problem.block_size();
  const std::vector<double> v = problem.dofmap().expand(u_star);
  const std::size_t dim = static_cast<std::size_t>(mesh.dim);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("export_solution: cannot open '" + path + "' for writing");

  if (format == ExportFormat::Csv) {
    static constexpr const char* axes[] = {"x", "y", "z"};
    for (std::size_t d = 0; d < dim; ++d) out << axes[d] << ',';
    if (comps == 1) {
      out << "u\n";
    } else {
      for (std::size_t c = 0; c < comps; ++c) out << "u_" << axes[c] << (c + 1 < comps ? "," : "\n");
    }
    for (std::size_t k = 0; k < mesh.num_nodes(); ++k) {
      for (const double x : mesh.node(k)) out << full_precision(x) << ',';
      for (std::size_t c = 0; c < comps; ++c) out << full_precision(v[comps * k + c]) << (c + 1 < comps ? "," : "\n");
    }
  } else {
    out << "# vtk DataFile Version 3.0\n"
        << to_string(problem.kind()) << " level " << problem.level() << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << mesh.num_nodes() << " double\n";
    for (std::size_t k = 0; k < mesh.num_nodes(); ++k) {
      const auto x = mesh.node(k);
      out << full_precision(x[0]) << ' ' << full_precision(x[1]) << ' ' << (dim == 3 ? full_precision(x[2]) : "0")
          << '\n';
    }
    const std::size_t npe = mesh.nodes_per_elem();
    out << "CELLS " << mesh.num_elems() << ' ' << mesh.num_elems() * (npe + 1) << '\n';
    for (std::size_t e = 0; e < mesh.num_elems(); ++e) {
      out << npe;
      for (const std::size_t n : mesh.elem(e)) out << ' ' << n;
      out << '\n';
    }
    out << "CELL_TYPES " << mesh.num_elems() << '\n';
    for (std::size_t e = 0; e < mesh.num_elems(); ++e) out << (npe == 3 ? 5 : 10) << '\n';
    out << "POINT_DATA " << mesh.num_nodes() << '\n';
    if (comps == 1) {
      out << "SCALARS u double 1\nLOOKUP_TABLE default\n";
      for (std::size_t k = 0; k < mesh.num_nodes(); ++k) out << full_precision(v[k]) << '\n';
    } else {
      out << "VECTORS u double\n";
      for (std::size_t k = 0; k < mesh.num_nodes(); ++k) {
        out << full_precision(v[3 * k]) << ' ' << full_precision(v[3 * k + 1]) << ' ' << full_precision(v[3 * k + 2])
            << '\n';
      }
    }
  }
  if (!out) throw std::runtime_error("export_solution: write to '" + path + "' failed");
}

}  // namespace nlmin
