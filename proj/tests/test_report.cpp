#include <doctest.h>

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nlmin/report.hpp"

using namespace nlmin;

namespace {

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);) parts.push_back(item);
  return parts;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("nlmin_test_" + name)).string();
}

const BenchmarkReport& plaplace_report() {
  static const BenchmarkReport report = [] {
    RunOptions options;
    options.levels = {1, 2};
    return run_benchmark(Benchmark::PLaplace, options);
  }();
  return report;
}

}  // namespace

TEST_SUITE("report") {
  TEST_CASE("rows follow the requested levels") {
    const BenchmarkReport& r = plaplace_report();
    CHECK(r.complete);
    REQUIRE(r.rows.size() == 2);
    CHECK(r.rows[0].level == 1);
    CHECK(r.rows[0].dofs == 33);
    CHECK(r.rows[1].level == 2);
    CHECK(r.rows[1].dofs == 161);
    CHECK(r.solutions.size() == 2);
    CHECK(r.config.find("benchmark=plaplace") != std::string::npos);
  }

  TEST_CASE("csv table") {
    std::ostringstream os;
    report_table(plaplace_report(), TableFormat::Csv, os);
    std::istringstream in(os.str());
    std::string header;
    std::getline(in, header);
    CHECK(header == "dofs,setup_s,solve_s,iters,J");
    std::string row;
    std::getline(in, row);
    const auto cells = split(row, ',');
    REQUIRE(cells.size() == 5);
    CHECK(cells[0] == "33");
    CHECK(std::stod(cells[4]) == plaplace_report().rows[0].J);
  }

  TEST_CASE("json table") {
    std::ostringstream os;
    report_table(plaplace_report(), TableFormat::Json, os);
    const auto j = nlohmann::json::parse(os.str());
    REQUIRE(j.is_array());
    REQUIRE(j.size() == 2);
    for (const char* key : {"dofs", "setup_s", "solve_s", "iters", "J"}) CHECK(j[0].contains(key));
    CHECK_FALSE(j[0].contains("step"));
    CHECK(j[1]["dofs"] == 161);
  }

  TEST_CASE("text table shows four decimals") {
    std::ostringstream os;
    report_table(plaplace_report(), TableFormat::Text, os);
    const std::string text = os.str();
    CHECK(text.rfind("# benchmark=plaplace", 0) == 0);
    CHECK(text.find("-7.3411") != std::string::npos);
    CHECK(text.find("incomplete") == std::string::npos);
  }

  TEST_CASE("format names") {
    CHECK(table_format_from_string("csv") == TableFormat::Csv);
    CHECK(table_format_from_string("json") == TableFormat::Json);
    CHECK(table_format_from_string("text") == TableFormat::Text);
    CHECK_THROWS_AS(table_format_from_string("xml"), std::invalid_argument);
    CHECK(export_format_from_string("vtk-legacy") == ExportFormat::VtkLegacy);
    CHECK_THROWS_AS(export_format_from_string("hdf5"), std::invalid_argument);
  }

  TEST_CASE("csv export round-trips the nodal field") {
    const LevelSolution& s = plaplace_report().solutions[0];
    const std::string path = temp_path("plaplace.csv");
    export_solution(*s.problem, s.u_star, path, ExportFormat::Csv);
    const auto lines = read_lines(path);
    REQUIRE(lines.size() == 66);
    CHECK(lines[0] == "x,y,u");
    const auto full = s.problem->dofmap().expand(s.u_star);
    for (std::size_t k = 0; k < 65; ++k) {
      CHECK(lines[k + 1].find('\r') == std::string::npos);
      const auto cells = split(lines[k + 1], ',');
      REQUIRE(cells.size() == 3);
      CHECK(std::stod(cells[0]) == s.problem->mesh().node(k)[0]);
      CHECK(std::stod(cells[1]) == s.problem->mesh().node(k)[1]);
      CHECK(std::stod(cells[2]) == full[k]);
    }
    std::remove(path.c_str());
  }

  TEST_CASE("vtk export lists points and cells") {
    const LevelSolution& s = plaplace_report().solutions[0];
    const std::string path = temp_path("plaplace.vtk");
    export_solution(*s.problem, s.u_star, path, ExportFormat::VtkLegacy);
    const auto lines = read_lines(path);
    REQUIRE(!lines.empty());
    CHECK(lines[0].rfind("# vtk DataFile", 0) == 0);
    bool points = false, cells = false, data = false;
    for (const auto& line : lines) {
      points |= line.rfind("POINTS 65 ", 0) == 0;
      cells |= line.rfind("CELLS " + std::to_string(s.problem->mesh().num_elems()) + " ", 0) == 0;
      data |= line == "POINT_DATA 65";
    }
    CHECK(points);
    CHECK(cells);
    CHECK(data);
    std::remove(path.c_str());
  }

  TEST_CASE("invalid levels are rejected") {
    RunOptions options;
    options.levels = {0};
    CHECK_THROWS_AS(run_benchmark(Benchmark::PLaplace, options), std::invalid_argument);
  }

  TEST_CASE("a failing level marks the report incomplete") {
    RunOptions options;
    options.levels = {1, 2};
    options.newton.max_iters = 1;
    const BenchmarkReport r = run_benchmark(Benchmark::PLaplace, options);
    CHECK_FALSE(r.complete);
    CHECK(r.rows.empty());
    CHECK_FALSE(r.error.empty());
    std::ostringstream os;
    report_table(r, TableFormat::Text, os);
    CHECK(os.str().find("# incomplete:") != std::string::npos);
  }
}
