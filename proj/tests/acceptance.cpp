// Acceptance suite: one PASS/FAIL line per criterion, details indented below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nlmin/coloring.hpp"
#include "nlmin/report.hpp"
#include "oracles.hpp"

using namespace nlmin;

namespace {

struct Verdict {
  bool pass = true;
  std::vector<std::string> details;

  void require(bool ok, const std::string& line) {
    pass = pass && ok;
    details.push_back(std::string(ok ? "ok   " : "BAD  ") + line);
  }
  void note(const std::string& line) { details.push_back("     " + line); }
};

int failures = 0;

void report(int id, const std::string& title, const Verdict& v, bool gating = true) {
  const char* tag = v.pass ? "PASS" : (gating ? "FAIL" : "SOFT-FAIL");
  std::printf("%-9s %2d  %s\n", tag, id, title.c_str());
  for (const auto& d : v.details) std::printf("              %s\n", d.c_str());
  std::fflush(stdout);
  if (!v.pass && gating) ++failures;
}

template <class F>
Verdict guarded(F&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    Verdict v;
    v.require(false, std::string("exception: ") + e.what());
    return v;
  }
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Runs {
  BenchmarkReport first;
  BenchmarkReport second;
  double seconds = 0.0;
};

Runs run_twice(Benchmark kind, std::vector<int> levels) {
  RunOptions options;
  options.levels = std::move(levels);
  const auto start = std::chrono::steady_clock::now();
  Runs r{run_benchmark(kind, options), run_benchmark(kind, options), 0.0};
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

const ReportRow* row_for(const BenchmarkReport& r, int level, int step = 0) {
  for (const ReportRow& row : r.rows) {
    if (row.level == level && row.step == step) return &row;
  }
  return nullptr;
}

// Reference tables: J(u) and Newton iterations of the published Python runs.
constexpr double kPLaplaceJ[] = {-7.3411, -7.7767, -7.9051, -7.9430, -7.9546, -7.9583};
constexpr int kPLaplaceIters[] = {4, 4, 5, 6, 6, 6};
constexpr double kGinzburgJ[] = {0.3867, 0.3547, 0.3480, 0.3462, 0.3458};
constexpr int kGinzburgIters[] = {6, 8, 7, 7, 6};
constexpr double kHyperJ[] = {3.1173, 12.4423, 27.8990, 49.5501, 77.3831, 111.3262, 151.4552, 197.7484};
constexpr int kHyperIters[] = {19, 20, 21, 20, 23, 21, 23, 47};

Verdict energies_match(const BenchmarkReport& r, const double* ref, int n_levels, int optional_from) {
  Verdict v;
  if (!r.complete) v.require(false, "run incomplete: " + r.error);
  for (int level = 1; level <= n_levels; ++level) {
    const ReportRow* row = row_for(r, level);
    if (row == nullptr) {
      v.require(false, fmt("level %d missing", level));
      continue;
    }
    const double err = std::abs(row->J - ref[level - 1]);
    const std::string line = fmt("level %d dofs %zu J %.6f ref %.4f |diff| %.2e%s", level, row->dofs, row->J,
                                 ref[level - 1], err, level >= optional_from ? " (optional)" : "");
    if (level >= optional_from && err <= 5e-4) {
      v.note(line);
    } else if (level >= optional_from) {
      v.note(line + " outside tolerance");
    } else {
      v.require(err <= 5e-4, line);
    }
  }
  return v;
}

/// Energy-based gradient oracle over the given coordinates.
double gradient_error(const EnergyProblem& p, const std::vector<double>& u, const std::vector<std::size_t>& coords) {
  const auto g = p.gradient(u);
  std::vector<double> ad_part, fd_part;
  std::vector<double> w = u;
  for (const std::size_t i : coords) {
    const double h = 1e-6 * std::max(1.0, std::abs(u[i]));
    w[i] = u[i] + h;
    const double fp = p.energy(w);
    w[i] = u[i] - h;
    const double fm = p.energy(w);
    w[i] = u[i];
    ad_part.push_back(g[i]);
    fd_part.push_back((fp - fm) / (2 * h));
  }
  return oracle::max_rel_diff(ad_part, fd_part);
}

std::vector<double> bar_point(const EnergyProblem& p, std::mt19937_64& rng) {
  std::vector<double> u = p.initial_guess();
  std::uniform_real_distribution<double> d(-2e-4, 2e-4);
  for (double& x : u) x += d(rng);
  return u;
}

Verdict gradient_oracle() {
  Verdict v;
  std::mt19937_64 rng(17);
  const EnergyProblem pl = build_problem(Benchmark::PLaplace, 1);
  const EnergyProblem gl = build_problem(Benchmark::GinzburgLandau, 1);
  EnergyProblem bar = build_problem(Benchmark::NeoHooke, 1);
  bar.set_dirichlet(bar_dirichlet(bar.mesh(), 0.4));

  struct Item {
    const char* name;
    const EnergyProblem* p;
    double lo, hi;
    std::size_t sampled;  // 0: every coordinate
  };
  for (const Item& item : {Item{"p-Laplace L1", &pl, 0.0, 1.0, 0}, Item{"Ginzburg-Landau L1", &gl, -1.0, 1.0, 0},
                           Item{"Neo-Hooke L1", &bar, 0.0, 0.0, 64}}) {
    const std::size_t n = item.p->num_free();
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const auto u = item.p->kind() == Benchmark::NeoHooke ? bar_point(*item.p, rng)
                                                            : oracle::random_vector(n, rng, item.lo, item.hi);
      std::vector<std::size_t> coords(n);
      for (std::size_t i = 0; i < n; ++i) coords[i] = i;
      if (item.sampled > 0) {
        std::shuffle(coords.begin(), coords.end(), rng);
        coords.resize(item.sampled);
      }
      worst = std::max(worst, gradient_error(*item.p, u, coords));
    }
    const std::string scope = item.sampled ? fmt("%zu sampled coordinates", item.sampled) : std::string("all coordinates");
    v.require(worst < 1e-6, fmt("%s: 20 points, %s, worst relative error %.2e", item.name, scope.c_str(), worst));
  }
  return v;
}

Verdict hessian_oracle() {
  Verdict v;
  std::mt19937_64 rng(23);
  std::vector<std::pair<std::string, EnergyProblem>> problems;
  problems.emplace_back("p-Laplace L1", build_problem(Benchmark::PLaplace, 1));
  problems.emplace_back("p-Laplace L2", build_problem(Benchmark::PLaplace, 2));
  problems.emplace_back("Ginzburg-Landau L1", build_problem(Benchmark::GinzburgLandau, 1));
  problems.emplace_back("Neo-Hooke box", build_problem(Benchmark::NeoHooke, build_box_mesh(4, 2, 2, 0.005)));
  problems.back().second.set_dirichlet(bar_dirichlet(problems.back().second.mesh(), 0.7));
  for (auto& [name, p] : problems) {
    const auto u = p.kind() == Benchmark::NeoHooke ? bar_point(p, rng)
                                                   : oracle::random_vector(p.num_free(), rng, -1.0, 1.0);
    const auto dense = oracle::unit_probe_hessian(p.program(), u);
    const auto compressed = oracle::to_dense(p.hessian(u));
    double diff = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      for (std::size_t j = 0; j < u.size(); ++j) diff = std::max(diff, std::abs(dense[i][j] - compressed[i][j]));
    }
    const double scale = std::max(1.0, oracle::max_abs(dense));
    v.require(diff <= 1e-12 * scale, fmt("%s: %zu dofs, %zu colors, max |diff| %.2e (entry scale %.1e)", name.c_str(),
                                         p.num_free(), p.coloring().n_colors, diff, scale));
  }
  return v;
}

Verdict coloring_validity() {
  Verdict v;
  const auto check = [&](Benchmark kind, int level) {
    const EnergyProblem p = build_problem(kind, level);
    v.require(is_valid_coloring(p.pattern(), p.coloring()),
              fmt("%s level %d: %zu dofs, %zu colors", std::string(to_string(kind)).c_str(), level, p.num_free(),
                  p.coloring().n_colors));
  };
  for (int level = 1; level <= 5; ++level) check(Benchmark::PLaplace, level);
  for (int level = 1; level <= 5; ++level) check(Benchmark::GinzburgLandau, level);
  for (int level = 1; level <= 2; ++level) check(Benchmark::NeoHooke, level);
  return v;
}

Verdict trivial_identities() {
  Verdict v;
  const EnergyProblem gl = build_problem(Benchmark::GinzburgLandau, 1);
  const MeshData& sq = gl.mesh();
  const DofMap ones = build_dofmap(sq, 1, make_dirichlet(sq, 1, [](auto) { return std::vector<double>{1.0}; }));
  const double j_gl = energy_ginzburg_landau(std::vector<double>(ones.num_free(), 1.0), ones, gl.elemdata(), {});
  v.require(std::abs(j_gl) <= 1e-14, fmt("Ginzburg-Landau v=1: J = %.3e", j_gl));

  const EnergyProblem bar = build_problem(Benchmark::NeoHooke, 1);
  double j_bar = 0.0;
  const auto g = bar.gradient(bar.initial_guess(), &j_bar);
  v.require(std::abs(j_bar) <= 1e-9 && norm_inf(g) <= 1e-6,
            fmt("Neo-Hooke identity: J = %.3e, |grad|_inf = %.3e", j_bar, norm_inf(g)));

  const EnergyProblem pl = build_problem(Benchmark::PLaplace, 1);
  const double j_pl = pl.energy(std::vector<double>(pl.num_free(), 0.0));
  v.require(j_pl == 0.0, fmt("p-Laplace u=0: J = %.3e", j_pl));
  return v;
}

/// Slope of log(iterations) against log(1/h) by least squares.
double growth_exponent(const std::vector<std::size_t>& iters) {
  const double n = static_cast<double>(iters.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < iters.size(); ++k) {
    const double x = static_cast<double>(k) * std::log(2.0);
    const double y = std::log(static_cast<double>(iters[k]));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Verdict solver_crosscheck() {
  Verdict v;
  std::mt19937_64 rng(31);
  std::vector<std::size_t> amg_iters, diag_iters;
  for (int level = 3; level <= 5; ++level) {
    const EnergyProblem p = build_problem(Benchmark::PLaplace, level);
    const MinimizeResult r = newton_minimize(p, p.initial_guess());
    const SparseMatrix h = p.hessian(r.u_star);
    const auto b = oracle::random_vector(h.rows, rng);
    LinearSolverConfig config;
    config.choice = SolverChoice::Direct;
    const auto xd = solve_auto(h, b, p.near_nullspace(), config);
    config.choice = SolverChoice::Amg;
    const auto xa = solve_auto(h, b, p.near_nullspace(), config);
    config.choice = SolverChoice::DiagCg;
    config.maxiter = 100000;
    const auto xj = solve_auto(h, b, p.near_nullspace(), config);
    amg_iters.push_back(xa.inner_iterations);
    diag_iters.push_back(xj.inner_iterations);
    const double diff = oracle::max_rel_diff(xd.x, xa.x);
    const std::string line = fmt("p-Laplace L%d: %zu unknowns, direct vs AMG-CG %.2e, AMG-CG %zu its, diag-CG %zu its",
                                 level, h.rows, diff, xa.inner_iterations, xj.inner_iterations);
    if (h.rows >= 1000 && h.rows <= 15000) {
      v.require(diff <= 1e-6, line);
    } else {
      v.note(line);
    }
  }
  const double amg = growth_exponent(amg_iters);
  const double diag = growth_exponent(diag_iters);
  v.require(amg < 1.0, fmt("AMG-CG iterations grow like (1/h)^%.2f", amg));
  v.require(diag >= 1.0, fmt("diag-CG iterations grow like (1/h)^%.2f", diag));
  return v;
}

Verdict determinism(const std::vector<std::pair<std::string, const Runs*>>& runs) {
  Verdict v;
  for (const auto& [name, r] : runs) {
    bool same = r->first.rows.size() == r->second.rows.size();
    for (std::size_t k = 0; same && k < r->first.rows.size(); ++k) {
      same = r->first.rows[k].J == r->second.rows[k].J && r->first.rows[k].iters == r->second.rows[k].iters;
    }
    v.require(same, fmt("%s: %zu rows bitwise identical across two runs", name.c_str(), r->first.rows.size()));
  }
  return v;
}

}  // namespace

int main() {
  std::printf("nlmin acceptance suite\n");

  const Runs pl = run_twice(Benchmark::PLaplace, {1, 2, 3, 4, 5, 6});
  report(1, fmt("p-Laplace energies within 5e-4 (%.1f s for two runs)", pl.seconds),
         energies_match(pl.first, kPLaplaceJ, 6, 6));

  const Runs gl = run_twice(Benchmark::GinzburgLandau, {1, 2, 3, 4, 5});
  report(2, fmt("Ginzburg-Landau energies within 5e-4 (%.1f s for two runs)", gl.seconds),
         energies_match(gl.first, kGinzburgJ, 5, 6));

  const Runs hy = run_twice(Benchmark::NeoHooke, {1});
  {
    Verdict v;
    if (!hy.first.complete) v.require(false, "run incomplete: " + hy.first.error);
    for (int k = 0; k < 8; ++k) {
      const ReportRow* row = row_for(hy.first, 1, 3 * (k + 1));
      if (row == nullptr) {
        v.require(false, fmt("t = %d missing", 3 * (k + 1)));
        continue;
      }
      const double rel = std::abs(row->J - kHyperJ[k]) / kHyperJ[k];
      v.require(rel <= 1e-3, fmt("t = %2d J %.6f ref %.4f rel %.2e", 3 * (k + 1), row->J, kHyperJ[k], rel));
    }
    report(3, fmt("Neo-Hooke bar level 1 energies within 1e-3 relative (%.1f s for two runs)", hy.seconds), v);
  }

  {
    Verdict v;
    const auto band = [&](const char* name, const ReportRow* row, int ref) {
      if (row == nullptr) return;
      const bool ok = row->iters * 2 >= static_cast<std::size_t>(ref) && row->iters <= 2 * static_cast<std::size_t>(ref);
      v.require(ok, fmt("%s: %zu iterations, reference %d", name, row->iters, ref));
    };
    for (int level = 1; level <= 6; ++level) band(fmt("p-Laplace L%d", level).c_str(), row_for(pl.first, level), kPLaplaceIters[level - 1]);
    for (int level = 1; level <= 5; ++level) band(fmt("Ginzburg-Landau L%d", level).c_str(), row_for(gl.first, level), kGinzburgIters[level - 1]);
    for (int k = 0; k < 8; ++k) band(fmt("Neo-Hooke t=%d", 3 * (k + 1)).c_str(), row_for(hy.first, 1, 3 * (k + 1)), kHyperIters[k]);
    report(4, "Newton iteration counts within a factor 2 of the reference (not gating)", v, false);
  }

  report(5, "autodiff gradients match central differences", guarded(gradient_oracle));
  report(6, "compressed Hessians equal unit-probe Hessians", guarded(hessian_oracle));
  report(7, "colorings are valid on every pattern up to 16129 dofs", guarded(coloring_validity));
  report(8, "trivial-energy identities", guarded(trivial_identities));
  report(9, "direct and AMG-CG agree; AMG-CG scales better than diag-CG", guarded(solver_crosscheck));
  report(10, "repeated runs are bitwise identical",
         determinism({{"p-Laplace", &pl}, {"Ginzburg-Landau", &gl}, {"Neo-Hooke", &hy}}));

  std::printf("%s: %d gating criteria failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
