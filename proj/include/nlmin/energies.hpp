#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "nlmin/autodiff.hpp"
#include "nlmin/coloring.hpp"
#include "nlmin/fem.hpp"
#include "nlmin/mesh.hpp"
#include "nlmin/sparse.hpp"

namespace nlmin {

enum class Benchmark { PLaplace, GinzburgLandau, NeoHooke };

std::string_view to_string(Benchmark kind);
Benchmark benchmark_from_string(std::string_view name);
Region region_of(Benchmark kind);

struct PLaplaceParams {
  double p = 3.0;
  std::vector<double> f_vec;  // assembled load, one entry per node
};

struct GinzburgLandauParams {
  double eps = 0.01;
  /// ip[a][q]: weight of vertex a at quadrature point q
  std::array<double, 9> ip{2.0 / 3, 1.0 / 6, 1.0 / 6, 1.0 / 6, 2.0 / 3, 1.0 / 6, 1.0 / 6, 1.0 / 6, 2.0 / 3};
  std::array<double, 3> w{1.0 / 3, 1.0 / 3, 1.0 / 3};
};

/// Compressible Neo-Hookean constants.
struct NeoHookeParams {
  double C1 = 0.0;
  double D1 = 0.0;

  /// C1 = mu/2, D1 = K/2 with mu = E/(2(1+nu)), K = E/(3(1-2nu)).
  static NeoHookeParams from_young(double young, double poisson);
};

/// Parameters of all three benchmarks; each problem reads its own fields.
struct BenchmarkSettings {
  double p = 3.0;
  double load = -10.0;
  double eps = 0.01;
  double young = 2e8;
  double poisson = 0.3;
};

// Energy programs. Their input is the vector of free dofs; the Dirichlet
// values enter as the rebindable parameter "u_0".

ad::Program record_plaplace(const DofMap& dofmap, const ElementData& elemdata, const PLaplaceParams& params);
ad::Program record_ginzburg_landau(const DofMap& dofmap, const ElementData& elemdata,
                                   const GinzburgLandauParams& params);
ad::Program record_neohooke(const DofMap& dofmap, const ElementData& elemdata, const NeoHookeParams& params);

double energy_plaplace(std::span<const double> u, const DofMap& dofmap, const ElementData& elemdata,
                       const PLaplaceParams& params);
double energy_ginzburg_landau(std::span<const double> u, const DofMap& dofmap, const ElementData& elemdata,
                              const GinzburgLandauParams& params);
double energy_neohooke(std::span<const double> u, const DofMap& dofmap, const ElementData& elemdata,
                       const NeoHookeParams& params);

/// Bar end conditions: x = 0 held at the identity, x = length rotated about
/// the bar axis by `angle` (clockwise seen from +x).
DirichletData bar_dirichlet(const MeshData& mesh, double angle);

/// Rotation angle of load step t: 24 steps make four full turns.
double bar_rotation_angle(int step);

/**
 * @brief Everything a minimization needs on one mesh: the recorded energy,
 * the free-dof layout, the Hessian pattern and its coloring.
 *
 * Built once per (benchmark, level) and reused across runs; only the
 * Dirichlet values may change afterwards.
 */
class EnergyProblem {
 public:
  [[nodiscard]] Benchmark kind() const { return kind_; }
  [[nodiscard]] int level() const { return level_; }
  [[nodiscard]] const MeshData& mesh() const { return *mesh_; }
  [[nodiscard]] const ElementData& elemdata() const { return *elemdata_; }
  [[nodiscard]] const DofMap& dofmap() const { return dofmap_; }
  [[nodiscard]] const ad::Program& program() const { return program_; }
  [[nodiscard]] const SparsityPattern& pattern() const { return *pattern_; }
  [[nodiscard]] const Coloring& coloring() const { return *coloring_; }
  [[nodiscard]] std::size_t num_free() const { return dofmap_.num_free(); }
  [[nodiscard]] std::size_t block_size() const { return dofmap_.components; }
  [[nodiscard]] std::vector<std::vector<double>> near_nullspace() const;

  [[nodiscard]] double energy(std::span<const double> u) const;
  [[nodiscard]] std::vector<double> gradient(std::span<const double> u, double* value = nullptr) const;
  [[nodiscard]] std::vector<double> hvp(std::span<const double> u, std::span<const double> s) const;
  /// Sparse Hessian recovered from one product per color.
  [[nodiscard]] SparseMatrix hessian(std::span<const double> u) const;

  /// Benchmark starting point: seeded uniform [0,1) values for p-Laplace,
  /// ones for Ginzburg-Landau, the reference configuration for the bar.
  [[nodiscard]] std::vector<double> initial_guess() const;

  void set_dirichlet(const DirichletData& dirichlet);

  /// lanes per Hessian sweep
  std::size_t hessian_batch = 8;

 private:
  friend EnergyProblem build_problem(Benchmark, MeshData, const BenchmarkSettings&);
  friend EnergyProblem build_problem(Benchmark, int, const BenchmarkSettings&);

  Benchmark kind_ = Benchmark::PLaplace;
  int level_ = 1;
  std::shared_ptr<const MeshData> mesh_;
  std::shared_ptr<const ElementData> elemdata_;
  DofMap dofmap_;
  ad::Program program_;
  std::shared_ptr<const SparsityPattern> pattern_;
  std::shared_ptr<const Coloring> coloring_;
};

/// p-Laplace on the L-shape (zero boundary values), Ginzburg-Landau on the
/// square (zero boundary values), Neo-Hooke on the bar (reference state at
/// both ends).
EnergyProblem build_problem(Benchmark kind, int level, const BenchmarkSettings& settings = {});

/// Same on a caller-supplied mesh; its boundary_nodes carry the Dirichlet data.
EnergyProblem build_problem(Benchmark kind, MeshData mesh, const BenchmarkSettings& settings = {});

}  // namespace nlmin
