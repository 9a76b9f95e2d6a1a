#include "nlmin/energies.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "nlmin/solvers.hpp"

namespace nlmin {

namespace {

using ad::Expr;
using ad::Shape;

ad::Shape element_table_shape(const ElementData& e) { return Shape::matrix(e.n_elems, e.npe); }

/// v = u_0 with the free entries replaced by the input.
Expr scatter_free(ad::ProgramBuilder& b, const DofMap& dofmap) {
  Expr u = b.input(dofmap.num_free());
  Expr u0 = b.parameter("u_0", Shape::vector(dofmap.n_total), dofmap.u_0);
  return b.scatter(u0, dofmap.freedofs, u);
}

Expr gather_elements(ad::ProgramBuilder& b, Expr v, const ElementData& e) {
  return b.gather(v, e.elems, e.n_elems, e.npe);
}

Expr table(ad::ProgramBuilder& b, const char* name, const ElementData& e, std::size_t axis) {
  return b.parameter(name, element_table_shape(e), e.dv[axis]);
}

void require_dim(const ElementData& e, int dim, std::size_t components, const DofMap& dofmap, const char* who) {
  if (e.dim != dim || dofmap.components != components) {
    throw std::invalid_argument(std::string(who) + ": wrong problem dimension");
  }
  if (dofmap.n_total % components != 0) throw std::invalid_argument(std::string(who) + ": inconsistent dof layout");
}

}  // namespace

std::string_view to_string(Benchmark kind) {
  switch (kind) {
    case Benchmark::PLaplace: return "plaplace";
    case Benchmark::GinzburgLandau: return "gl";
    case Benchmark::NeoHooke: return "hyper";
  }
  return "unknown";
}

Benchmark benchmark_from_string(std::string_view name) {
  for (const auto b : {Benchmark::PLaplace, Benchmark::GinzburgLandau, Benchmark::NeoHooke}) {
    if (to_string(b) == name) return b;
  }
  throw std::invalid_argument("unknown benchmark '" + std::string(name) + "'");
}

Region region_of(Benchmark kind) {
  switch (kind) {
    case Benchmark::PLaplace: return Region::LShape;
    case Benchmark::GinzburgLandau: return Region::Square;
    case Benchmark::NeoHooke: return Region::Bar;
  }
  return Region::Square;
}

NeoHookeParams NeoHookeParams::from_young(double young, double poisson) {
  const double mu = young / (2.0 * (1.0 + poisson));
  const double bulk = young / (3.0 * (1.0 - 2.0 * poisson));
  return {mu / 2.0, bulk / 2.0};
}

ad::Program record_plaplace(const DofMap& dofmap, const ElementData& elemdata, const PLaplaceParams& params) {
  require_dim(elemdata, 2, 1, dofmap, "record_plaplace");
  if (!(params.p > 1.0)) throw std::invalid_argument("record_plaplace: p must exceed 1");
  if (params.f_vec.size() != dofmap.n_total) throw std::invalid_argument("record_plaplace: load vector length");

  ad::ProgramBuilder b;
  Expr v = scatter_free(b, dofmap);
  Expr v_elems = gather_elements(b, v, elemdata);
  Expr dvx = table(b, "dvx", elemdata, 0);
  Expr dvy = table(b, "dvy", elemdata, 1);
  Expr vol = b.parameter("vol", Shape::vector(elemdata.n_elems), elemdata.vol);
  Expr f = b.parameter("f", Shape::vector(dofmap.n_total), params.f_vec);

  Expr fx = row_sum(v_elems * dvx);
  Expr fy = row_sum(v_elems * dvy);
  Expr integrands = (1.0 / params.p) * pow(pow(fx, 2.0) + pow(fy, 2.0), params.p / 2.0);
  return b.finish(sum(integrands * vol) - dot(f, v));
}

ad::Program record_ginzburg_landau(const DofMap& dofmap, const ElementData& elemdata,
                                   const GinzburgLandauParams& params) {
  require_dim(elemdata, 2, 1, dofmap, "record_ginzburg_landau");
  if (!(params.eps > 0.0)) throw std::invalid_argument("record_ginzburg_landau: eps must be positive");

  ad::ProgramBuilder b;
  Expr v = scatter_free(b, dofmap);
  Expr v_elems = gather_elements(b, v, elemdata);
  Expr dvx = table(b, "dvx", elemdata, 0);
  Expr dvy = table(b, "dvy", elemdata, 1);
  Expr vol = b.parameter("vol", Shape::vector(elemdata.n_elems), elemdata.vol);
  Expr ip = b.parameter("ip", Shape::matrix(3, 3), {params.ip.begin(), params.ip.end()});
  Expr w = b.parameter("w", Shape::vector(3), {params.w.begin(), params.w.end()});

  Expr fx = row_sum(v_elems * dvx);
  Expr fy = row_sum(v_elems * dvy);
  Expr e1 = 0.5 * params.eps * (pow(fx, 2.0) + pow(fy, 2.0));
  Expr e2 = 0.25 * matmul(pow(pow(matmul(v_elems, ip), 2.0) - 1.0, 2.0), w);
  return b.finish(sum((e1 + e2) * vol));
}

ad::Program record_neohooke(const DofMap& dofmap, const ElementData& elemdata, const NeoHookeParams& params) {
  require_dim(elemdata, 3, 3, dofmap, "record_neohooke");
  if (!(params.C1 > 0.0 && params.D1 > 0.0)) throw std::invalid_argument("record_neohooke: C1, D1 must be positive");

  ad::ProgramBuilder b;
  Expr v = scatter_free(b, dofmap);
  Expr vx = gather_elements(b, b.stride(v, 0, 3), elemdata);
  Expr vy = gather_elements(b, b.stride(v, 1, 3), elemdata);
  Expr vz = gather_elements(b, b.stride(v, 2, 3), elemdata);
  Expr dvx = table(b, "dvx", elemdata, 0);
  Expr dvy = table(b, "dvy", elemdata, 1);
  Expr dvz = table(b, "dvz", elemdata, 2);
  Expr vol = b.parameter("vol", Shape::vector(elemdata.n_elems), elemdata.vol);

  Expr f11 = row_sum(vx * dvx);
  Expr f12 = row_sum(vx * dvy);
  Expr f13 = row_sum(vx * dvz);
  Expr f21 = row_sum(vy * dvx);
  Expr f22 = row_sum(vy * dvy);
  Expr f23 = row_sum(vy * dvz);
  Expr f31 = row_sum(vz * dvx);
  Expr f32 = row_sum(vz * dvy);
  Expr f33 = row_sum(vz * dvz);

  Expr i1 = pow(f11, 2.0) + pow(f12, 2.0) + pow(f13, 2.0) + pow(f21, 2.0) + pow(f22, 2.0) + pow(f23, 2.0) +
            pow(f31, 2.0) + pow(f32, 2.0) + pow(f33, 2.0);
  Expr det = abs(f11 * f22 * f33 - f11 * f23 * f32 - f12 * f21 * f33 + f12 * f23 * f31 + f13 * f21 * f32 -
                 f13 * f22 * f31);
  Expr w = params.C1 * (i1 - 3.0 - 2.0 * log(det)) + params.D1 * pow(det - 1.0, 2.0);
  return b.finish(sum(w * vol));
}

double energy_plaplace(std::span<const double> u, const DofMap& dofmap, const ElementData& elemdata,
                       const PLaplaceParams& params) {
  return ad::evaluate(record_plaplace(dofmap, elemdata, params), u);
}

double energy_ginzburg_landau(std::span<const double> u, const DofMap& dofmap, const ElementData& elemdata,
                              const GinzburgLandauParams& params) {
  return ad::evaluate(record_ginzburg_landau(dofmap, elemdata, params), u);
}

double energy_neohooke(std::span<const double> u, const DofMap& dofmap, const ElementData& elemdata,
                       const NeoHookeParams& params) {
  return ad::evaluate(record_neohooke(dofmap, elemdata, params), u);
}

double bar_rotation_angle(int step) { return static_cast<double>(step) * std::numbers::pi / 3.0; }

DirichletData bar_dirichlet(const MeshData& mesh, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return make_dirichlet(mesh, 3, [&](std::span<const double> x) -> std::vector<double> {
    if (std::abs(x[0]) <= 1e-12) return {x[0], x[1], x[2]};
    return {x[0], x[1] * c + x[2] * s, -x[1] * s + x[2] * c};
  });
}

// ---------------------------------------------------------------------------
// EnergyProblem

std::vector<std::vector<double>> EnergyProblem::near_nullspace() const {
  return constant_modes(num_free(), block_size());
}

double EnergyProblem::energy(std::span<const double> u) const { return ad::evaluate(program_, u); }

std::vector<double> EnergyProblem::gradient(std::span<const double> u, double* value) const {
  return ad::gradient(program_, u, value);
}

std::vector<double> EnergyProblem::hvp(std::span<const double> u, std::span<const double> s) const {
  return ad::hessian_vector_product(program_, u, s);
}

SparseMatrix EnergyProblem::hessian(std::span<const double> u) const {
  const std::vector<double> at(u.begin(), u.end());
  const HvpBlockFn probe = [this, &at](const ad::DirectionBlock& seeds) {
    return ad::hessian_vector_products(program_, at, seeds);
  };
  return recover_hessian(probe, *coloring_, *pattern_, hessian_batch);
}

std::vector<double> EnergyProblem::initial_guess() const {
  const std::size_t n = num_free();
  switch (kind_) {
    case Benchmark::PLaplace: {
      std::mt19937_64 rng(0);
      std::vector<double> u(n);
      for (double& x : u) x = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      return u;
    }
    case Benchmark::GinzburgLandau:
      return std::vector<double>(n, 1.0);
    case Benchmark::NeoHooke: {
      std::vector<double> u(n);
      for (std::size_t i = 0; i < n; ++i) u[i] = mesh_->coords[dofmap_.freedofs[i]];
      return u;
    }
  }
  return std::vector<double>(n, 0.0);
}

void EnergyProblem::set_dirichlet(const DirichletData& dirichlet) {
  set_dirichlet_values(dofmap_, *mesh_, dirichlet);
  program_ = program_.rebind("u_0", dofmap_.u_0);
}

EnergyProblem build_problem(Benchmark kind, int level, const BenchmarkSettings& settings) {
  EnergyProblem problem = build_problem(kind, build_mesh(region_of(kind), level), settings);
  problem.level_ = level;
  return problem;
}

EnergyProblem build_problem(Benchmark kind, MeshData mesh_data, const BenchmarkSettings& settings) {
  if (mesh_data.dim != (kind == Benchmark::NeoHooke ? 3 : 2)) {
    throw std::invalid_argument("build_problem: mesh dimension does not fit " + std::string(to_string(kind)));
  }
  EnergyProblem problem;
  problem.kind_ = kind;
  problem.level_ = 0;
  auto mesh = std::make_shared<const MeshData>(std::move(mesh_data));
  auto elemdata = std::make_shared<const ElementData>(precompute_gradients(*mesh));

  switch (kind) {
    case Benchmark::PLaplace: {
      problem.dofmap_ = build_dofmap(*mesh, 1, zero_dirichlet(*mesh, 1));
      PLaplaceParams params{settings.p, assemble_load_vector(*mesh, *elemdata, settings.load)};
      problem.program_ = record_plaplace(problem.dofmap_, *elemdata, params);
      break;
    }
    case Benchmark::GinzburgLandau: {
      problem.dofmap_ = build_dofmap(*mesh, 1, zero_dirichlet(*mesh, 1));
      GinzburgLandauParams params;
      params.eps = settings.eps;
      problem.program_ = record_ginzburg_landau(problem.dofmap_, *elemdata, params);
      break;
    }
    case Benchmark::NeoHooke: {
      problem.dofmap_ = build_dofmap(*mesh, 3, bar_dirichlet(*mesh, 0.0));
      problem.program_ =
          record_neohooke(problem.dofmap_, *elemdata, NeoHookeParams::from_young(settings.young, settings.poisson));
      break;
    }
  }

  auto pattern = std::make_shared<const SparsityPattern>(sparsity_pattern(*mesh, problem.dofmap_));
  problem.coloring_ = std::make_shared<const Coloring>(color_pattern(*pattern));
  problem.pattern_ = std::move(pattern);
  problem.mesh_ = std::move(mesh);
  problem.elemdata_ = std::move(elemdata);
  return problem;
}

}  // namespace nlmin
