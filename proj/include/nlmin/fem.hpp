#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "nlmin/mesh.hpp"

namespace nlmin {

/**
 * @brief Per-element data of the linear nodal basis.
 *
 * dv[a] is an (n_elems x npe) row-major table holding the derivative along
 * axis a of each element's barycentric basis functions; vol holds element
 * areas (2D) or volumes (3D). elems is a copy of the mesh connectivity with
 * the same row layout.
 */
struct ElementData {
  int dim = 2;
  std::size_t n_elems = 0;
  std::size_t npe = 3;
  std::vector<std::size_t> elems;
  std::array<std::vector<double>, 3> dv;
  std::vector<double> vol;

  [[nodiscard]] const std::vector<double>& dvx() const { return dv[0]; }
  [[nodiscard]] const std::vector<double>& dvy() const { return dv[1]; }
  [[nodiscard]] const std::vector<double>& dvz() const { return dv[2]; }
};

/// Layout of the unknowns. Vector fields interleave per node: component c of
/// node k is dof components*k + c.
struct DofMap {
  std::size_t components = 1;
  std::size_t n_total = 0;
  std::vector<std::size_t> freedofs;
  std::vector<double> u_0;

  [[nodiscard]] std::size_t num_free() const { return freedofs.size(); }
  /// full-dof index -> position in freedofs, or npos for fixed dofs
  [[nodiscard]] std::vector<std::size_t> free_index() const;
  /// u_0 with u written into the free positions
  [[nodiscard]] std::vector<double> expand(std::span<const double> u) const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

/// Prescribed boundary values, keyed by node index; each entry holds one value
/// per component.
using DirichletData = std::map<std::size_t, std::vector<double>>;

/// Symmetric compressed-row nonzero structure with sorted column indices.
struct SparsityPattern {
  std::size_t n = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::size_t> cols;

  [[nodiscard]] std::size_t nnz() const { return cols.size(); }
  [[nodiscard]] std::span<const std::size_t> row(std::size_t i) const {
    return {cols.data() + row_ptr[i], row_ptr[i + 1] - row_ptr[i]};
  }
  [[nodiscard]] bool contains(std::size_t i, std::size_t j) const;

  static SparsityPattern from_rows(std::vector<std::vector<std::size_t>> rows);
};

/// Throws std::domain_error naming the element if a simplex is degenerate.
ElementData precompute_gradients(const MeshData& mesh);

DofMap build_dofmap(const MeshData& mesh, std::size_t components, const DirichletData& dirichlet);

/// Evaluates fn(node coordinates) on every boundary node.
DirichletData make_dirichlet(const MeshData& mesh, std::size_t components,
                             const std::function<std::vector<double>(std::span<const double>)>& fn);

DirichletData zero_dirichlet(const MeshData& mesh, std::size_t components);

/// Rewrites the fixed entries of dofmap.u_0; the set of free dofs is unchanged.
void set_dirichlet_values(DofMap& dofmap, const MeshData& mesh, const DirichletData& dirichlet);

/// f_i = integral of f_const * phi_i, exact for constant f.
std::vector<double> assemble_load_vector(const MeshData& mesh, const ElementData& elemdata, double f_const);

SparsityPattern sparsity_pattern(const MeshData& mesh, const DofMap& dofmap);

}  // namespace nlmin
