#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace nlmin {

enum class Region { LShape, Square, Bar };

std::string_view to_string(Region region);

/**
 * @brief Structured simplicial mesh of one of the benchmark domains.
 *
 * Coordinates and connectivity are stored flat: node k occupies
 * coords[dim*k, dim*k + dim) and element e occupies
 * elems[npe*e, npe*e + npe) with npe = dim + 1.
 */
struct MeshData {
  int dim = 2;
  Region region = Region::Square;
  std::vector<double> coords;
  std::vector<std::size_t> elems;
  /// sorted, nodes on the Dirichlet part of the boundary
  std::vector<std::size_t> boundary_nodes;

  [[nodiscard]] std::size_t nodes_per_elem() const { return static_cast<std::size_t>(dim) + 1; }
  [[nodiscard]] std::size_t num_nodes() const { return coords.size() / static_cast<std::size_t>(dim); }
  [[nodiscard]] std::size_t num_elems() const { return elems.size() / nodes_per_elem(); }

  [[nodiscard]] std::span<const double> node(std::size_t k) const {
    return {coords.data() + k * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
  [[nodiscard]] std::span<const std::size_t> elem(std::size_t e) const {
    return {elems.data() + e * nodes_per_elem(), nodes_per_elem()};
  }
  [[nodiscard]] bool is_boundary(std::size_t k) const;
};

/// Bar geometry (0, length) x (-width/2, width/2) x (-height/2, height/2).
struct BarGeometry {
  static constexpr double length = 0.4;
  static constexpr double width = 0.01;
  static constexpr double height = 0.01;
  static constexpr std::size_t base_cells_x = 80;
  static constexpr std::size_t base_cells_yz = 2;
};

/// L-shape (0,2)^2 minus [1,2]^2, grid spacing 2^-(level+1), all of the
/// boundary is Dirichlet.
MeshData build_lshape_mesh(int level);

/// Square (-1,1)^2 on a (2^(level+2)+1)^2 grid, all of the boundary is Dirichlet.
MeshData build_square_mesh(int level);

/// Bar split into cubes of edge 0.005 * 2^-(level-1), each cube cut into six
/// tetrahedra sharing the main diagonal. Dirichlet boundary: the two end faces.
MeshData build_bar_mesh(int level);

/// Box (0, nx h) x (-ny h/2, ny h/2) x (-nz h/2, nz h/2) of cubes with edge h,
/// split and classified like the bar.
MeshData build_box_mesh(std::size_t nx, std::size_t ny, std::size_t nz, double h);

MeshData build_mesh(Region region, int level);

}  // namespace nlmin
