#include "nlmin/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace nlmin {

namespace {

constexpr double geom_tol = 1e-12;

bool near(double a, double b) { return std::abs(a - b) <= geom_tol; }

void require_level(int level, const char* builder) {
  if (level <= 0) {
    throw std::invalid_argument(std::string(builder) + ": level must be >= 1, got " + std::to_string(level));
  }
}

/// Uniform right-triangle grid over [x0, x0 + n*h] x [y0, y0 + n*h]. Cells for
/// which keep_cell(i, j) is false are dropped together with nodes that no
/// remaining cell touches. Every cell is cut along its lower-left to
/// upper-right diagonal.
template <class KeepCell>
MeshData triangulate_grid(std::size_t n, double x0, double y0, double h, KeepCell keep_cell) {
  const std::size_t nn = n + 1;
  std::vector<char> used(nn * nn, 0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!keep_cell(i, j)) continue;
      used[j * nn + i] = used[j * nn + i + 1] = 1;
      used[(j + 1) * nn + i] = used[(j + 1) * nn + i + 1] = 1;
    }
  }

  MeshData mesh;
  mesh.dim = 2;
  constexpr std::size_t unused = static_cast<std::size_t>(-1);
  std::vector<std::size_t> index(nn * nn, unused);
  for (std::size_t j = 0; j < nn; ++j) {
    for (std::size_t i = 0; i < nn; ++i) {
      if (!used[j * nn + i]) continue;
      index[j * nn + i] = mesh.num_nodes();
      mesh.coords.push_back(x0 + static_cast<double>(i) * h);
      mesh.coords.push_back(y0 + static_cast<double>(j) * h);
    }
  }

  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!keep_cell(i, j)) continue;
      const std::size_t a = index[j * nn + i];
      const std::size_t b = index[j * nn + i + 1];
      const std::size_t c = index[(j + 1) * nn + i];
      const std::size_t d = index[(j + 1) * nn + i + 1];
      mesh.elems.insert(mesh.elems.end(), {a, b, d, a, d, c});
    }
  }
  return mesh;
}

template <class OnBoundary>
void classify_boundary(MeshData& mesh, OnBoundary on_boundary) {
  mesh.boundary_nodes.clear();
  for (std::size_t k = 0; k < mesh.num_nodes(); ++k) {
    if (on_boundary(mesh.node(k))) mesh.boundary_nodes.push_back(k);
  }
}

}  // namespace

std::string_view to_string(Region region) {
  switch (region) {
    case Region::LShape: return "lshape";
    case Region::Square: return "square";
    case Region::Bar: return "bar";
  }
  return "unknown";
}

bool MeshData::is_boundary(std::size_t k) const {
  return std::binary_search(boundary_nodes.begin(), boundary_nodes.end(), k);
}

MeshData build_lshape_mesh(int level) {
  require_level(level, "build_lshape_mesh");
  const std::size_t n = std::size_t{1} << (level + 2);  // cells per side of (0,2)^2
  const double h = 2.0 / static_cast<double>(n);
  const std::size_t half = n / 2;

  MeshData mesh = triangulate_grid(n, 0.0, 0.0, h, [half](std::size_t i, std::size_t j) {
    return !(i >= half && j >= half);
  });
  mesh.region = Region::LShape;
  classify_boundary(mesh, [](std::span<const double> p) {
    const double x = p[0];
    const double y = p[1];
    return near(x, 0.0) || near(y, 0.0) || near(x, 2.0) || near(y, 2.0) ||
           (near(x, 1.0) && y >= 1.0 - geom_tol) || (near(y, 1.0) && x >= 1.0 - geom_tol);
  });
  return mesh;
}

MeshData build_square_mesh(int level) {
  require_level(level, "build_square_mesh");
  const std::size_t n = std::size_t{1} << (level + 2);
  const double h = 2.0 / static_cast<double>(n);

  MeshData mesh = triangulate_grid(n, -1.0, -1.0, h, [](std::size_t, std::size_t) { return true; });
  mesh.region = Region::Square;
  classify_boundary(mesh, [](std::span<const double> p) {
    return near(std::abs(p[0]), 1.0) || near(std::abs(p[1]), 1.0);
  });
  return mesh;
}

MeshData build_box_mesh(std::size_t nx, std::size_t ny, std::size_t nz, double h) {
  if (nx == 0 || ny == 0 || nz == 0 || !(h > 0.0)) throw std::invalid_argument("build_box_mesh: empty box");
  const double length = static_cast<double>(nx) * h;

  MeshData mesh;
  mesh.dim = 3;
  mesh.region = Region::Bar;
  const auto node_id = [&](std::size_t i, std::size_t j, std::size_t k) {
    return i + (nx + 1) * (j + (ny + 1) * k);
  };

  mesh.coords.reserve(3 * (nx + 1) * (ny + 1) * (nz + 1));
  for (std::size_t k = 0; k <= nz; ++k) {
    for (std::size_t j = 0; j <= ny; ++j) {
      for (std::size_t i = 0; i <= nx; ++i) {
        mesh.coords.push_back(static_cast<double>(i) * h);
        mesh.coords.push_back((static_cast<double>(j) - 0.5 * static_cast<double>(ny)) * h);
        mesh.coords.push_back((static_cast<double>(k) - 0.5 * static_cast<double>(nz)) * h);
      }
    }
  }

  // Each cube is cut into the six tetrahedra of the monotone lattice paths
  // from corner (0,0,0) to (1,1,1), one per permutation of the axes.
  mesh.elems.reserve(4 * 6 * nx * ny * nz);
  for (std::size_t k = 0; k < nz; ++k) {
    for (std::size_t j = 0; j < ny; ++j) {
      for (std::size_t i = 0; i < nx; ++i) {
        std::array<int, 3> axes{0, 1, 2};
        do {
          std::array<std::size_t, 3> corner{i, j, k};
          std::array<std::size_t, 4> tet{};
          tet[0] = node_id(i, j, k);
          for (std::size_t s = 0; s < 3; ++s) {
            ++corner[static_cast<std::size_t>(axes[s])];
            tet[s + 1] = node_id(corner[0], corner[1], corner[2]);
          }
          // An odd permutation gives a negatively oriented path simplex.
          const int inversions = (axes[0] > axes[1]) + (axes[0] > axes[2]) + (axes[1] > axes[2]);
          if (inversions % 2 == 1) std::swap(tet[2], tet[3]);
          mesh.elems.insert(mesh.elems.end(), tet.begin(), tet.end());
        } while (std::next_permutation(axes.begin(), axes.end()));
      }
    }
  }

  classify_boundary(mesh, [length](std::span<const double> p) { return near(p[0], 0.0) || near(p[0], length); });
  return mesh;
}

MeshData build_bar_mesh(int level) {
  require_level(level, "build_bar_mesh");
  const std::size_t scale = std::size_t{1} << (level - 1);
  const std::size_t nx = BarGeometry::base_cells_x * scale;
  const std::size_t ny = BarGeometry::base_cells_yz * scale;
  const std::size_t nz = BarGeometry::base_cells_yz * scale;
  return build_box_mesh(nx, ny, nz, BarGeometry::length / static_cast<double>(nx));
}

MeshData build_mesh(Region region, int level) {
  switch (region) {
    case Region::LShape: return build_lshape_mesh(level);
    case Region::Square: return build_square_mesh(level);
    case Region::Bar: return build_bar_mesh(level);
  }
  throw std::invalid_argument("build_mesh: unknown region");
}

}  // namespace nlmin
