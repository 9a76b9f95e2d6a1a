#include "nlmin/fem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace nlmin {

std::vector<std::size_t> DofMap::free_index() const {
  std::vector<std::size_t> index(n_total, npos);
  for (std::size_t i = 0; i < freedofs.size(); ++i) index[freedofs[i]] = i;
  return index;
}

std::vector<double> DofMap::expand(std::span<const double> u) const {
  if (u.size() != freedofs.size()) {
    throw std::invalid_argument("DofMap::expand: expected " + std::to_string(freedofs.size()) + " values, got " +
                                std::to_string(u.size()));
  }
  std::vector<double> v = u_0;
  for (std::size_t i = 0; i < freedofs.size(); ++i) v[freedofs[i]] = u[i];
  return v;
}

bool SparsityPattern::contains(std::size_t i, std::size_t j) const {
  const auto r = row(i);
  return std::binary_search(r.begin(), r.end(), j);
}

SparsityPattern SparsityPattern::from_rows(std::vector<std::vector<std::size_t>> rows) {
  SparsityPattern pattern;
  pattern.n = rows.size();
  pattern.row_ptr.assign(1, 0);
  pattern.row_ptr.reserve(rows.size() + 1);
  for (auto& r : rows) {
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    pattern.cols.insert(pattern.cols.end(), r.begin(), r.end());
    pattern.row_ptr.push_back(pattern.cols.size());
  }
  return pattern;
}

ElementData precompute_gradients(const MeshData& mesh) {
  const std::size_t dim = static_cast<std::size_t>(mesh.dim);
  if (dim != 2 && dim != 3) throw std::invalid_argument("precompute_gradients: dim must be 2 or 3");

  ElementData data;
  data.dim = mesh.dim;
  data.npe = mesh.nodes_per_elem();
  data.n_elems = mesh.num_elems();
  data.elems = mesh.elems;
  for (std::size_t a = 0; a < dim; ++a) data.dv[a].assign(data.n_elems * data.npe, 0.0);
  data.vol.assign(data.n_elems, 0.0);

  for (std::size_t e = 0; e < data.n_elems; ++e) {
    const auto nodes = mesh.elem(e);
    const auto p0 = mesh.node(nodes[0]);
    // edge matrix, column s = p_{s+1} - p_0
    double edge[3][3] = {};
    double scale = 0.0;
    for (std::size_t s = 0; s < dim; ++s) {
      const auto ps = mesh.node(nodes[s + 1]);
      for (std::size_t r = 0; r < dim; ++r) {
        edge[r][s] = ps[r] - p0[r];
        scale = std::max(scale, std::abs(edge[r][s]));
      }
    }

    double det = 0.0;
    double inv[3][3] = {};
    if (dim == 2) {
      det = edge[0][0] * edge[1][1] - edge[0][1] * edge[1][0];
      inv[0][0] = edge[1][1];
      inv[0][1] = -edge[0][1];
      inv[1][0] = -edge[1][0];
      inv[1][1] = edge[0][0];
    } else {
      const auto& m = edge;
      inv[0][0] = m[1][1] * m[2][2] - m[1][2] * m[2][1];
      inv[0][1] = m[0][2] * m[2][1] - m[0][1] * m[2][2];
      inv[0][2] = m[0][1] * m[1][2] - m[0][2] * m[1][1];
      inv[1][0] = m[1][2] * m[2][0] - m[1][0] * m[2][2];
      inv[1][1] = m[0][0] * m[2][2] - m[0][2] * m[2][0];
      inv[1][2] = m[0][2] * m[1][0] - m[0][0] * m[1][2];
      inv[2][0] = m[1][0] * m[2][1] - m[1][1] * m[2][0];
      inv[2][1] = m[0][1] * m[2][0] - m[0][0] * m[2][1];
      inv[2][2] = m[0][0] * m[1][1] - m[0][1] * m[1][0];
      det = m[0][0] * inv[0][0] + m[0][1] * inv[1][0] + m[0][2] * inv[2][0];
    }
    if (!(std::abs(det) > 1e-13 * std::pow(scale, static_cast<double>(dim)))) {
      throw std::domain_error("precompute_gradients: degenerate element " + std::to_string(e));
    }

    // Row s of the inverse edge matrix is the gradient of barycentric
    // coordinate s+1; coordinate 0 closes the partition of unity.
    for (std::size_t a = 0; a < dim; ++a) {
      double* row = data.dv[a].data() + e * data.npe;
      double sum = 0.0;
      for (std::size_t s = 0; s < dim; ++s) {
        row[s + 1] = inv[s][a] / det;
        sum += row[s + 1];
      }
      row[0] = -sum;
    }
    data.vol[e] = std::abs(det) / (dim == 2 ? 2.0 : 6.0);
  }
  return data;
}

DofMap build_dofmap(const MeshData& mesh, std::size_t components, const DirichletData& dirichlet) {
  if (components == 0) throw std::invalid_argument("build_dofmap: components must be positive");
  DofMap map;
  map.components = components;
  map.n_total = mesh.num_nodes() * components;
  map.u_0.assign(map.n_total, 0.0);

  std::vector<char> fixed(map.n_total, 0);
  for (const std::size_t k : mesh.boundary_nodes) {
    for (std::size_t c = 0; c < components; ++c) fixed[components * k + c] = 1;
  }
  for (std::size_t i = 0; i < map.n_total; ++i) {
    if (!fixed[i]) map.freedofs.push_back(i);
  }
  set_dirichlet_values(map, mesh, dirichlet);
  return map;
}

void set_dirichlet_values(DofMap& dofmap, const MeshData& mesh, const DirichletData& dirichlet) {
  const std::size_t comps = dofmap.components;
  for (const auto& [node, values] : dirichlet) {
    if (node >= mesh.num_nodes() || !mesh.is_boundary(node)) {
      throw std::invalid_argument("Dirichlet value given for non-boundary node " + std::to_string(node));
    }
    if (values.size() != comps) {
      throw std::invalid_argument("Dirichlet data for node " + std::to_string(node) + " has " +
                                  std::to_string(values.size()) + " components, expected " + std::to_string(comps));
    }
  }
  if (dirichlet.size() != mesh.boundary_nodes.size()) {
    throw std::invalid_argument("Dirichlet data must cover every boundary node (" +
                                std::to_string(mesh.boundary_nodes.size()) + "), got " +
                                std::to_string(dirichlet.size()));
  }
  for (const auto& [node, values] : dirichlet) {
    for (std::size_t c = 0; c < comps; ++c) dofmap.u_0[comps * node + c] = values[c];
  }
}

DirichletData make_dirichlet(const MeshData& mesh, std::size_t components,
                             const std::function<std::vector<double>(std::span<const double>)>& fn) {
  DirichletData data;
  for (const std::size_t k : mesh.boundary_nodes) {
    auto values = fn(mesh.node(k));
    if (values.size() != components) throw std::invalid_argument("make_dirichlet: wrong number of components");
    data.emplace(k, std::move(values));
  }
  return data;
}

DirichletData zero_dirichlet(const MeshData& mesh, std::size_t components) {
  return make_dirichlet(mesh, components,
                        [components](std::span<const double>) { return std::vector<double>(components, 0.0); });
}

std::vector<double> assemble_load_vector(const MeshData& mesh, const ElementData& elemdata, double f_const) {
  std::vector<double> f(mesh.num_nodes(), 0.0);
  const double share = 1.0 / static_cast<double>(elemdata.npe);
  for (std::size_t e = 0; e < elemdata.n_elems; ++e) {
    const double value = f_const * elemdata.vol[e] * share;
    for (std::size_t a = 0; a < elemdata.npe; ++a) f[elemdata.elems[e * elemdata.npe + a]] += value;
  }
  return f;
}

SparsityPattern sparsity_pattern(const MeshData& mesh, const DofMap& dofmap) {
  const std::size_t npe = mesh.nodes_per_elem();
  std::vector<std::vector<std::size_t>> node_adj(mesh.num_nodes());
  for (std::size_t e = 0; e < mesh.num_elems(); ++e) {
    const auto nodes = mesh.elem(e);
    for (std::size_t a = 0; a < npe; ++a) {
      for (std::size_t b = 0; b < npe; ++b) node_adj[nodes[a]].push_back(nodes[b]);
    }
  }
  for (auto& adj : node_adj) {
    std::sort(adj.begin(), adj.end());
    adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
  }

  const std::size_t comps = dofmap.components;
  const auto index = dofmap.free_index();
  std::vector<std::vector<std::size_t>> rows(dofmap.num_free());
  for (std::size_t r = 0; r < dofmap.num_free(); ++r) {
    const std::size_t dof = dofmap.freedofs[r];
    const std::size_t node = dof / comps;
    auto& row = rows[r];
    row.reserve(node_adj[node].size() * comps);
    for (const std::size_t other : node_adj[node]) {
      for (std::size_t c = 0; c < comps; ++c) {
        const std::size_t col = index[comps * other + c];
        if (col != DofMap::npos) row.push_back(col);
      }
    }
  }
  return SparsityPattern::from_rows(std::move(rows));
}

}  // namespace nlmin
