#include <doctest.h>

#include <numeric>
#include <random>
#include <stdexcept>

#include "nlmin/fem.hpp"
#include "nlmin/mesh.hpp"
#include "oracles.hpp"

using namespace nlmin;

namespace {

MeshData single_triangle(double ax, double ay, double bx, double by, double cx, double cy) {
  MeshData m;
  m.dim = 2;
  m.coords = {ax, ay, bx, by, cx, cy};
  m.elems = {0, 1, 2};
  return m;
}

MeshData reference_tet() {
  MeshData m;
  m.dim = 3;
  m.region = Region::Bar;
  m.coords = {0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1};
  m.elems = {0, 1, 2, 3};
  return m;
}

}  // namespace

TEST_SUITE("fem") {
  TEST_CASE("reference triangle gradients") {
    const ElementData e = precompute_gradients(single_triangle(0, 0, 1, 0, 0, 1));
    CHECK(e.dvx() == std::vector<double>{-1, 1, 0});
    CHECK(e.dvy() == std::vector<double>{-1, 0, 1});
    CHECK(e.vol[0] == doctest::Approx(0.5));
  }

  TEST_CASE("reference tetrahedron gradients") {
    const ElementData e = precompute_gradients(reference_tet());
    CHECK(e.dvx() == std::vector<double>{-1, 1, 0, 0});
    CHECK(e.dvy() == std::vector<double>{-1, 0, 1, 0});
    CHECK(e.dvz() == std::vector<double>{-1, 0, 0, 1});
    CHECK(e.vol[0] == doctest::Approx(1.0 / 6));
  }

  TEST_CASE("linear functions are differentiated exactly on random triangles") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-3.0, 3.0);
    int tested = 0;
    while (tested < 100) {
      const double c[6] = {dist(rng), dist(rng), dist(rng), dist(rng), dist(rng), dist(rng)};
      const double det = (c[2] - c[0]) * (c[5] - c[1]) - (c[4] - c[0]) * (c[3] - c[1]);
      if (std::abs(det) < 1e-2) continue;
      ++tested;
      const ElementData e = precompute_gradients(single_triangle(c[0], c[1], c[2], c[3], c[4], c[5]));
      double gx = 0.0, gy = 0.0;
      for (int a = 0; a < 3; ++a) {
        const double v = 3.0 * c[2 * a] - 2.0 * c[2 * a + 1];
        gx += v * e.dvx()[a];
        gy += v * e.dvy()[a];
      }
      CHECK(gx == doctest::Approx(3.0).epsilon(1e-10));
      CHECK(gy == doctest::Approx(-2.0).epsilon(1e-10));
      CHECK(e.vol[0] == doctest::Approx(std::abs(det) / 2).epsilon(1e-12));
    }
  }

  TEST_CASE("gradients of a partition of unity sum to zero") {
    for (const MeshData& m : {build_lshape_mesh(2), build_square_mesh(1), build_bar_mesh(1)}) {
      const ElementData e = precompute_gradients(m);
      for (std::size_t k = 0; k < e.n_elems; ++k) {
        CHECK(e.vol[k] > 0.0);
        for (int axis = 0; axis < m.dim; ++axis) {
          double s = 0.0;
          double scale = 0.0;
          for (std::size_t a = 0; a < e.npe; ++a) {
            s += e.dv[axis][k * e.npe + a];
            scale = std::max(scale, std::abs(e.dv[axis][k * e.npe + a]));
          }
          CHECK(std::abs(s) <= 1e-12 * std::max(1.0, scale));
        }
      }
    }
  }

  TEST_CASE("degenerate element is reported by index") {
    MeshData m = single_triangle(0, 0, 1, 0, 0, 1);
    m.coords.insert(m.coords.end(), {2, 2, 3, 3});
    m.elems.insert(m.elems.end(), {0, 3, 4});
    try {
      (void)precompute_gradients(m);
      FAIL("expected an error");
    } catch (const std::domain_error& err) {
      CHECK(std::string(err.what()).find("element 1") != std::string::npos);
    }
  }

  TEST_CASE("dofmap of the L-shape") {
    const MeshData m = build_lshape_mesh(1);
    const DofMap d = build_dofmap(m, 1, zero_dirichlet(m, 1));
    CHECK(d.num_free() == 33);
    CHECK(std::all_of(d.u_0.begin(), d.u_0.end(), [](double x) { return x == 0.0; }));
    CHECK(std::is_sorted(d.freedofs.begin(), d.freedofs.end()));
  }

  TEST_CASE("constant Dirichlet data on the square") {
    const MeshData m = build_square_mesh(1);
    const DofMap d = build_dofmap(m, 1, make_dirichlet(m, 1, [](auto) { return std::vector<double>{2.5}; }));
    CHECK(std::count(d.u_0.begin(), d.u_0.end(), 2.5) == static_cast<long>(m.num_nodes() - 49));
    for (const std::size_t i : d.freedofs) CHECK(d.u_0[i] == 0.0);
    const auto index = d.free_index();
    std::size_t free = 0;
    for (std::size_t i = 0; i < d.n_total; ++i) free += index[i] != DofMap::npos;
    CHECK(free == d.num_free());
  }

  TEST_CASE("bar dofmap interleaves components") {
    const MeshData m = build_bar_mesh(1);
    const DofMap d = build_dofmap(m, 3, make_dirichlet(m, 3, [](auto x) {
      return std::vector<double>(x.begin(), x.end());
    }));
    CHECK(d.num_free() == 2133);
    for (const std::size_t k : m.boundary_nodes) {
      for (std::size_t c = 0; c < 3; ++c) CHECK(d.u_0[3 * k + c] == m.node(k)[c]);
    }
    for (std::size_t i = 0; i < d.num_free(); i += 3) {
      CHECK(d.freedofs[i] % 3 == 0);
      CHECK(d.freedofs[i + 1] == d.freedofs[i] + 1);
      CHECK(d.freedofs[i + 2] == d.freedofs[i] + 2);
    }
    const std::vector<double> u(d.num_free(), 7.0);
    const std::vector<double> v = d.expand(u);
    for (const std::size_t i : d.freedofs) CHECK(v[i] == 7.0);
  }

  TEST_CASE("invalid Dirichlet data is rejected") {
    const MeshData m = build_square_mesh(1);
    DirichletData dirichlet = zero_dirichlet(m, 1);
    SUBCASE("interior node") {
      std::size_t interior = 0;
      while (m.is_boundary(interior)) ++interior;
      dirichlet[interior] = {0.0};
      CHECK_THROWS_AS(build_dofmap(m, 1, dirichlet), std::invalid_argument);
    }
    SUBCASE("missing node") {
      dirichlet.erase(dirichlet.begin());
      CHECK_THROWS_AS(build_dofmap(m, 1, dirichlet), std::invalid_argument);
    }
    SUBCASE("wrong component count") {
      dirichlet.begin()->second = {0.0, 1.0};
      CHECK_THROWS_AS(build_dofmap(m, 1, dirichlet), std::invalid_argument);
    }
  }

  TEST_CASE("load vector") {
    const MeshData tri = single_triangle(0, 0, 1, 0, 0, 1);
    const ElementData e = precompute_gradients(tri);
    for (const double f : assemble_load_vector(tri, e, -10.0)) CHECK(f == doctest::Approx(-5.0 / 3));
    for (const double f : assemble_load_vector(tri, e, 0.0)) CHECK(f == 0.0);

    const MeshData l = build_lshape_mesh(1);
    const auto f = assemble_load_vector(l, precompute_gradients(l), -10.0);
    CHECK(std::accumulate(f.begin(), f.end(), 0.0) == doctest::Approx(-30.0).epsilon(1e-13));
  }

  TEST_CASE("pattern of small meshes") {
    SUBCASE("single triangle") {
      const MeshData m = single_triangle(0, 0, 1, 0, 0, 1);
      const SparsityPattern p = sparsity_pattern(m, build_dofmap(m, 1, {}));
      CHECK(p.n == 3);
      CHECK(p.nnz() == 9);
    }
    SUBCASE("two triangles sharing an edge") {
      MeshData m = single_triangle(0, 0, 1, 0, 0, 1);
      m.coords.insert(m.coords.end(), {1, 1});
      m.elems.insert(m.elems.end(), {1, 3, 2});
      const DofMap d = build_dofmap(m, 1, {});
      const SparsityPattern p = sparsity_pattern(m, d);
      CHECK(p.nnz() == 14);
      CHECK(p.nnz() == oracle::brute_force_pattern(m, d).size());
      CHECK_FALSE(p.contains(0, 3));
    }
    SUBCASE("single tetrahedron, three components") {
      const MeshData m = reference_tet();
      const SparsityPattern p = sparsity_pattern(m, build_dofmap(m, 3, {}));
      CHECK(p.n == 12);
      CHECK(p.nnz() == 144);
    }
  }

  TEST_CASE("pattern matches brute-force pair enumeration") {
    const MeshData l = build_lshape_mesh(1);
    const MeshData s = build_square_mesh(1);
    for (const MeshData* m : {&l, &s}) {
      const DofMap d = build_dofmap(*m, 1, zero_dirichlet(*m, 1));
      const SparsityPattern p = sparsity_pattern(*m, d);
      const auto pairs = oracle::brute_force_pattern(*m, d);
      CHECK(p.nnz() == pairs.size());
      for (const auto& [i, j] : pairs) CHECK(p.contains(i, j));
    }
  }

  TEST_CASE("pattern is symmetric with a full diagonal") {
    const MeshData m = build_bar_mesh(1);
    const DofMap d = build_dofmap(m, 3, make_dirichlet(m, 3, [](auto x) {
      return std::vector<double>(x.begin(), x.end());
    }));
    const SparsityPattern p = sparsity_pattern(m, d);
    CHECK(p.n == 2133);
    for (std::size_t i = 0; i < p.n; ++i) {
      CHECK(p.contains(i, i));
      for (const std::size_t j : p.row(i)) {
        if (!p.contains(j, i)) FAIL_CHECK("asymmetric entry " << i << "," << j);
      }
    }
  }
}
