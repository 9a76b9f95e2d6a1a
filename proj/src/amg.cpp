#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "nlmin/solvers.hpp"

namespace nlmin {

namespace {

constexpr std::size_t unassigned = static_cast<std::size_t>(-1);

/// Uniform in [-1, 1) from the 53 high bits of a 64-bit Mersenne twister.
double signed_unit(std::mt19937_64& rng) {
  return 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0;
}

/// Node graph of the matrix: nodes I, J adjacent when any entry of block
/// (I, J) is nonzero. Self loops dropped.
std::vector<std::vector<std::size_t>> node_graph(const SparseMatrix& a, std::size_t bs) {
  const std::size_t nn = a.rows / bs;
  std::vector<std::vector<std::size_t>> adj(nn);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const std::size_t ni = i / bs;
    for (std::size_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) {
      const std::size_t nj = a.col_idx[p] / bs;
      if (nj != ni && a.values[p] != 0.0) adj[ni].push_back(nj);
    }
  }
  for (auto& row : adj) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
  }
  return adj;
}

/// Greedy standard aggregation: seed aggregates from nodes whose whole
/// neighborhood is free, attach leftovers to a neighboring seed aggregate,
/// and group whatever remains with its free neighbors.
std::vector<std::size_t> standard_aggregation(const std::vector<std::vector<std::size_t>>& adj,
                                              std::size_t& n_aggregates) {
  const std::size_t nn = adj.size();
  std::vector<std::size_t> agg(nn, unassigned);
  std::vector<char> seed_member(nn, 0);
  n_aggregates = 0;

  for (std::size_t i = 0; i < nn; ++i) {
    if (agg[i] != unassigned) continue;
    const bool free_neighborhood =
        std::all_of(adj[i].begin(), adj[i].end(), [&](std::size_t j) { return agg[j] == unassigned; });
    if (!free_neighborhood) continue;
    agg[i] = n_aggregates;
    seed_member[i] = 1;
    for (const std::size_t j : adj[i]) {
      agg[j] = n_aggregates;
      seed_member[j] = 1;
    }
    ++n_aggregates;
  }

  for (std::size_t i = 0; i < nn; ++i) {
    if (agg[i] != unassigned) continue;
    for (const std::size_t j : adj[i]) {
      if (seed_member[j]) {
        agg[i] = agg[j];
        break;
      }
    }
  }

  for (std::size_t i = 0; i < nn; ++i) {
    if (agg[i] != unassigned) continue;
    agg[i] = n_aggregates;
    for (const std::size_t j : adj[i]) {
      if (agg[j] == unassigned) agg[j] = n_aggregates;
    }
    ++n_aggregates;
  }
  return agg;
}

struct Tentative {
  SparseMatrix t;
  std::vector<std::vector<double>> coarse_modes;
  std::size_t coarse_block = 1;
};

/// Restricts the near-nullspace to each aggregate and orthonormalizes it
/// there (modified Gram-Schmidt). Locally dependent modes are dropped.
Tentative tentative_prolongator(const std::vector<std::size_t>& agg, std::size_t n_aggregates, std::size_t bs,
                                const std::vector<std::vector<double>>& modes) {
  const std::size_t nb = modes.size();
  const std::size_t n = agg.size() * bs;
  std::vector<std::vector<std::size_t>> members(n_aggregates);
  for (std::size_t node = 0; node < agg.size(); ++node) {
    for (std::size_t c = 0; c < bs; ++c) members[agg[node]].push_back(node * bs + c);
  }

  std::vector<std::size_t> ti;
  std::vector<std::size_t> tj;
  std::vector<double> tv;
  std::vector<std::vector<double>> coarse(nb);
  bool uniform = true;
  std::size_t coarse_dof = 0;

  for (std::size_t g = 0; g < n_aggregates; ++g) {
    const auto& rows = members[g];
    const std::size_t m = rows.size();
    std::vector<std::vector<double>> q(nb, std::vector<double>(m));
    for (std::size_t c = 0; c < nb; ++c) {
      for (std::size_t r = 0; r < m; ++r) q[c][r] = modes[c][rows[r]];
    }
    std::vector<std::vector<double>> rfac(nb, std::vector<double>(nb, 0.0));
    std::vector<std::size_t> kept;
    for (std::size_t c = 0; c < nb; ++c) {
      double scale = 0.0;
      for (const double v : q[c]) scale = std::max(scale, std::abs(v));
      for (const std::size_t k : kept) {
        double proj = 0.0;
        for (std::size_t r = 0; r < m; ++r) proj += q[k][r] * q[c][r];
        rfac[k][c] = proj;
        for (std::size_t r = 0; r < m; ++r) q[c][r] -= proj * q[k][r];
      }
      double norm = 0.0;
      for (const double v : q[c]) norm += v * v;
      norm = std::sqrt(norm);
      if (norm <= 1e-10 * std::max(scale, 1e-300)) continue;
      for (double& v : q[c]) v /= norm;
      rfac[c][c] = norm;
      kept.push_back(c);
    }
    if (kept.size() != nb) uniform = false;
    for (const std::size_t k : kept) {
      for (std::size_t r = 0; r < m; ++r) {
        ti.push_back(rows[r]);
        tj.push_back(coarse_dof);
        tv.push_back(q[k][r]);
      }
      for (std::size_t c = 0; c < nb; ++c) coarse[c].push_back(rfac[k][c]);
      ++coarse_dof;
    }
  }

  Tentative out;
  out.t = SparseMatrix::from_triplets(n, coarse_dof, ti, tj, tv);
  out.coarse_modes = std::move(coarse);
  out.coarse_block = uniform ? nb : 1;
  return out;
}

void gauss_seidel(const SparseMatrix& a, std::span<const double> diag, std::span<const double> b, std::span<double> x,
                  bool backward) {
  const std::size_t n = a.rows;
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t i = backward ? n - 1 - s : s;
    double r = b[i];
    for (std::size_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) {
      if (a.col_idx[p] != i) r -= a.values[p] * x[a.col_idx[p]];
    }
    x[i] = r / diag[i];
  }
}

void symmetric_gauss_seidel(const SparseMatrix& a, std::span<const double> diag, std::span<const double> b,
                            std::span<double> x) {
  gauss_seidel(a, diag, b, x, false);
  gauss_seidel(a, diag, b, x, true);
}

void check_galerkin(const SparseMatrix& fine, const SparseMatrix& p, const SparseMatrix& r,
                    const SparseMatrix& coarse, std::size_t probes, std::mt19937_64& rng) {
  std::vector<double> x(coarse.rows);
  for (std::size_t k = 0; k < probes; ++k) {
    for (double& v : x) v = signed_unit(rng);
    const auto direct = coarse * x;
    const auto fine_x = p * x;
    const auto a_fine = fine * fine_x;
    const auto triple = r * a_fine;
    double diff = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) diff += (direct[i] - triple[i]) * (direct[i] - triple[i]);
    const double ref = norm2(triple);
    if (std::sqrt(diff) > 1e-10 * std::max(ref, 1e-300)) {
      throw SolverError(SolverError::Kind::InvalidInput, "build_amg: Galerkin check failed");
    }
  }
}

}  // namespace

std::vector<std::vector<double>> constant_modes(std::size_t n, std::size_t block_size) {
  std::vector<std::vector<double>> modes(block_size, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) modes[i % block_size][i] = 1.0;
  return modes;
}

double estimate_spectral_radius(const SparseMatrix& a, std::span<const double> diag, std::size_t iterations) {
  std::mt19937_64 rng(20240607);
  std::vector<double> x(a.rows);
  for (double& v : x) v = signed_unit(rng);
  std::vector<double> y(a.rows);
  double rho = 0.0;
  for (std::size_t it = 0; it < iterations; ++it) {
    const double xn = norm2(x);
    if (xn == 0.0) break;
    for (double& v : x) v /= xn;
    a.multiply(x, y);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] /= diag[i];
    rho = norm2(y);
    std::swap(x, y);
  }
  return rho;
}

AmgHierarchy build_amg(const SparseMatrix& a, const std::vector<std::vector<double>>& near_nullspace,
                       const AmgOptions& options) {
  if (a.rows != a.cols) throw SolverError(SolverError::Kind::InvalidInput, "build_amg: matrix is not square");
  if (options.block_size == 0 || a.rows % options.block_size != 0) {
    throw SolverError(SolverError::Kind::InvalidInput, "build_amg: size is not a multiple of the block size");
  }
  for (const auto& mode : near_nullspace) {
    if (mode.size() != a.rows) throw SolverError(SolverError::Kind::InvalidInput, "build_amg: mode length mismatch");
  }
  std::vector<std::vector<double>> modes = near_nullspace;
  if (modes.empty()) modes = constant_modes(a.rows, 1);

  AmgHierarchy h;
  std::mt19937_64 rng(7);
  SparseMatrix current = a;
  std::size_t bs = options.block_size;

  while (current.rows > options.max_coarse && h.levels_.size() + 1 < options.max_levels) {
    std::vector<double> diag = current.diagonal();
    for (std::size_t i = 0; i < diag.size(); ++i) {
      if (!(diag[i] > 0.0)) {
        throw SolverError(SolverError::Kind::Indefinite,
                          "build_amg: non-positive diagonal entry at row " + std::to_string(i));
      }
    }

    std::size_t n_aggregates = 0;
    const auto agg = standard_aggregation(node_graph(current, bs), n_aggregates);
    if (n_aggregates == 0 || n_aggregates * modes.size() >= current.rows) break;

    Tentative tent = tentative_prolongator(agg, n_aggregates, bs, modes);

    // P = (I - omega/rho D^-1 A) T
    const double rho = estimate_spectral_radius(current, diag, options.power_iterations);
    const double omega = options.omega_numerator / rho;
    SparseMatrix at = multiply(current, tent.t);
    for (std::size_t i = 0; i < at.rows; ++i) {
      for (std::size_t p = at.row_ptr[i]; p < at.row_ptr[i + 1]; ++p) at.values[p] *= -omega / diag[i];
    }
    std::vector<std::size_t> ti;
    std::vector<std::size_t> tj;
    std::vector<double> tv;
    for (const SparseMatrix* m : {&tent.t, &at}) {
      for (std::size_t i = 0; i < m->rows; ++i) {
        for (std::size_t p = m->row_ptr[i]; p < m->row_ptr[i + 1]; ++p) {
          ti.push_back(i);
          tj.push_back(m->col_idx[p]);
          tv.push_back(m->values[p]);
        }
      }
    }

    AmgLevel level;
    level.p = SparseMatrix::from_triplets(current.rows, tent.t.cols, ti, tj, tv);
    level.r = level.p.transpose();
    SparseMatrix coarse = multiply(level.r, multiply(current, level.p));
    check_galerkin(current, level.p, level.r, coarse, options.galerkin_probes, rng);

    level.diag = std::move(diag);
    level.a = std::move(current);
    h.levels_.push_back(std::move(level));
    current = std::move(coarse);
    modes = std::move(tent.coarse_modes);
    bs = tent.coarse_block;
  }

  // Dense LDL^T of the coarsest operator.
  const std::size_t n = current.rows;
  std::vector<double> m(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = current.row_ptr[i]; p < current.row_ptr[i + 1]; ++p) m[i * n + current.col_idx[p]] = current.values[p];
  }
  std::vector<double> d(n, 0.0);
  double dmax = 0.0;
  for (std::size_t i = 0; i < n; ++i) dmax = std::max(dmax, std::abs(m[i * n + i]));
  for (std::size_t j = 0; j < n; ++j) {
    double dj = m[j * n + j];
    for (std::size_t k = 0; k < j; ++k) dj -= m[j * n + k] * m[j * n + k] * d[k];
    if (!(std::abs(dj) > 1e-14 * dmax)) {
      throw SolverError(SolverError::Kind::Singular, "build_amg: singular coarsest operator");
    }
    d[j] = dj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double lij = m[i * n + j];
      for (std::size_t k = 0; k < j; ++k) lij -= m[i * n + k] * m[j * n + k] * d[k];
      m[i * n + j] = lij / dj;
    }
  }
  h.coarse_factor_ = std::move(m);
  h.coarse_pivots_ = std::move(d);
  h.coarse_ = std::move(current);
  return h;
}

void AmgHierarchy::solve_coarse(std::span<const double> b, std::span<double> x) const {
  const std::size_t n = coarse_.rows;
  const auto& l = coarse_factor_;
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l[i * n + k] * x[k];
    x[i] = s;
  }
  for (std::size_t i = 0; i < n; ++i) x[i] /= coarse_pivots_[i];
  for (std::size_t i = n; i-- > 0;) {
    double s = x[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= l[k * n + i] * x[k];
    x[i] = s;
  }
}

void AmgHierarchy::cycle(std::size_t l, std::span<const double> b, std::span<double> x) const {
  if (l == levels_.size()) {
    solve_coarse(b, x);
    return;
  }
  const AmgLevel& level = levels_[l];
  std::fill(x.begin(), x.end(), 0.0);
  symmetric_gauss_seidel(level.a, level.diag, b, x);

  std::vector<double> r = level.a * x;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  const std::vector<double> rc = level.r * r;
  std::vector<double> xc(rc.size(), 0.0);
  cycle(l + 1, rc, xc);
  const std::vector<double> correction = level.p * xc;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += correction[i];

  symmetric_gauss_seidel(level.a, level.diag, b, x);
}

void AmgHierarchy::apply(std::span<const double> r, std::span<double> z) const { cycle(0, r, z); }

}  // namespace nlmin
