#include "nlmin/coloring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace nlmin {

std::vector<std::vector<std::size_t>> Coloring::groups() const {
  std::vector<std::vector<std::size_t>> out(n_colors);
  for (std::size_t j = 0; j < color_of.size(); ++j) out[color_of[j]].push_back(j);
  return out;
}

Coloring color_pattern(const SparsityPattern& pattern) {
  const std::size_t n = pattern.n;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pattern.row(a).size() > pattern.row(b).size();
  });

  constexpr std::size_t none = static_cast<std::size_t>(-1);
  Coloring coloring;
  coloring.color_of.assign(n, none);
  // forbidden[c] == j marks color c as taken for column j
  std::vector<std::size_t> forbidden;
  for (const std::size_t j : order) {
    // the pattern is symmetric, so the rows holding column j are row(j)
    for (const std::size_t i : pattern.row(j)) {
      for (const std::size_t k : pattern.row(i)) {
        const std::size_t c = coloring.color_of[k];
        if (c != none) forbidden[c] = j;
      }
    }
    std::size_t c = 0;
    while (c < forbidden.size() && forbidden[c] == j) ++c;
    if (c == forbidden.size()) forbidden.push_back(none);
    coloring.color_of[j] = c;
    coloring.n_colors = std::max(coloring.n_colors, c + 1);
  }
  return coloring;
}

bool is_valid_coloring(const SparsityPattern& pattern, const Coloring& coloring) {
  if (coloring.color_of.size() != pattern.n) return false;
  std::vector<std::size_t> seen(coloring.n_colors, static_cast<std::size_t>(-1));
  for (std::size_t i = 0; i < pattern.n; ++i) {
    for (const std::size_t j : pattern.row(i)) {
      const std::size_t c = coloring.color_of[j];
      if (c >= coloring.n_colors) return false;
      if (seen[c] == i) return false;
      seen[c] = i;
    }
  }
  return true;
}

SparseMatrix recover_hessian(const HvpBlockFn& hvp, const Coloring& coloring, const SparsityPattern& pattern,
                             std::size_t batch) {
  const std::size_t n = pattern.n;
  if (coloring.color_of.size() != n) throw std::invalid_argument("recover_hessian: coloring size differs from pattern");
  batch = std::max<std::size_t>(batch, 1);

  SparseMatrix h = SparseMatrix::from_pattern(pattern);
  for (std::size_t first = 0; first < coloring.n_colors; first += batch) {
    const std::size_t lanes = std::min(batch, coloring.n_colors - first);
    ad::DirectionBlock seeds(n, lanes);
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t c = coloring.color_of[j];
      if (c >= first && c < first + lanes) seeds.at(j, c - first) = 1.0;
    }
    const ad::DirectionBlock probes = hvp(seeds);
    if (probes.n != n || probes.k != lanes) throw std::runtime_error("recover_hessian: probe block has wrong shape");
    for (std::size_t lane = 0; lane < lanes; ++lane) {
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(probes.at(i, lane))) {
          throw std::runtime_error("recover_hessian: non-finite Hessian probe for color " +
                                   std::to_string(first + lane));
        }
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t p = h.row_ptr[i]; p < h.row_ptr[i + 1]; ++p) {
        const std::size_t c = coloring.color_of[h.col_idx[p]];
        if (c >= first && c < first + lanes) h.values[p] = probes.at(i, c - first);
      }
    }
  }

  // (H + H^T) / 2 on the symmetric pattern
  const SparseMatrix t = h.transpose();
  for (std::size_t p = 0; p < h.values.size(); ++p) h.values[p] = 0.5 * (h.values[p] + t.values[p]);
  return h;
}

}  // namespace nlmin
