#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "nlmin/autodiff.hpp"
#include "nlmin/fem.hpp"
#include "nlmin/sparse.hpp"

namespace nlmin {

/// Partition of the columns of a symmetric pattern such that no two columns
/// of one color have a nonzero in a common row.
struct Coloring {
  std::vector<std::size_t> color_of;
  std::size_t n_colors = 0;

  /// Column indices per color, ascending.
  [[nodiscard]] std::vector<std::vector<std::size_t>> groups() const;
  bool operator==(const Coloring&) const = default;
};

/// Greedy distance-2 coloring. Columns are visited by descending degree
/// (ties by index) and take the smallest color unused among the columns
/// they share a row with.
Coloring color_pattern(const SparsityPattern& pattern);

/// True when no row of the pattern holds two columns of the same color.
bool is_valid_coloring(const SparsityPattern& pattern, const Coloring& coloring);

/// Applies the Hessian to a block of seed directions (one lane per column).
using HvpBlockFn = std::function<ad::DirectionBlock(const ad::DirectionBlock&)>;

/**
 * @brief Recovers a symmetric matrix supported on the pattern from products
 * with one compressed seed vector per color.
 *
 * Entry (i, j) is read from row i of the probe of j's color, then the result
 * is averaged with its transpose. Seeds are sent to hvp in batches of at most
 * `batch` lanes. Throws std::runtime_error naming the color if a probe
 * returns a non-finite value.
 */
SparseMatrix recover_hessian(const HvpBlockFn& hvp, const Coloring& coloring, const SparsityPattern& pattern,
                             std::size_t batch = 8);

}  // namespace nlmin
