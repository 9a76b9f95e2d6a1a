#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nlmin/fem.hpp"

namespace nlmin {

/// Compressed-row matrix with sorted column indices.
struct SparseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::size_t> col_idx;
  std::vector<double> values;

  [[nodiscard]] std::size_t nnz() const { return values.size(); }
  [[nodiscard]] double at(std::size_t i, std::size_t j) const;
  [[nodiscard]] std::vector<double> diagonal() const;

  /// y = A x
  void multiply(std::span<const double> x, std::span<double> y) const;
  [[nodiscard]] std::vector<double> operator*(std::span<const double> x) const;

  [[nodiscard]] SparseMatrix transpose() const;
  /// A + shift * I; requires a square matrix with a full diagonal.
  [[nodiscard]] SparseMatrix shifted(double shift) const;
  /// max |a_ij - a_ji| / max |a_ij|
  [[nodiscard]] double asymmetry() const;

  static SparseMatrix identity(std::size_t n);
  static SparseMatrix from_pattern(const SparsityPattern& pattern);
  /// Duplicates are summed.
  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols, std::span<const std::size_t> ti,
                                    std::span<const std::size_t> tj, std::span<const double> tv);
};

/// C = A B
SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double norm_inf(std::span<const double> a);

}  // namespace nlmin
