#include "nlmin/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace nlmin {

double SparseMatrix::at(std::size_t i, std::size_t j) const {
  const auto begin = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[i]);
  const auto end = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[i + 1]);
  const auto it = std::lower_bound(begin, end, j);
  if (it == end || *it != j) return 0.0;
  return values[static_cast<std::size_t>(it - col_idx.begin())];
}

std::vector<double> SparseMatrix::diagonal() const {
  std::vector<double> d(std::min(rows, cols), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = at(i, i);
  return d;
}

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0.0;
    for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) s += values[p] * x[col_idx[p]];
    y[i] = s;
  }
}

std::vector<double> SparseMatrix::operator*(std::span<const double> x) const {
  std::vector<double> y(rows);
  multiply(x, y);
  return y;
}

SparseMatrix SparseMatrix::transpose() const {
  SparseMatrix t;
  t.rows = cols;
  t.cols = rows;
  t.row_ptr.assign(cols + 1, 0);
  for (const std::size_t j : col_idx) ++t.row_ptr[j + 1];
  std::partial_sum(t.row_ptr.begin(), t.row_ptr.end(), t.row_ptr.begin());
  t.col_idx.resize(nnz());
  t.values.resize(nnz());
  std::vector<std::size_t> next(t.row_ptr.begin(), t.row_ptr.end() - 1);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
      const std::size_t q = next[col_idx[p]]++;
      t.col_idx[q] = i;
      t.values[q] = values[p];
    }
  }
  return t;
}

SparseMatrix SparseMatrix::shifted(double shift) const {
  SparseMatrix s = *this;
  for (std::size_t i = 0; i < rows; ++i) {
    const auto begin = s.col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[i]);
    const auto end = s.col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[i + 1]);
    const auto it = std::lower_bound(begin, end, i);
    if (it == end || *it != i) throw std::invalid_argument("SparseMatrix::shifted: missing diagonal entry");
    s.values[static_cast<std::size_t>(it - s.col_idx.begin())] += shift;
  }
  return s;
}

double SparseMatrix::asymmetry() const {
  double scale = 0.0;
  double diff = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
      scale = std::max(scale, std::abs(values[p]));
      diff = std::max(diff, std::abs(values[p] - at(col_idx[p], i)));
    }
  }
  return scale > 0.0 ? diff / scale : diff;
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  SparseMatrix m;
  m.rows = m.cols = n;
  m.row_ptr.resize(n + 1);
  std::iota(m.row_ptr.begin(), m.row_ptr.end(), std::size_t{0});
  m.col_idx.resize(n);
  std::iota(m.col_idx.begin(), m.col_idx.end(), std::size_t{0});
  m.values.assign(n, 1.0);
  return m;
}

SparseMatrix SparseMatrix::from_pattern(const SparsityPattern& pattern) {
  SparseMatrix m;
  m.rows = m.cols = pattern.n;
  m.row_ptr = pattern.row_ptr;
  m.col_idx = pattern.cols;
  m.values.assign(pattern.nnz(), 0.0);
  return m;
}

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols, std::span<const std::size_t> ti,
                                         std::span<const std::size_t> tj, std::span<const double> tv) {
  std::vector<std::size_t> order(ti.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return ti[a] != ti[b] ? ti[a] < ti[b] : tj[a] < tj[b];
  });
  SparseMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.row_ptr.assign(rows + 1, 0);
  for (std::size_t q = 0; q < order.size(); ++q) {
    const std::size_t t = order[q];
    if (ti[t] >= rows || tj[t] >= cols) throw std::out_of_range("SparseMatrix::from_triplets: index out of range");
    if (q > 0 && ti[order[q - 1]] == ti[t] && tj[order[q - 1]] == tj[t]) {
      m.values.back() += tv[t];
      continue;
    }
    m.col_idx.push_back(tj[t]);
    m.values.push_back(tv[t]);
    ++m.row_ptr[ti[t] + 1];
  }
  std::partial_sum(m.row_ptr.begin(), m.row_ptr.end(), m.row_ptr.begin());
  return m;
}

SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.cols != b.rows) throw std::invalid_argument("multiply: inner dimensions differ");
  SparseMatrix c;
  c.rows = a.rows;
  c.cols = b.cols;
  c.row_ptr.assign(a.rows + 1, 0);
  constexpr std::size_t unset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> marker(b.cols, unset);
  std::vector<double> acc(b.cols, 0.0);
  std::vector<std::size_t> touched;
  for (std::size_t i = 0; i < a.rows; ++i) {
    touched.clear();
    for (std::size_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) {
      const std::size_t k = a.col_idx[p];
      const double av = a.values[p];
      for (std::size_t q = b.row_ptr[k]; q < b.row_ptr[k + 1]; ++q) {
        const std::size_t j = b.col_idx[q];
        if (marker[j] != i) {
          marker[j] = i;
          acc[j] = 0.0;
          touched.push_back(j);
        }
        acc[j] += av * b.values[q];
      }
    }
    std::sort(touched.begin(), touched.end());
    for (const std::size_t j : touched) {
      c.col_idx.push_back(j);
      c.values.push_back(acc[j]);
    }
    c.row_ptr[i + 1] = c.col_idx.size();
  }
  return c;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (const double x : a) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace nlmin
