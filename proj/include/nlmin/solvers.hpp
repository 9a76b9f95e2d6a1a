#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nlmin/sparse.hpp"

namespace nlmin {

class SolverError : public std::runtime_error {
 public:
  enum class Kind { Singular, Indefinite, MaxIterations, InvalidInput };

  SolverError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  [[nodiscard]] Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Sparse LDL^T with approximate-minimum-degree ordering.
std::vector<double> solve_direct(const SparseMatrix& a, std::span<const double> b);

// ---------------------------------------------------------------------------
// Smoothed aggregation AMG

struct AmgOptions {
  /// dofs per node; aggregation works on nodes so that all components of a
  /// node land in the same aggregate
  std::size_t block_size = 1;
  std::size_t max_coarse = 64;
  std::size_t max_levels = 25;
  std::size_t power_iterations = 10;
  double omega_numerator = 4.0 / 3.0;
  /// random probes checking the Galerkin product on every level
  std::size_t galerkin_probes = 2;
};

struct AmgLevel {
  SparseMatrix a;
  SparseMatrix p;  // prolongator to this level from the next coarser one
  SparseMatrix r;  // p^T
  std::vector<double> diag;
};

class AmgHierarchy {
 public:
  [[nodiscard]] std::size_t num_levels() const { return levels_.size() + 1; }
  [[nodiscard]] const std::vector<AmgLevel>& levels() const { return levels_; }
  /// operator on level l, 0 = finest
  [[nodiscard]] const SparseMatrix& op(std::size_t l) const { return l < levels_.size() ? levels_[l].a : coarse_; }
  [[nodiscard]] std::size_t size(std::size_t l) const { return op(l).rows; }

  /// One V(1,1) cycle with symmetric Gauss-Seidel smoothing from a zero guess.
  void apply(std::span<const double> r, std::span<double> z) const;

 private:
  friend AmgHierarchy build_amg(const SparseMatrix&, const std::vector<std::vector<double>>&, const AmgOptions&);

  void cycle(std::size_t l, std::span<const double> b, std::span<double> x) const;
  void solve_coarse(std::span<const double> b, std::span<double> x) const;

  std::vector<AmgLevel> levels_;
  SparseMatrix coarse_;
  std::vector<double> coarse_factor_;  // dense LDL^T, row-major
  std::vector<double> coarse_pivots_;
};

/// Spectral radius estimate of D^-1 A by power iteration from a fixed start.
double estimate_spectral_radius(const SparseMatrix& a, std::span<const double> diag, std::size_t iterations);

AmgHierarchy build_amg(const SparseMatrix& a, const std::vector<std::vector<double>>& near_nullspace,
                       const AmgOptions& options = {});

/// Constant vector per component, interleaved with the given block size.
std::vector<std::vector<double>> constant_modes(std::size_t n, std::size_t block_size);

// ---------------------------------------------------------------------------
// Krylov

class Preconditioner {
 public:
  virtual ~Preconditioner() = default;
  virtual void apply(std::span<const double> r, std::span<double> z) const = 0;
};

class JacobiPreconditioner final : public Preconditioner {
 public:
  explicit JacobiPreconditioner(const SparseMatrix& a);
  void apply(std::span<const double> r, std::span<double> z) const override;

 private:
  std::vector<double> inv_diag_;
};

class AmgPreconditioner final : public Preconditioner {
 public:
  explicit AmgPreconditioner(AmgHierarchy hierarchy) : hierarchy_(std::move(hierarchy)) {}
  void apply(std::span<const double> r, std::span<double> z) const override { hierarchy_.apply(r, z); }
  [[nodiscard]] const AmgHierarchy& hierarchy() const { return hierarchy_; }

 private:
  AmgHierarchy hierarchy_;
};

struct PcgResult {
  std::vector<double> x;
  std::size_t iterations = 0;
  double relative_residual = 0.0;
};

/// Throws SolverError::Indefinite when p^T A p <= 0 and
/// SolverError::MaxIterations when rtol is not reached.
PcgResult pcg_solve(const SparseMatrix& a, std::span<const double> b, const Preconditioner& precond, double rtol,
                    std::size_t maxiter);

// ---------------------------------------------------------------------------
// Size-based dispatch

enum class SolverChoice { Auto, Direct, Amg, DiagCg };

std::string_view to_string(SolverChoice choice);
SolverChoice solver_choice_from_string(std::string_view name);

struct LinearSolverConfig {
  SolverChoice choice = SolverChoice::Auto;
  /// systems up to this size are factored directly under Auto
  std::size_t direct_threshold = 15000;
  double rtol = 1e-8;
  std::size_t maxiter = 400;
  std::size_t block_size = 1;
};

struct SolveReport {
  std::vector<double> x;
  SolverChoice path = SolverChoice::Direct;
  std::size_t inner_iterations = 0;
};

/// Path the configuration selects for an n x n system.
SolverChoice select_path(const LinearSolverConfig& config, std::size_t n);

SolveReport solve_auto(const SparseMatrix& a, std::span<const double> b,
                       const std::vector<std::vector<double>>& near_nullspace, const LinearSolverConfig& config = {});

}  // namespace nlmin
