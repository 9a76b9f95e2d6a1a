#include "nlmin/solvers.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <cmath>

namespace nlmin {

std::vector<double> solve_direct(const SparseMatrix& a, std::span<const double> b) {
  if (a.rows != a.cols || b.size() != a.rows) {
    throw SolverError(SolverError::Kind::InvalidInput, "solve_direct: dimension mismatch");
  }
  const auto n = static_cast<Eigen::Index>(a.rows);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(a.nnz());
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) {
      triplets.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a.col_idx[p]), a.values[p]);
    }
  }
  Eigen::SparseMatrix<double> m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt(m);
  if (ldlt.info() != Eigen::Success) {
    throw SolverError(SolverError::Kind::Singular, "solve_direct: factorization failed");
  }
  const auto& d = ldlt.vectorD();
  const double dmax = d.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (!std::isfinite(d[i]) || std::abs(d[i]) <= 1e-14 * dmax) {
      throw SolverError(SolverError::Kind::Singular, "solve_direct: zero pivot in LDL^T factorization");
    }
  }
  const Eigen::Map<const Eigen::VectorXd> rhs(b.data(), n);
  const Eigen::VectorXd x = ldlt.solve(rhs);
  if (!x.allFinite()) throw SolverError(SolverError::Kind::Singular, "solve_direct: non-finite solution");
  return {x.data(), x.data() + x.size()};
}

JacobiPreconditioner::JacobiPreconditioner(const SparseMatrix& a) : inv_diag_(a.diagonal()) {
  for (double& d : inv_diag_) {
    if (!(d > 0.0)) throw SolverError(SolverError::Kind::Indefinite, "Jacobi preconditioner: non-positive diagonal");
    d = 1.0 / d;
  }
}

void JacobiPreconditioner::apply(std::span<const double> r, std::span<double> z) const {
  for (std::size_t i = 0; i < r.size(); ++i) z[i] = inv_diag_[i] * r[i];
}

PcgResult pcg_solve(const SparseMatrix& a, std::span<const double> b, const Preconditioner& precond, double rtol,
                    std::size_t maxiter) {
  const std::size_t n = a.rows;
  PcgResult result;
  result.x.assign(n, 0.0);
  const double bnorm = norm2(b);
  if (bnorm == 0.0) return result;

  std::vector<double> r(b.begin(), b.end());
  std::vector<double> z(n);
  std::vector<double> p(n);
  std::vector<double> q(n);
  precond.apply(r, z);
  p = z;
  double rz = dot(r, z);
  double rnorm = bnorm;

  while (rnorm > rtol * bnorm) {
    if (result.iterations >= maxiter) {
      throw SolverError(SolverError::Kind::MaxIterations,
                        "pcg_solve: no convergence in " + std::to_string(maxiter) +
                            " iterations, relative residual " + std::to_string(rnorm / bnorm));
    }
    a.multiply(p, q);
    const double curvature = dot(p, q);
    if (!(curvature > 0.0)) {
      throw SolverError(SolverError::Kind::Indefinite, "pcg_solve: non-positive curvature p^T A p");
    }
    const double alpha = rz / curvature;
    for (std::size_t i = 0; i < n; ++i) {
      result.x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    ++result.iterations;
    rnorm = norm2(r);
    precond.apply(r, z);
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  result.relative_residual = rnorm / bnorm;
  return result;
}

std::string_view to_string(SolverChoice choice) {
  switch (choice) {
    case SolverChoice::Auto: return "auto";
    case SolverChoice::Direct: return "direct";
    case SolverChoice::Amg: return "amg";
    case SolverChoice::DiagCg: return "diag-cg";
  }
  return "unknown";
}

SolverChoice solver_choice_from_string(std::string_view name) {
  for (const auto c : {SolverChoice::Auto, SolverChoice::Direct, SolverChoice::Amg, SolverChoice::DiagCg}) {
    if (to_string(c) == name) return c;
  }
  throw std::invalid_argument("unknown solver '" + std::string(name) + "'");
}

SolverChoice select_path(const LinearSolverConfig& config, std::size_t n) {
  if (config.choice != SolverChoice::Auto) return config.choice;
  return n <= config.direct_threshold ? SolverChoice::Direct : SolverChoice::Amg;
}

SolveReport solve_auto(const SparseMatrix& a, std::span<const double> b,
                       const std::vector<std::vector<double>>& near_nullspace, const LinearSolverConfig& config) {
  SolveReport report;
  report.path = select_path(config, a.rows);
  switch (report.path) {
    case SolverChoice::Direct:
      report.x = solve_direct(a, b);
      break;
    case SolverChoice::Amg: {
      AmgOptions options;
      options.block_size = config.block_size;
      const AmgPreconditioner precond(build_amg(a, near_nullspace, options));
      auto res = pcg_solve(a, b, precond, config.rtol, config.maxiter);
      report.x = std::move(res.x);
      report.inner_iterations = res.iterations;
      break;
    }
    case SolverChoice::DiagCg: {
      const JacobiPreconditioner precond(a);
      auto res = pcg_solve(a, b, precond, config.rtol, config.maxiter);
      report.x = std::move(res.x);
      report.inner_iterations = res.iterations;
      break;
    }
    case SolverChoice::Auto:
      break;
  }
  return report;
}

}  // namespace nlmin
