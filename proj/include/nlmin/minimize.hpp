#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlmin/energies.hpp"
#include "nlmin/solvers.hpp"

namespace nlmin {

struct LineSearchConfig {
  double alpha_max = 2.0;
  double interval_tol = 1e-10;
  std::size_t max_evals = 100;
};

struct RegularizationConfig {
  /// first shift is initial_scale * max |diag H|
  double initial_scale = 1e-6;
  double growth = 10.0;
  std::size_t max_tries = 20;
};

struct IterationRecord {
  std::size_t iteration = 0;
  double energy = 0.0;  // after the step
  double grad_norm = 0.0;  // before the step
  double alpha = 0.0;
  SolverChoice path = SolverChoice::Direct;
  std::size_t inner_iterations = 0;
  double shift = 0.0;  // Tikhonov shift used for the step, 0 if none
};

using IterationObserver = std::function<void(const IterationRecord&)>;

struct NewtonConfig {
  /// Stop when |grad J(u_k)|_inf <= grad_tol * (1 + |J(u_k)|).
  double grad_tol = 1e-6;
  /// Stop when J_k - J_{k+1} <= energy_tol * |J_{k+1}|.
  double energy_tol = 1e-10;
  std::size_t max_iters = 200;
  LineSearchConfig linesearch;
  RegularizationConfig regularization;
  LinearSolverConfig linear;
  /// called after every accepted step
  IterationObserver observer;
};

struct MinimizeResult {
  std::vector<double> u_star;
  double J_star = 0.0;
  std::size_t iterations = 0;
  double grad_norm = 0.0;
  bool converged = false;
  std::vector<IterationRecord> log;
};

/// Raised when Newton does not converge; carries the best iterate.
class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, MinimizeResult best)
      : std::runtime_error(what), best_(std::move(best)) {}
  [[nodiscard]] const MinimizeResult& best() const { return best_; }

 private:
  MinimizeResult best_;
};

struct LineSearchResult {
  double alpha = 0.0;
  double value = 0.0;
  std::size_t evaluations = 0;
};

/**
 * @brief Golden-section minimization of phi over [0, alpha_max].
 *
 * Non-finite values count as +inf. The returned step never increases phi
 * above phi(0): if the bracket midpoint is worse than the best sample, the
 * best sample is taken, and if that is still above phi(0) the step is halved
 * toward zero (ultimately alpha = 0).
 */
LineSearchResult golden_section(const std::function<double(double)>& phi, double alpha_max, double interval_tol,
                                std::size_t max_evals);

MinimizeResult newton_minimize(const EnergyProblem& problem, std::span<const double> u_init,
                               const NewtonConfig& config = {});

struct ContinuationStep {
  int step = 0;
  double angle = 0.0;
  double initial_energy = 0.0;
  MinimizeResult result;
};

/// Rotates the right end of the bar through `steps` increments of pi/3,
/// warm-starting each Newton solve from the previous minimizer. The problem
/// is modified in place (its Dirichlet data ends at the last step).
std::vector<ContinuationStep> continuation_hyperelastic(EnergyProblem& problem, const NewtonConfig& config = {},
                                                        int steps = 24,
                                                        const std::function<void(const ContinuationStep&)>& on_step = {});

std::vector<ContinuationStep> continuation_hyperelastic(int level, const BenchmarkSettings& settings = {},
                                                        const NewtonConfig& config = {}, int steps = 24);

}  // namespace nlmin
