#include "nlmin/minimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nlmin {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

double finite_or_inf(double x) { return std::isfinite(x) ? x : inf; }

bool is_descent(std::span<const double> d, std::span<const double> g) {
  for (const double x : d) {
    if (!std::isfinite(x)) return false;
  }
  return dot(d, g) < 0.0;
}

struct Direction {
  std::vector<double> d;
  SolverChoice path = SolverChoice::Direct;
  std::size_t inner_iterations = 0;
  double shift = 0.0;
};

/// Newton direction from H d = -g, shifting H by growing multiples of the
/// identity while the solve fails or does not give descent.
Direction newton_direction(const EnergyProblem& problem, const SparseMatrix& h, std::span<const double> g,
                           const NewtonConfig& config) {
  std::vector<double> rhs(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) rhs[i] = -g[i];
  const auto modes = problem.near_nullspace();
  LinearSolverConfig linear = config.linear;
  linear.block_size = problem.block_size();

  Direction dir;
  const auto attempt = [&](const SparseMatrix& a) {
    try {
      SolveReport report = solve_auto(a, rhs, modes, linear);
      dir.path = report.path;
      dir.inner_iterations = report.inner_iterations;
      if (!is_descent(report.x, g)) return false;
      dir.d = std::move(report.x);
      return true;
    } catch (const SolverError&) {
      dir.path = select_path(linear, a.rows);
      return false;
    }
  };

  if (attempt(h)) return dir;

  double diag_max = 0.0;
  for (const double x : h.diagonal()) diag_max = std::max(diag_max, std::abs(x));
  double shift = config.regularization.initial_scale * (diag_max > 0.0 ? diag_max : 1.0);
  for (std::size_t k = 0; k < config.regularization.max_tries; ++k, shift *= config.regularization.growth) {
    dir.shift = shift;
    if (attempt(h.shifted(shift))) return dir;
  }
  throw SolverError(SolverError::Kind::Singular, "newton_minimize: no descent direction after regularization");
}

}  // namespace

LineSearchResult golden_section(const std::function<double(double)>& phi, double alpha_max, double interval_tol,
                                std::size_t max_evals) {
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  LineSearchResult best;
  const auto sample = [&](double alpha) {
    const double value = finite_or_inf(phi(alpha));
    ++best.evaluations;
    return value;
  };

  const double phi0 = sample(0.0);
  best.alpha = 0.0;
  best.value = phi0;
  double best_alpha = 0.0;
  double best_value = inf;
  const auto track = [&](double alpha, double value) {
    if (value < best_value) {
      best_value = value;
      best_alpha = alpha;
    }
  };

  double a = 0.0;
  double b = alpha_max;
  double c = b - ratio * (b - a);
  double d = a + ratio * (b - a);
  double fc = sample(c);
  double fd = sample(d);
  track(c, fc);
  track(d, fd);
  while (b - a > interval_tol && best.evaluations + 1 < max_evals) {
    // ties keep the left part so that a region of +inf is cut away
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - ratio * (b - a);
      fc = sample(c);
      track(c, fc);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + ratio * (b - a);
      fd = sample(d);
      track(d, fd);
    }
  }

  double alpha = 0.5 * (a + b);
  double value = sample(alpha);
  if (value > best_value) {
    alpha = best_alpha;
    value = best_value;
  }
  for (int halving = 0; value > phi0 && halving < 64; ++halving) {
    alpha *= 0.5;
    value = sample(alpha);
  }
  if (value > phi0) return best;
  best.alpha = alpha;
  best.value = value;
  return best;
}

MinimizeResult newton_minimize(const EnergyProblem& problem, std::span<const double> u_init,
                               const NewtonConfig& config) {
  if (u_init.size() != problem.num_free()) {
    throw std::invalid_argument("newton_minimize: initial guess has length " + std::to_string(u_init.size()) +
                                ", expected " + std::to_string(problem.num_free()));
  }
  MinimizeResult result;
  result.u_star.assign(u_init.begin(), u_init.end());
  double energy = 0.0;
  std::vector<double> g = problem.gradient(result.u_star, &energy);
  if (!std::isfinite(energy)) throw std::domain_error("newton_minimize: non-finite energy at the initial guess");
  result.J_star = energy;

  std::vector<double> trial(result.u_star.size());
  for (std::size_t k = 0;; ++k) {
    result.grad_norm = norm_inf(g);
    if (result.grad_norm <= config.grad_tol * (1.0 + std::abs(result.J_star))) {
      result.converged = true;
      return result;
    }
    if (k == config.max_iters) {
      throw NonConvergence("newton_minimize: no convergence in " + std::to_string(config.max_iters) +
                               " iterations, |grad|_inf = " + std::to_string(result.grad_norm),
                           result);
    }

    Direction dir;
    try {
      const SparseMatrix h = problem.hessian(result.u_star);
      dir = newton_direction(problem, h, g, config);
    } catch (const std::runtime_error& e) {
      throw NonConvergence(std::string("newton_minimize: iteration ") + std::to_string(k + 1) + ": " + e.what(),
                           result);
    }

    const auto phi = [&](double alpha) {
      for (std::size_t i = 0; i < trial.size(); ++i) trial[i] = result.u_star[i] + alpha * dir.d[i];
      return problem.energy(trial);
    };
    const LineSearchResult ls = golden_section(phi, config.linesearch.alpha_max, config.linesearch.interval_tol,
                                               config.linesearch.max_evals);

    const double previous = result.J_star;
    for (std::size_t i = 0; i < trial.size(); ++i) result.u_star[i] += ls.alpha * dir.d[i];
    g = problem.gradient(result.u_star, &energy);
    result.J_star = energy;
    result.iterations = k + 1;

    IterationRecord record;
    record.iteration = k + 1;
    record.energy = energy;
    record.grad_norm = result.grad_norm;
    record.alpha = ls.alpha;
    record.path = dir.path;
    record.inner_iterations = dir.inner_iterations;
    record.shift = dir.shift;
    result.log.push_back(record);
    if (config.observer) config.observer(record);

    if (previous - energy <= config.energy_tol * std::abs(energy)) {
      result.grad_norm = norm_inf(g);
      result.converged = true;
      return result;
    }
  }
}

std::vector<ContinuationStep> continuation_hyperelastic(EnergyProblem& problem, const NewtonConfig& config,
                                                        int steps,
                                                        const std::function<void(const ContinuationStep&)>& on_step) {
  if (problem.kind() != Benchmark::NeoHooke) {
    throw std::invalid_argument("continuation_hyperelastic: needs the bar problem");
  }
  std::vector<ContinuationStep> out;
  std::vector<double> u = problem.initial_guess();
  for (int t = 1; t <= steps; ++t) {
    ContinuationStep step;
    step.step = t;
    step.angle = bar_rotation_angle(t);
    problem.set_dirichlet(bar_dirichlet(problem.mesh(), step.angle));
    step.initial_energy = problem.energy(u);
    try {
      step.result = newton_minimize(problem, u, config);
    } catch (const NonConvergence& e) {
      throw NonConvergence("load step " + std::to_string(t) + ": " + e.what(), e.best());
    } catch (const std::exception& e) {
      throw std::runtime_error("load step " + std::to_string(t) + ": " + e.what());
    }
    u = step.result.u_star;
    if (on_step) on_step(step);
    out.push_back(std::move(step));
  }
  return out;
}

std::vector<ContinuationStep> continuation_hyperelastic(int level, const BenchmarkSettings& settings,
                                                        const NewtonConfig& config, int steps) {
  EnergyProblem problem = build_problem(Benchmark::NeoHooke, level, settings);
  return continuation_hyperelastic(problem, config, steps);
}

}  // namespace nlmin
