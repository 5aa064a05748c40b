#pragma once

// Oracle lambda selection: solve over a grid and keep the lambda with the
// smallest true error (simulation studies only, f_true must be known).

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "mhotv/metrics.hpp"
#include "mhotv/solvers.hpp"

namespace mhotv {

struct LambdaGrid {
  int points = 12;
  double lo = 1e-4;
  double hi = 1e1;
  bool relative = true;  // multiply by 2 ||A^T b||_inf
  int refine = 0;        // extra golden-section steps around the best grid point
  std::vector<double> values;  // explicit grid; overrides points/lo/hi when non-empty

  void validate() const {
    if (values.empty()) {
      if (points < 1) detail::fail<ConfigError>("lambda grid: points must be >= 1");
      if (!(lo > 0.0) || !(hi >= lo)) detail::fail<ConfigError>("lambda grid: need 0 < lo <= hi");
    }
    for (double v : values)
      if (!(v >= 0.0)) detail::fail<ConfigError>("lambda grid: values must be >= 0");
    if (refine < 0) detail::fail<ConfigError>("lambda grid: refine must be >= 0");
  }
};

inline double lambda_scale(const LinearOperator& a, const Signal& b) {
  return 2.0 * a.adjoint(b).cwiseAbs().maxCoeff();
}

/// Logarithmic grid lo..hi (times the data scale when relative).
inline std::vector<double> make_lambda_grid(const LambdaGrid& g, double scale = 1.0) {
  g.validate();
  if (!g.values.empty()) return g.values;
  const double s = g.relative ? scale : 1.0;
  std::vector<double> out;
  for (int i = 0; i < g.points; ++i) {
    const double t = g.points == 1 ? 0.0 : static_cast<double>(i) / (g.points - 1);
    out.push_back(s * g.lo * std::pow(g.hi / g.lo, t));
  }
  return out;
}

struct SweepPoint {
  double lambda = 0.0;
  double rel_error = 0.0;
  double data_error = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct SweepResult {
  std::vector<SweepPoint> curve;  // grid points in grid order, then refinement points
  std::size_t best = 0;
  Signal solution;
  SolverReport report;
  bool at_endpoint = false;  // best grid point is the first or last of a multi-point grid

  const SweepPoint& best_point() const { return curve[best]; }
};

/// Solves at every grid lambda (no pruning) and returns the true-error minimizer.
inline SweepResult lambda_sweep(const LinearOperator& a, const Signal& b, const Signal& truth,
                                const Regularizer& reg_template, const std::vector<double>& grid,
                                const SolverOptions& opts, int refine = 0) {
  if (grid.empty()) detail::fail<ConfigError>("lambda_sweep: empty grid");
  NormalEquations system(a, *reg_template.transform, opts.dense_limit);
  SweepResult out;
  double best_err = std::numeric_limits<double>::infinity();

  auto solve_at = [&](double lambda) {
    Regularizer reg = reg_template;
    reg.lambda = lambda;
    auto [f, rep] = admm_l1(a, b, reg, opts, &system);
    SweepPoint p{lambda, rel_error(f, truth), rep.relative_data_error, rep.iterations, rep.converged};
    out.curve.push_back(p);
    if (p.rel_error < best_err) {
      best_err = p.rel_error;
      out.best = out.curve.size() - 1;
      out.solution = std::move(f);
      out.report = std::move(rep);
    }
    return p.rel_error;
  };

  for (double lambda : grid) solve_at(lambda);
  out.at_endpoint = grid.size() > 1 && (out.best == 0 || out.best == grid.size() - 1);

  if (refine > 0 && grid.size() > 2 && !out.at_endpoint && grid[out.best] > 0.0) {
    // golden-section search in log(lambda) on the bracket around the best grid point
    double lo = std::log(grid[out.best - 1]), hi = std::log(grid[out.best + 1]);
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = solve_at(std::exp(x1)), f2 = solve_at(std::exp(x2));
    for (int it = 2; it < refine; ++it) {
      if (f1 < f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - g * (hi - lo);
        f1 = solve_at(std::exp(x1));
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + g * (hi - lo);
        f2 = solve_at(std::exp(x2));
      }
    }
  }
  return out;
}

inline SweepResult lambda_sweep(const LinearOperator& a, const Signal& b, const Signal& truth,
                                const RegularizerSpec& spec, Shape shape,
                                const std::vector<double>& grid, const SolverOptions& opts,
                                int refine = 0) {
  return lambda_sweep(a, b, truth, make_regularizer(spec, shape), grid, opts, refine);
}

}  // namespace mhotv
