#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "mhotv/flops.hpp"

namespace mhotv {

/// Per-solve diagnostics. The per-iteration traces all have `iterations`
/// entries; `constraint_violation` has one entry per outer iteration of the
/// constrained solver.
struct SolverReport {
  std::string solver;
  std::vector<double> objective;
  std::vector<double> primal_residual;
  std::vector<double> dual_residual;
  std::vector<double> constraint_violation;
  double relative_data_error = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  int outer_iterations = 0;
  bool converged = false;
  double final_rho = 0.0;
  double wall_seconds = 0.0;
  std::uint64_t operator_applications = 0;
  std::uint64_t transform_applications = 0;
  std::uint64_t cg_iterations = 0;
  std::uint64_t factorizations = 0;
  FlopCounter flops;
};

inline void to_json(nlohmann::json& j, const FlopCounter& c) {
  j = nlohmann::json{{"additions", c.additions},
                     {"multiplications", c.multiplications},
                     {"transform_flops", c.transform_flops},
                     {"spectral_products", c.spectral_products},
                     {"total", c.total()}};
}

inline nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

inline void to_json(nlohmann::json& j, const SolverReport& r) {
  j = nlohmann::json{{"solver", r.solver},
                     {"iterations", r.iterations},
                     {"outer_iterations", r.outer_iterations},
                     {"converged", r.converged},
                     {"relative_data_error", finite_or_null(r.relative_data_error)},
                     {"final_rho", r.final_rho},
                     {"wall_seconds", r.wall_seconds},
                     {"operator_applications", r.operator_applications},
                     {"transform_applications", r.transform_applications},
                     {"cg_iterations", r.cg_iterations},
                     {"factorizations", r.factorizations},
                     {"flops", r.flops},
                     {"objective", r.objective},
                     {"primal_residual", r.primal_residual},
                     {"dual_residual", r.dual_residual},
                     {"constraint_violation", r.constraint_violation}};
}

}  // namespace mhotv
