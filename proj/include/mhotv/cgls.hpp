#pragma once

#include <chrono>
#include <utility>

#include "mhotv/operators.hpp"
#include "mhotv/report.hpp"

namespace mhotv {

/// Conjugate gradient least squares on min ||Af - b||_2, started from zero.
/// Stops when ||A^T r|| <= tol * ||A^T b|| or after max_iter iterations.
inline std::pair<Signal, SolverReport> cgls(const LinearOperator& a, const Signal& b,
                                            int max_iter, double tol) {
  if (b.size() != a.rows())
    detail::fail<DimensionMismatch>("cgls: data length " + std::to_string(b.size()) +
                                    " does not match operator rows " + std::to_string(a.rows()));
  const auto t0 = std::chrono::steady_clock::now();
  SolverReport rep;
  rep.solver = "cgls";

  Signal x = Signal::Zero(a.cols());
  Signal r = b;
  Signal s = a.adjoint(r);
  ++rep.operator_applications;
  Signal p = s;
  double gamma = s.squaredNorm();
  const double norm_atb = std::sqrt(gamma);

  if (norm_atb == 0.0) {
    rep.converged = true;
  } else {
    for (int it = 0; it < max_iter; ++it) {
      const Signal q = a.apply(p);
      const double qq = q.squaredNorm();
      if (qq == 0.0) break;
      const double alpha = gamma / qq;
      x += alpha * p;
      r -= alpha * q;
      s = a.adjoint(r);
      rep.operator_applications += 2;
      const double gamma_new = s.squaredNorm();
      ++rep.iterations;
      rep.objective.push_back(r.squaredNorm());
      rep.primal_residual.push_back(std::sqrt(gamma_new) / norm_atb);
      rep.dual_residual.push_back(0.0);
      if (std::sqrt(gamma_new) <= tol * norm_atb) {
        rep.converged = true;
        break;
      }
      p = s + (gamma_new / gamma) * p;
      gamma = gamma_new;
    }
  }
  const double nb = b.norm();
  rep.relative_data_error = nb > 0.0 ? (a.apply(x) - b).norm() / nb : 0.0;
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(x), std::move(rep)};
}

}  // namespace mhotv
