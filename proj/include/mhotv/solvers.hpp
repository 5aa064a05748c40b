#pragma once

// l1-regularized reconstruction.
//
// admm_l1 minimizes the unconstrained model exactly as written
//
//   F(f) = ||A f - b||_2^2 + lambda * sum_j w_j ||T_j f||_1
//
// ADMM runs on the equivalent problem F/2 with the split d_j = T_j f, so in
// scaled form (dual u, penalty rho):
//
//   f  <- (A^T A + rho T^T T)^{-1} (A^T b + rho T^T (d - u))
//   d_j <- shrink(T_j f + u_j, lambda * w_j / (2 rho))
//   u  <- u + T f - d
//
// The 1/2 inside the shrink threshold comes from halving the data term, so
// lambda keeps the meaning it has in F.
//
// constrained_l1 minimizes sum_j w_j ||T_j f||_1 subject to A f = b with an
// augmented Lagrangian (Bregman) outer loop: each outer step solves
//   min  mu/2 ||A f - b_k||^2 + sum_j w_j ||T_j f||_1
// with warm-started ADMM sweeps and then adds the residual back,
// b_{k+1} = b_k + (b - A f). One sweep per outer step is split Bregman; with
// accurate inner solves (large inner_iter, small inner_tol) ||Af - b|| is
// non-increasing over outer steps. It stops once the violation and both ADMM
// residuals are below tolerance.

#include <Eigen/Cholesky>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mhotv/errors.hpp"
#include "mhotv/operators.hpp"
#include "mhotv/report.hpp"
#include "mhotv/transform.hpp"
#include "mhotv/wavelet.hpp"

namespace mhotv {

/// Elementwise sign(v) * max(|v| - tau, 0).
inline Signal shrink(const Signal& v, double tau) {
  if (tau < 0.0) detail::fail<Error>("shrink: threshold must be >= 0");
  return v.unaryExpr([tau](double x) {
    const double m = std::abs(x) - tau;
    return m > 0.0 ? std::copysign(m, x) : 0.0;
  });
}

/// Elementwise max(f, 0).
inline Signal project_nonneg(const Signal& f) { return f.cwiseMax(0.0); }

enum class RegularizerKind { mhotv, wavelet };

struct RegularizerSpec {
  RegularizerKind kind = RegularizerKind::mhotv;
  double order = 1.0;
  int levels = 1;  // l + 1
  double lambda = 0.0;
  Backend backend = Backend::fourier;
  bool drop_wrapped = false;
  std::optional<std::vector<double>> weights;  // replaces the default level weights

  void validate() const {
    if (!(lambda >= 0.0)) detail::fail<ConfigError>("regularizer: lambda must be >= 0");
    if (levels < 1) detail::fail<ConfigError>("regularizer: levels must be >= 1");
    if (!(order > 0.0)) detail::fail<ConfigError>("regularizer: order must be positive");
    if (kind == RegularizerKind::wavelet &&
        !(is_integer_order(order) && order >= 1.0 && order <= 3.0))
      detail::fail<ConfigError>("regularizer: wavelet backend needs integer order 1, 2 or 3");
    if (weights && static_cast<int>(weights->size()) != levels)
      detail::fail<ConfigError>("regularizer: weight override needs one weight per level");
  }

  /// HOTV3, MHOTV2(3), Daub3(3), MHOTV1.5(2), ...
  std::string label() const {
    std::string k = std::to_string(order);
    k.erase(k.find_last_not_of('0') + 1);
    if (k.back() == '.') k.pop_back();
    if (kind == RegularizerKind::wavelet) return "Daub" + k + "(" + std::to_string(levels) + ")";
    if (levels == 1) return "HOTV" + k;
    return "MHOTV" + k + "(" + std::to_string(levels) + ")";
  }
};

/// Transform, per-level weights and lambda, ready for the solvers.
struct Regularizer {
  std::shared_ptr<const SparsifyingTransform> transform;
  std::vector<double> weights;
  double lambda = 0.0;
};

inline Regularizer make_regularizer(const RegularizerSpec& spec, Shape shape) {
  spec.validate();
  Regularizer reg;
  if (spec.kind == RegularizerKind::mhotv) {
    reg.transform = std::make_shared<MultiscaleTransform>(spec.order, spec.levels, shape,
                                                          spec.backend, spec.drop_wrapped);
  } else {
    reg.transform = std::make_shared<WaveletFrameTransform>(static_cast<int>(spec.order),
                                                            spec.levels, shape);
  }
  reg.weights = spec.weights ? *spec.weights : reg.transform->default_weights();
  reg.lambda = spec.lambda;
  return reg;
}

struct SolverOptions {
  double rho = 1.0;          // relative to ||A||^2 / ||T||^2
  bool adapt_rho = true;     // residual balancing
  int adapt_every = 5;
  int max_iter = 300;
  int cg_iter = 20;
  double cg_tol = 1e-10;
  double primal_tol = 1e-6;  // relative ||Tf - d|| / max(||Tf||, ||d||)
  double dual_tol = 1e-6;    // relative ||rho T^T (d - d_prev)|| / max(||rho T^T u||, ||A^T b||)
  bool nonneg = false;
  std::uint64_t seed = 0;    // zero initialization is used; kept for reproducible configs
  Eigen::Index dense_limit = 2048;  // factor the normal equations up to this many unknowns

  // constrained solver
  double data_penalty = 10.0;  // mu, relative to rho * ||T||^2 / ||A||^2
  int inner_iter = 1;         // ADMM sweeps per outer step (1 = split Bregman)
  double inner_tol = 1e-9;    // inner sweeps stop early once both relative residuals are below this
  int max_outer = 5000;
  double constraint_tol = 1e-7;  // relative ||Af - b|| / ||b||

  void validate() const {
    if (!(rho > 0.0) || max_iter < 1 || cg_iter < 1 || !(cg_tol > 0.0) || !(primal_tol > 0.0) ||
        !(dual_tol > 0.0) || !(data_penalty > 0.0) || inner_iter < 1 || !(inner_tol > 0.0) || max_outer < 1 ||
        !(constraint_tol > 0.0) || adapt_every < 1)
      detail::fail<ConfigError>("solver options must all be positive");
  }
};

namespace detail {

inline double squared_norm_estimate(const std::function<Signal(const Signal&)>& gram,
                                    Eigen::Index n, int iterations = 40) {
  std::mt19937_64 rng(1234);
  std::normal_distribution<double> normal(0.0, 1.0);
  Signal x(n);
  for (auto& v : x) v = normal(rng);
  double est = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const double nx = x.norm();
    if (nx == 0.0) return 0.0;
    x /= nx;
    x = gram(x);
    est = x.norm();
  }
  return est;
}

inline double stack_norm(const CoefficientStack& c) {
  double acc = 0.0;
  for (const auto& p : c.planes) acc += p.squaredNorm();
  return std::sqrt(acc);
}

inline double weighted_l1(const CoefficientStack& c, const std::vector<double>& w) {
  double acc = 0.0;
  for (std::size_t p = 0; p < c.planes.size(); ++p)
    acc += w[p / c.directions] * c.planes[p].lpNorm<1>();
  return acc;
}

}  // namespace detail

/// Normal equations (alpha A^T A + rho T^T T) x = r for one (A, T) pair.
///
/// Up to `dense_limit` unknowns both Gram matrices are formed once and each
/// (alpha, rho) pair gets a cached Cholesky factor; larger problems use
/// warm-started CG. One instance may serve many solves on the same operator
/// pair (a lambda sweep), but it is not safe to share across threads.
class NormalEquations {
 public:
  NormalEquations(const LinearOperator& a, const SparsifyingTransform& t,
                  Eigen::Index dense_limit = 2048)
      : a_(a), t_(t) {
    if (a.cols() != t.shape().size())
      detail::fail<DimensionMismatch>("operator has " + std::to_string(a.cols()) +
                                      " columns but the regularizer acts on " +
                                      std::to_string(t.shape().size()) + " unknowns");
    const Eigen::Index n = a.cols();
    a_norm2_ = detail::squared_norm_estimate([&](const Signal& x) { return a.adjoint(a.apply(x)); },
                                             n);
    t_norm2_ = detail::squared_norm_estimate([&](const Signal& x) { return t.adjoint(t.forward(x)); },
                                             n);
    if (n <= dense_limit) {
      ata_ = a.normal_matrix();
      if (ata_) {
        gram_ = Eigen::MatrixXd(n, n);
        Signal e = Signal::Zero(n);
        if (t.shift_invariant()) {
          e[0] = 1.0;
          const Signal c0 = t.adjoint(t.forward(e));
          for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index r = 0; r < n; ++r) (*gram_)(r, i) = c0[(r - i + n) % n];
        } else {
          for (Eigen::Index i = 0; i < n; ++i) {
            e[i] = 1.0;
            gram_->col(i) = t.adjoint(t.forward(e));
            e[i] = 0.0;
          }
        }
        *gram_ = 0.5 * (*gram_ + gram_->transpose());
      }
    }
  }

  bool dense() const { return gram_.has_value(); }
  double operator_norm2() const { return a_norm2_; }
  double transform_norm2() const { return t_norm2_; }

  Signal solve(double alpha, double rho, const Signal& rhs, const Signal& warm,
               int cg_iter, double cg_tol, SolverReport& rep) {
    if (dense()) return factor(alpha, rho, rep).solve(rhs);
    return conjugate_gradient(alpha, rho, rhs, warm, cg_iter, cg_tol, rep);
  }

 private:
  const Eigen::LLT<Eigen::MatrixXd>& factor(double alpha, double rho, SolverReport& rep) {
    const auto key = std::make_pair(alpha, rho);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    if (cache_.size() >= kMaxFactors) {
      cache_.erase(order_.front());
      order_.pop_front();
    }
    Eigen::MatrixXd m = alpha * *ata_ + rho * *gram_;
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) {
      // A and T share a null space; a tiny ridge keeps the factor defined
      m.diagonal().array() += 1e-12 * m.diagonal().maxCoeff();
      llt.compute(m);
    }
    ++rep.factorizations;
    order_.push_back(key);
    return cache_.emplace(key, std::move(llt)).first->second;
  }

  Signal conjugate_gradient(double alpha, double rho, const Signal& rhs, const Signal& warm,
                            int cg_iter, double cg_tol, SolverReport& rep) {
    auto apply = [&](const Signal& x) {
      rep.operator_applications += 2;
      rep.transform_applications += 2;
      return Signal(alpha * a_.adjoint(a_.apply(x)) + rho * t_.adjoint(t_.forward(x)));
    };
    Signal x = warm;
    Signal r = rhs - apply(x);
    Signal p = r;
    double rr = r.squaredNorm();
    const double stop = cg_tol * cg_tol * std::max(rhs.squaredNorm(), 1e-300);
    for (int it = 0; it < cg_iter && rr > stop; ++it) {
      const Signal q = apply(p);
      const double pq = p.dot(q);
      if (pq <= 0.0) break;
      const double step = rr / pq;
      x += step * p;
      r -= step * q;
      const double rr_new = r.squaredNorm();
      p = r + (rr_new / rr) * p;
      rr = rr_new;
      ++rep.cg_iterations;
    }
    return x;
  }

  static constexpr std::size_t kMaxFactors = 6;

  const LinearOperator& a_;
  const SparsifyingTransform& t_;
  double a_norm2_ = 1.0;
  double t_norm2_ = 1.0;
  std::optional<Eigen::MatrixXd> ata_;
  std::optional<Eigen::MatrixXd> gram_;
  std::map<std::pair<double, double>, Eigen::LLT<Eigen::MatrixXd>> cache_;
  std::deque<std::pair<double, double>> order_;
};

namespace detail {

struct AdmmState {
  Signal f;
  CoefficientStack d;
  CoefficientStack u;
};

inline CoefficientStack add(const CoefficientStack& a, const CoefficientStack& b, double s = 1.0) {
  CoefficientStack out = a;
  for (std::size_t p = 0; p < out.planes.size(); ++p) out.planes[p] += s * b.planes[p];
  return out;
}

inline void check_problem(const LinearOperator& a, const Signal& b, const Regularizer& reg) {
  if (b.size() != a.rows())
    fail<DimensionMismatch>("data has length " + std::to_string(b.size()) + " but the operator has " +
                            std::to_string(a.rows()) + " rows");
  if (a.cols() != reg.transform->shape().size())
    fail<DimensionMismatch>("operator has " + std::to_string(a.cols()) +
                            " columns but the regularizer acts on " +
                            std::to_string(reg.transform->shape().size()) + " unknowns");
  if (!(reg.lambda >= 0.0)) fail<ConfigError>("lambda must be >= 0");
}

}  // namespace detail

/// Unconstrained MHOTV / wavelet l1 reconstruction by ADMM.
///
/// `system` may be shared across calls with the same operator and
/// regularizer transform (e.g. a lambda sweep) to reuse factorizations.
inline std::pair<Signal, SolverReport> admm_l1(const LinearOperator& a, const Signal& b,
                                               const Regularizer& reg, const SolverOptions& opts,
                                               NormalEquations* system = nullptr) {
  opts.validate();
  detail::check_problem(a, b, reg);
  const auto t0 = std::chrono::steady_clock::now();
  const SparsifyingTransform& t = *reg.transform;

  std::unique_ptr<NormalEquations> owned;
  if (!system) {
    owned = std::make_unique<NormalEquations>(a, t, opts.dense_limit);
    system = owned.get();
  }

  SolverReport rep;
  rep.solver = "admm_l1[" + t.describe() + "]";
  double rho = opts.rho * system->operator_norm2() / std::max(system->transform_norm2(), 1e-300);
  const double rho_floor = rho * 1e-10;

  const Signal atb = a.adjoint(b);
  const double atb_norm = atb.norm();
  ++rep.operator_applications;

  detail::AdmmState s;
  s.f = Signal::Zero(a.cols());
  s.d = t.forward(s.f);
  s.u = s.d;
  ++rep.transform_applications;

  for (int it = 1; it <= opts.max_iter; ++it) {
    const Signal rhs = atb + rho * t.adjoint(detail::add(s.d, s.u, -1.0));
    s.f = system->solve(1.0, rho, rhs, s.f, opts.cg_iter, opts.cg_tol, rep);
    if (opts.nonneg) s.f = project_nonneg(s.f);

    const CoefficientStack tf = t.forward(s.f);
    CoefficientStack d_prev = s.d;
    for (std::size_t p = 0; p < tf.planes.size(); ++p) {
      const double tau = reg.lambda * reg.weights[p / tf.directions] / (2.0 * rho);
      s.d.planes[p] = shrink(tf.planes[p] + s.u.planes[p], tau);
      s.u.planes[p] += tf.planes[p] - s.d.planes[p];
    }
    rep.transform_applications += 3;

    const double r_abs = detail::stack_norm(detail::add(tf, s.d, -1.0));
    const double r_scale = std::max({detail::stack_norm(tf), detail::stack_norm(s.d), 1e-300});
    const double s_abs = rho * t.adjoint(detail::add(s.d, d_prev, -1.0)).norm();
    const double s_scale = std::max({rho * t.adjoint(s.u).norm(), atb_norm, 1e-300});
    const double r_rel = r_abs / r_scale;
    const double s_rel = s_abs / s_scale;

    const Signal resid = a.apply(s.f) - b;
    ++rep.operator_applications;
    rep.objective.push_back(resid.squaredNorm() + reg.lambda * detail::weighted_l1(tf, reg.weights));
    rep.primal_residual.push_back(r_rel);
    rep.dual_residual.push_back(s_rel);
    rep.iterations = it;

    if (r_rel < opts.primal_tol && s_rel < opts.dual_tol) {
      rep.converged = true;
      break;
    }
    if (opts.adapt_rho && it % opts.adapt_every == 0) {
      if (r_rel > 10.0 * s_rel) {
        rho *= 2.0;
        for (auto& p : s.u.planes) p *= 0.5;
      } else if (s_rel > 10.0 * r_rel && rho * 0.5 >= rho_floor) {
        rho *= 0.5;
        for (auto& p : s.u.planes) p *= 2.0;
      }
    }
  }

  const double nb = b.norm();
  rep.relative_data_error = nb > 0.0 ? (a.apply(s.f) - b).norm() / nb : 0.0;
  rep.final_rho = rho;
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(s.f), std::move(rep)};
}

inline std::pair<Signal, SolverReport> admm_l1(const LinearOperator& a, const Signal& b,
                                               const RegularizerSpec& spec,
                                               const SolverOptions& opts,
                                               std::optional<Shape> shape = std::nullopt) {
  return admm_l1(a, b, make_regularizer(spec, shape.value_or(Shape::line(a.cols()))), opts);
}

/// Equality-constrained reconstruction min sum_j w_j ||T_j f||_1 s.t. Af = b.
/// lambda plays no role here (the constraint fixes the data fit).
inline std::pair<Signal, SolverReport> constrained_l1(const LinearOperator& a, const Signal& b,
                                                      const Regularizer& reg,
                                                      const SolverOptions& opts,
                                                      NormalEquations* system = nullptr) {
  opts.validate();
  detail::check_problem(a, b, reg);
  const auto t0 = std::chrono::steady_clock::now();
  const SparsifyingTransform& t = *reg.transform;

  std::unique_ptr<NormalEquations> owned;
  if (!system) {
    owned = std::make_unique<NormalEquations>(a, t, opts.dense_limit);
    system = owned.get();
  }

  SolverReport rep;
  rep.solver = "constrained_l1[" + t.describe() + "]";
  const double nb = b.norm();
  detail::AdmmState s;
  s.f = Signal::Zero(a.cols());
  s.d = t.forward(s.f);
  s.u = s.d;
  if (nb == 0.0) {
    rep.converged = true;
    rep.relative_data_error = 0.0;
    return {std::move(s.f), std::move(rep)};
  }

  // Penalties: rho balances the l1 weights against unit-size coefficients,
  // mu puts mu A^T A on the same footing as rho T^T T. Both stay fixed
  // (adapt_rho is ignored here).
  const double rho = opts.rho;
  const double mu = opts.data_penalty * rho * system->transform_norm2() /
                    std::max(system->operator_norm2(), 1e-300);

  Signal b_k = b;
  for (int outer = 1; outer <= opts.max_outer; ++outer) {
    double r_rel = 0.0, s_rel = 0.0;
    for (int inner = 1; inner <= opts.inner_iter; ++inner) {
      const Signal rhs = mu * a.adjoint(b_k) + rho * t.adjoint(detail::add(s.d, s.u, -1.0));
      ++rep.operator_applications;
      s.f = system->solve(mu, rho, rhs, s.f, opts.cg_iter, opts.cg_tol, rep);
      if (opts.nonneg) s.f = project_nonneg(s.f);

      const CoefficientStack tf = t.forward(s.f);
      CoefficientStack d_prev = s.d;
      for (std::size_t p = 0; p < tf.planes.size(); ++p) {
        const double tau = reg.weights[p / tf.directions] / rho;
        s.d.planes[p] = shrink(tf.planes[p] + s.u.planes[p], tau);
        s.u.planes[p] += tf.planes[p] - s.d.planes[p];
      }
      rep.transform_applications += 3;

      r_rel = detail::stack_norm(detail::add(tf, s.d, -1.0)) /
              std::max({detail::stack_norm(tf), detail::stack_norm(s.d), 1e-300});
      s_rel = rho * t.adjoint(detail::add(s.d, d_prev, -1.0)).norm() /
              std::max({rho * t.adjoint(s.u).norm(), mu * a.adjoint(b_k).norm(), 1e-300});
      rep.iterations += 1;
      rep.primal_residual.push_back(r_rel);
      rep.dual_residual.push_back(s_rel);
      rep.objective.push_back(detail::weighted_l1(tf, reg.weights));
      if (r_rel < opts.inner_tol && s_rel < opts.inner_tol) break;
    }

    const Signal af = a.apply(s.f);
    ++rep.operator_applications;
    const double viol = (af - b).norm() / nb;
    rep.constraint_violation.push_back(viol);
    rep.outer_iterations = outer;
    if (viol < opts.constraint_tol && r_rel < opts.primal_tol && s_rel < opts.dual_tol) {
      rep.converged = true;
      break;
    }
    b_k += b - af;
  }

  rep.relative_data_error = (a.apply(s.f) - b).norm() / nb;
  rep.final_rho = rho;
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(s.f), std::move(rep)};
}

inline std::pair<Signal, SolverReport> constrained_l1(const LinearOperator& a, const Signal& b,
                                                      const RegularizerSpec& spec,
                                                      const SolverOptions& opts,
                                                      std::optional<Shape> shape = std::nullopt) {
  return constrained_l1(a, b, make_regularizer(spec, shape.value_or(Shape::line(a.cols()))),
                        opts);
}

}  // namespace mhotv
