#pragma once

// Forward models A with explicit adjoints.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mhotv/errors.hpp"
#include "mhotv/spectral.hpp"

namespace mhotv {

namespace detail {

// A^T A computed once on first request and shared by copies of the operator.
struct NormalCache {
  std::once_flag once;
  Eigen::MatrixXd matrix;
};

}  // namespace detail

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

class LinearOperator {
 public:
  virtual ~LinearOperator() = default;

  virtual Eigen::Index rows() const = 0;
  virtual Eigen::Index cols() const = 0;
  virtual Signal apply(const Signal& x) const = 0;
  virtual Signal adjoint(const Signal& y) const = 0;
  virtual std::string describe() const = 0;

  /// Dense A^T A when the operator can form it cheaply; solvers use it to
  /// factor their normal equations directly instead of running CG.
  virtual std::optional<Eigen::MatrixXd> normal_matrix() const { return std::nullopt; }

 protected:
  void check_apply(const Signal& x) const {
    if (x.size() != cols())
      detail::fail<DimensionMismatch>(describe() + ": apply got length " +
                                      std::to_string(x.size()) + ", expected " +
                                      std::to_string(cols()));
  }
  void check_adjoint(const Signal& y) const {
    if (y.size() != rows())
      detail::fail<DimensionMismatch>(describe() + ": adjoint got length " +
                                      std::to_string(y.size()) + ", expected " +
                                      std::to_string(rows()));
  }
};

class IdentityOperator final : public LinearOperator {
 public:
  explicit IdentityOperator(Eigen::Index n) : n_(n) {}

  Eigen::Index rows() const override { return n_; }
  Eigen::Index cols() const override { return n_; }
  Signal apply(const Signal& x) const override {
    check_apply(x);
    return x;
  }
  Signal adjoint(const Signal& y) const override {
    check_adjoint(y);
    return y;
  }
  std::string describe() const override { return "identity(" + std::to_string(n_) + ")"; }
  std::optional<Eigen::MatrixXd> normal_matrix() const override {
    return Eigen::MatrixXd::Identity(n_, n_);
  }

 private:
  Eigen::Index n_;
};

/// Sparse matrix with a stored transpose, so the adjoint is exact.
class SparseOperator final : public LinearOperator {
 public:
  SparseOperator(SparseMatrix a, std::string name)
      : a_(std::move(a)), at_(a_.transpose()), name_(std::move(name)),
        cache_(std::make_shared<detail::NormalCache>()) {
    a_.makeCompressed();
    at_.makeCompressed();
  }

  Eigen::Index rows() const override { return a_.rows(); }
  Eigen::Index cols() const override { return a_.cols(); }
  Signal apply(const Signal& x) const override {
    check_apply(x);
    return a_ * x;
  }
  Signal adjoint(const Signal& y) const override {
    check_adjoint(y);
    return at_ * y;
  }
  std::string describe() const override { return name_; }
  std::optional<Eigen::MatrixXd> normal_matrix() const override {
    std::call_once(cache_->once, [this] {
      SparseMatrix ata = at_ * a_;
      cache_->matrix = Eigen::MatrixXd(ata);
    });
    return cache_->matrix;
  }

  const SparseMatrix& matrix() const { return a_; }
  Eigen::Index nonzeros() const { return a_.nonZeros(); }

 private:
  SparseMatrix a_;
  SparseMatrix at_;
  std::string name_;
  std::shared_ptr<detail::NormalCache> cache_;
};

class DenseOperator final : public LinearOperator {
 public:
  DenseOperator(Eigen::MatrixXd a, std::string name)
      : a_(std::move(a)), name_(std::move(name)), cache_(std::make_shared<detail::NormalCache>()) {}

  Eigen::Index rows() const override { return a_.rows(); }
  Eigen::Index cols() const override { return a_.cols(); }
  Signal apply(const Signal& x) const override {
    check_apply(x);
    return a_ * x;
  }
  Signal adjoint(const Signal& y) const override {
    check_adjoint(y);
    return a_.transpose() * y;
  }
  std::string describe() const override { return name_; }
  std::optional<Eigen::MatrixXd> normal_matrix() const override {
    std::call_once(cache_->once, [this] {
      Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(a_.cols(), a_.cols());
      ata.selfadjointView<Eigen::Lower>().rankUpdate(a_.transpose());
      cache_->matrix = ata.selfadjointView<Eigen::Lower>();
    });
    return cache_->matrix;
  }

  const Eigen::MatrixXd& matrix() const { return a_; }

 private:
  Eigen::MatrixXd a_;
  std::string name_;
  std::shared_ptr<detail::NormalCache> cache_;
};

/// m x n sensing matrix: each entry is nonzero with probability `density`,
/// nonzeros drawn from U[0,1]. Deterministic for a given seed.
inline SparseOperator random_sensing(Eigen::Index m, Eigen::Index n, double density,
                                     std::uint64_t seed) {
  if (!(density > 0.0 && density <= 1.0))
    detail::fail<ConfigError>("random_sensing: density must lie in (0, 1]");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution keep(density);
  std::uniform_real_distribution<double> value(0.0, 1.0);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(density * m * n * 1.1) + 16);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (keep(rng)) triplets.emplace_back(i, j, value(rng));
  SparseMatrix a(m, n);
  a.setFromTriplets(triplets.begin(), triplets.end());
  return SparseOperator(std::move(a), "random_sensing(" + std::to_string(m) + "x" +
                                          std::to_string(n) + ", density=" +
                                          std::to_string(density) + ")");
}

/// m x n matrix of i.i.d. N(0,1) entries.
inline DenseOperator gaussian_sensing(Eigen::Index m, Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd a(m, n);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = normal(rng);
  return DenseOperator(std::move(a),
                       "gaussian_sensing(" + std::to_string(m) + "x" + std::to_string(n) + ")");
}

/// Largest singular value estimate by power iteration on A^T A.
inline double operator_norm_estimate(const LinearOperator& a, int iterations = 30,
                                     std::uint64_t seed = 7) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Signal x(a.cols());
  for (auto& v : x) v = normal(rng);
  double sigma = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const double nx = x.norm();
    if (nx == 0.0) return 0.0;
    x /= nx;
    x = a.adjoint(a.apply(x));
    sigma = std::sqrt(x.norm());
  }
  return sigma;
}

/// max over random probes of |<Ax,y> - <x,A^T y>| / (|x| |y| |A|).
inline double adjoint_check(const LinearOperator& a, int trials = 10, std::uint64_t seed = 11) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double norm_a = std::max(operator_norm_estimate(a), 1e-300);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    Signal x(a.cols()), y(a.rows());
    for (auto& v : x) v = normal(rng);
    for (auto& v : y) v = normal(rng);
    const double lhs = a.apply(x).dot(y);
    const double rhs = x.dot(a.adjoint(y));
    worst = std::max(worst, std::abs(lhs - rhs) / (x.norm() * y.norm() * norm_a));
  }
  return worst;
}

}  // namespace mhotv
