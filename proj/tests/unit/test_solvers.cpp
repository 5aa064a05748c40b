#include <gtest/gtest.h>

#include <fstream>
#include <json.hpp>

#include "mhotv/cgls.hpp"
#include "mhotv/solvers.hpp"
#include "test_helpers.hpp"

using namespace mhotv;
using testing_util::random_signal;

namespace {

struct OracleProblem {
  std::string name;
  DenseOperator a{Eigen::MatrixXd(), ""};
  Signal b;
  RegularizerSpec spec;
  bool constrained = false;
  double objective = 0.0;
};

std::vector<OracleProblem> load_oracle() {
  std::ifstream in(std::string(MHOTV_TEST_DATA_DIR) + "/convex_oracle.json");
  const auto j = nlohmann::json::parse(in);
  std::vector<OracleProblem> out;
  for (const auto& p : j.at("problems")) {
    OracleProblem op;
    op.name = p.at("name");
    const int m = p.at("m"), n = p.at("n");
    Eigen::MatrixXd a(m, n);
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < n; ++c) a(r, c) = p.at("A")[r][c];
    op.a = DenseOperator(a, op.name);
    const std::vector<double> b = p.at("b");
    op.b = Eigen::Map<const Signal>(b.data(), m);
    op.spec.kind = p.at("kind") == "wavelet" ? RegularizerKind::wavelet : RegularizerKind::mhotv;
    op.spec.order = p.at("order");
    op.spec.levels = p.at("levels");
    op.spec.lambda = p.at("lambda");
    op.spec.weights = p.at("weights").get<std::vector<double>>();
    op.constrained = p.at("constrained");
    op.objective = p.at("objective");
    out.push_back(std::move(op));
  }
  return out;
}

SolverOptions tight() {
  SolverOptions o;
  o.max_iter = 20000;
  o.primal_tol = 1e-10;
  o.dual_tol = 1e-10;
  return o;
}

double objective(const LinearOperator& a, const Signal& b, const Regularizer& reg, const Signal& f) {
  const auto c = reg.transform->forward(f);
  double l1 = 0.0;
  for (std::size_t p = 0; p < c.planes.size(); ++p) l1 += reg.weights[p / c.directions] * c.planes[p].lpNorm<1>();
  return (a.apply(f) - b).squaredNorm() + reg.lambda * l1;
}

}  // namespace

TEST(Shrink, Examples) {
  Signal v(3);
  v << 3, -1, 0.5;
  EXPECT_EQ(shrink(v, 0.0), v);
  Signal expect(3);
  expect << 2, 0, 0;
  EXPECT_EQ(shrink(v, 1.0), expect);
  EXPECT_THROW(shrink(v, -1.0), Error);
}

TEST(Shrink, MinimizesProximalObjective) {
  for (double v : {-2.3, -0.4, 0.0, 0.7, 5.0})
    for (double tau : {0.0, 0.5, 1.0}) {
      Signal x(1);
      x[0] = v;
      const double s = shrink(x, tau)[0];
      auto obj = [&](double z) { return tau * std::abs(z) + 0.5 * (z - v) * (z - v); };
      double best = 1e300;
      for (int i = -80000; i <= 80000; ++i) best = std::min(best, obj(i * 1e-4));
      EXPECT_LE(obj(s), best + 1e-12);
    }
}

TEST(ProjectNonneg, Properties) {
  EXPECT_EQ(project_nonneg(-Signal::Ones(5)), Signal::Zero(5));
  const Signal p = random_signal(20, 1).cwiseAbs();
  EXPECT_EQ(project_nonneg(p), p);
  const Signal r = random_signal(20, 2);
  EXPECT_EQ(project_nonneg(project_nonneg(r)), project_nonneg(r));
}

TEST(RegularizerSpec, Validation) {
  RegularizerSpec s;
  s.lambda = -1;
  EXPECT_THROW(s.validate(), ConfigError);
  s = RegularizerSpec{};
  s.levels = 0;
  EXPECT_THROW(s.validate(), ConfigError);
  s = RegularizerSpec{};
  s.kind = RegularizerKind::wavelet;
  s.order = 1.5;
  EXPECT_THROW(s.validate(), ConfigError);
  s.order = 4;
  EXPECT_THROW(s.validate(), ConfigError);
  s.order = 3;
  EXPECT_NO_THROW(s.validate());
  s.levels = 3;
  EXPECT_EQ(s.label(), "Daub3(3)");
  s.kind = RegularizerKind::mhotv;
  s.order = 1.5;
  EXPECT_EQ(s.label(), "MHOTV1.5(3)");
  s.levels = 1;
  s.order = 2;
  EXPECT_EQ(s.label(), "HOTV2");
}

TEST(Admm, DimensionMismatch) {
  RegularizerSpec s;
  EXPECT_THROW(admm_l1(IdentityOperator(8), Signal::Zero(7), s, SolverOptions{}), DimensionMismatch);
  EXPECT_THROW(admm_l1(IdentityOperator(8), Signal::Zero(8), s, SolverOptions{}, Shape::line(9)),
               DimensionMismatch);
  SolverOptions bad;
  bad.rho = 0.0;
  EXPECT_THROW(admm_l1(IdentityOperator(8), Signal::Zero(8), s, bad), ConfigError);
}

TEST(Admm, ZeroLambdaIdentityReturnsData) {
  const Signal b = random_signal(32, 1);
  RegularizerSpec s;
  s.order = 2;
  s.levels = 2;
  const auto [f, rep] = admm_l1(IdentityOperator(32), b, s, tight());
  EXPECT_LT((f - b).norm() / b.norm(), 1e-10);
  EXPECT_EQ(rep.objective.size(), static_cast<std::size_t>(rep.iterations));
  EXPECT_EQ(rep.primal_residual.size(), static_cast<std::size_t>(rep.iterations));
}

TEST(Admm, ZeroLambdaMatchesCgls) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto a = gaussian_sensing(40, 24, seed);
    const Signal b = random_signal(40, seed + 10);
    RegularizerSpec s;
    s.order = 1;
    s.levels = 3;
    const auto [f, rep] = admm_l1(a, b, s, tight());
    const auto [g, crep] = cgls(a, b, 500, 1e-14);
    EXPECT_LT((f - g).norm() / g.norm(), 1e-6) << seed;
  }
}

TEST(Admm, MatchesConvexOracle) {
  for (const auto& p : load_oracle()) {
    if (p.constrained) continue;
    const Regularizer reg = make_regularizer(p.spec, Shape::line(p.a.cols()));
    const auto [f, rep] = admm_l1(p.a, p.b, reg, tight());
    const double obj = objective(p.a, p.b, reg, f);
    EXPECT_LT(std::abs(obj - p.objective) / p.objective, 1e-6)
        << p.name << " admm " << obj << " oracle " << p.objective << " iters " << rep.iterations;
    EXPECT_NEAR(rep.objective.back(), obj, 1e-9 * obj);
  }
}

TEST(Admm, ConvergedMeansBelowTolerance) {
  const auto a = random_sensing(30, 60, 0.3, 4);
  const Signal b = random_signal(30, 5);
  RegularizerSpec s;
  s.order = 2;
  s.levels = 2;
  s.lambda = 0.3;
  SolverOptions o;
  o.max_iter = 5000;
  o.primal_tol = 1e-7;
  o.dual_tol = 1e-7;
  const auto [f, rep] = admm_l1(a, b, s, o);
  ASSERT_TRUE(rep.converged);
  EXPECT_LT(rep.primal_residual.back(), o.primal_tol);
  EXPECT_LT(rep.dual_residual.back(), o.dual_tol);
}

TEST(Admm, BackendInvariance) {
  const auto a = random_sensing(40, 64, 0.2, 9);
  const Signal b = random_signal(40, 3);
  RegularizerSpec s;
  s.order = 3;
  s.levels = 3;
  s.lambda = 0.05;
  s.backend = Backend::fourier;
  const auto [f1, r1] = admm_l1(a, b, s, tight());
  s.backend = Backend::decomposition;
  const auto [f2, r2] = admm_l1(a, b, s, tight());
  EXPECT_LT((f1 - f2).norm() / f2.norm(), 1e-6);
}

TEST(Admm, CgPathMatchesDensePath) {
  const auto a = random_sensing(40, 64, 0.2, 11);
  const Signal b = random_signal(40, 4);
  RegularizerSpec s;
  s.order = 2;
  s.levels = 2;
  s.lambda = 0.1;
  SolverOptions dense = tight();
  SolverOptions iterative = tight();
  iterative.dense_limit = 0;
  iterative.cg_iter = 200;
  iterative.cg_tol = 1e-13;
  const auto [f1, r1] = admm_l1(a, b, s, dense);
  const auto [f2, r2] = admm_l1(a, b, s, iterative);
  EXPECT_GT(r1.factorizations, 0u);
  EXPECT_EQ(r2.factorizations, 0u);
  EXPECT_GT(r2.cg_iterations, 0u);
  EXPECT_LT((f1 - f2).norm() / f1.norm(), 1e-6);
}

TEST(Admm, NonnegProjection) {
  const auto a = random_sensing(40, 64, 0.2, 12);
  const Signal b = random_signal(40, 4);
  RegularizerSpec s;
  s.lambda = 0.1;
  SolverOptions o;
  o.nonneg = true;
  const auto [f, rep] = admm_l1(a, b, s, o);
  EXPECT_GE(f.minCoeff(), 0.0);
}

TEST(Admm, Deterministic) {
  const auto a = random_sensing(30, 48, 0.2, 1);
  const Signal b = random_signal(30, 2);
  RegularizerSpec s;
  s.lambda = 0.2;
  s.order = 2;
  const auto [f1, r1] = admm_l1(a, b, s, SolverOptions{});
  const auto [f2, r2] = admm_l1(a, b, s, SolverOptions{});
  EXPECT_EQ(f1, f2);
}

TEST(Admm, HaarMatchesFirstOrderWithMatchedWeights) {
  const int n = 64;
  const auto a = random_sensing(48, n, 0.3, 3);
  Signal truth = Signal::Zero(n);
  truth.segment(10, 20).setConstant(1.0);
  truth.segment(40, 10).setConstant(-0.5);
  const Signal b = a.apply(truth) + 0.01 * random_signal(48, 4);
  RegularizerSpec tv;
  tv.order = 1;
  tv.levels = 3;
  tv.lambda = 0.05;
  const auto w = level_weights(1, 2);
  RegularizerSpec haar = tv;
  haar.kind = RegularizerKind::wavelet;
  haar.weights = std::vector<double>(3);
  for (int j = 0; j < 3; ++j) (*haar.weights)[j] = w[j] * std::pow(2.0, (j + 1) / 2.0);
  const auto [f1, r1] = admm_l1(a, b, tv, tight());
  const auto [f2, r2] = admm_l1(a, b, haar, tight());
  EXPECT_LT((f1 - f2).norm() / f1.norm(), 1e-3);
}

TEST(Constrained, ZeroDataGivesZero) {
  RegularizerSpec s;
  const auto [f, rep] = constrained_l1(random_sensing(8, 16, 0.5, 1), Signal::Zero(8), s, SolverOptions{});
  EXPECT_EQ(f.norm(), 0.0);
}

TEST(Constrained, MatchesConvexOracle) {
  for (const auto& p : load_oracle()) {
    if (!p.constrained) continue;
    const Regularizer reg = make_regularizer(p.spec, Shape::line(p.a.cols()));
    SolverOptions o;
    o.max_outer = 20000;
    o.constraint_tol = 1e-10;
    o.primal_tol = 1e-9;
    const auto [f, rep] = constrained_l1(p.a, p.b, reg, o);
    RegularizerSpec no_data = p.spec;
    no_data.lambda = 1.0;
    const Regularizer r1 = make_regularizer(no_data, Shape::line(p.a.cols()));
    const double obj = objective(p.a, p.a.apply(f), r1, f);
    EXPECT_LT(std::abs(obj - p.objective) / p.objective, 1e-4) << p.name << " " << obj << " vs " << p.objective;
    EXPECT_LT(rep.relative_data_error, 1e-6) << p.name;
  }
}

Signal piecewise_constant_64() {
  Signal truth = Signal::Zero(64);
  truth.segment(5, 20).setConstant(0.8);
  truth.segment(33, 12).setConstant(-0.4);
  truth.segment(50, 9).setConstant(0.3);
  return truth;
}

TEST(Constrained, RecoversPiecewiseConstant) {
  const Signal truth = piecewise_constant_64();
  const auto a = random_sensing(40, 64, 0.1, 21);
  RegularizerSpec s;
  const auto [f, rep] = constrained_l1(a, a.apply(truth), s, SolverOptions{});
  EXPECT_TRUE(rep.converged);
  EXPECT_LT((f - truth).norm() / truth.norm(), 1e-2);
  EXPECT_LT(rep.relative_data_error, 1e-7);
}

TEST(Constrained, ViolationDecreasesWithAccurateInnerSolves) {
  const Signal truth = piecewise_constant_64();
  const auto a = random_sensing(40, 64, 0.1, 21);
  RegularizerSpec s;
  s.order = 1;
  s.levels = 1;
  SolverOptions o;
  o.inner_iter = 500;
  o.max_outer = 200;
  const auto [f, rep] = constrained_l1(a, a.apply(truth), s, o);
  EXPECT_LT((f - truth).norm() / truth.norm(), 1e-2);
  ASSERT_FALSE(rep.constraint_violation.empty());
  for (std::size_t i = 1; i < rep.constraint_violation.size(); ++i)
    EXPECT_LE(rep.constraint_violation[i], rep.constraint_violation[i - 1] * (1 + 1e-9) + 1e-15) << i;
}
