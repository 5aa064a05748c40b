#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mhotv/cgls.hpp"
#include "mhotv/operators.hpp"
#include "mhotv/radon.hpp"
#include "test_helpers.hpp"

using namespace mhotv;
using testing_util::random_signal;

namespace {

Image disk(Eigen::Index n, double radius, double value = 1.0) {
  Image img(n, n);
  const double h = 0.5 * static_cast<double>(n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) {
      const double x = c + 0.5 - h, y = h - r - 0.5;
      if (x * x + y * y <= radius * radius) img(r, c) = value;
    }
  return img;
}

// Length of the line x cos + y sin = t inside [-h, h]^2, by parametric clipping.
double chord(double t, double theta, double h) {
  const double c = std::cos(theta), s = std::sin(theta);
  double lo = -1e300, hi = 1e300;
  const double p[2] = {t * c, t * s}, d[2] = {-s, c};
  for (int a = 0; a < 2; ++a) {
    if (std::abs(d[a]) < 1e-12) {
      if (p[a] <= -h || p[a] >= h) return 0.0;
      continue;
    }
    const double u = (-h - p[a]) / d[a], v = (h - p[a]) / d[a];
    lo = std::max(lo, std::min(u, v));
    hi = std::min(hi, std::max(u, v));
  }
  return std::max(0.0, hi - lo);
}

}  // namespace

TEST(RandomSensing, NonzeroCountConcentrates) {
  const auto a = random_sensing(512, 1024, 0.1, 42);
  const double mean = 512.0 * 1024.0 * 0.1;
  const double sd = std::sqrt(512.0 * 1024.0 * 0.1 * 0.9);
  EXPECT_LT(std::abs(static_cast<double>(a.nonzeros()) - mean), 3.0 * sd);
  const Eigen::MatrixXd dense(a.matrix());
  EXPECT_GE(dense.minCoeff(), 0.0);
  EXPECT_LE(dense.maxCoeff(), 1.0);
}

TEST(RandomSensing, Deterministic) {
  const auto a = random_sensing(50, 80, 0.2, 7), b = random_sensing(50, 80, 0.2, 7);
  EXPECT_TRUE(Eigen::MatrixXd(a.matrix()) == Eigen::MatrixXd(b.matrix()));
  const auto c = random_sensing(50, 80, 0.2, 8);
  EXPECT_FALSE(Eigen::MatrixXd(a.matrix()) == Eigen::MatrixXd(c.matrix()));
  EXPECT_THROW(random_sensing(5, 5, 0.0, 1), ConfigError);
}

TEST(Operators, DimensionChecks) {
  const auto a = random_sensing(10, 20, 0.5, 1);
  EXPECT_THROW(a.apply(Signal::Zero(10)), DimensionMismatch);
  EXPECT_THROW(a.adjoint(Signal::Zero(20)), DimensionMismatch);
}

TEST(AdjointCheck, ShippedOperators) {
  EXPECT_EQ(adjoint_check(IdentityOperator(30)), 0.0);
  EXPECT_LT(adjoint_check(random_sensing(60, 100, 0.1, 3)), 1e-10);
  EXPECT_LT(adjoint_check(gaussian_sensing(30, 40, 3)), 1e-10);
  EXPECT_LT(adjoint_check(radon_operator(SinogramGeometry::parallel(32, 12))), 1e-10);
}

TEST(Radon, SingleCenteredPixel) {
  SinogramGeometry g;
  g.n_pix = 1;
  g.n_det = 1;
  g.angles = {0.0, std::numbers::pi / 2};
  const auto a = radon_operator(g);
  const Eigen::MatrixXd m(a.matrix());
  EXPECT_NEAR(m(0, 0), 1.0, 1e-14);
  EXPECT_NEAR(m(1, 0), 1.0, 1e-14);
}

TEST(Radon, GeometryValidation) {
  SinogramGeometry g = SinogramGeometry::parallel(16, 4);
  g.angles = {0.5, 0.2};
  EXPECT_THROW(radon_operator(g), GeometryMismatch);
  g.angles = {0.0, std::numbers::pi};
  EXPECT_THROW(g.validate(), GeometryMismatch);
  g = SinogramGeometry::parallel(16, 4);
  g.n_det = 10;
  EXPECT_THROW(g.validate(), GeometryMismatch);
  EXPECT_EQ(SinogramGeometry::parallel(128, 29).n_det, 182);
}

TEST(Radon, DiskProjectionsAreSymmetric) {
  const Eigen::Index n = 48;
  const auto g = SinogramGeometry::parallel(n, 17);
  const Signal b = radon_operator(g).apply(disk(n, 15.0).pixels);
  const Sinogram s = Sinogram::from_vector(b, g);
  for (Eigen::Index a = 0; a < g.n_angles(); ++a)
    for (Eigen::Index i = 0; i < g.n_det; ++i)
      EXPECT_NEAR(s.values(i, a), s.values(g.n_det - 1 - i, a), 1e-8);
}

TEST(Radon, MassPreservationAxisAligned) {
  const Eigen::Index n = 32;
  const Signal f = random_signal(n * n, 1).cwiseAbs();
  SinogramGeometry g;
  g.n_pix = n;
  g.n_det = 46;
  g.angles = {0.0, std::numbers::pi / 2};
  const Sinogram s = Sinogram::from_vector(radon_operator(g).apply(f), g);
  for (Eigen::Index a = 0; a < 2; ++a)
    EXPECT_NEAR(s.values.col(a).sum() / f.sum(), 1.0, 1e-12);
}

TEST(Radon, MassPreservationObliqueWithinSamplingBound) {
  // Unit-spaced bins sample the projection of each pixel (a trapezoid of area 1);
  // away from the axes the sample sum is exact only up to aliasing.
  const Eigen::Index n = 32;
  const Signal f = random_signal(n * n, 1).cwiseAbs();
  const auto g = SinogramGeometry::parallel(n, 36);
  const Sinogram s = Sinogram::from_vector(radon_operator(g).apply(f), g);
  for (Eigen::Index a = 0; a < g.n_angles(); ++a)
    EXPECT_NEAR(s.values.col(a).sum() / f.sum(), 1.0, 2e-2) << a;
}

TEST(Radon, RowSumsAreChordLengths) {
  const Eigen::Index n = 20;
  const auto g = SinogramGeometry::parallel(n, 13);
  const Signal rows = radon_operator(g).apply(Signal::Ones(n * n));
  for (Eigen::Index a = 0; a < g.n_angles(); ++a)
    for (Eigen::Index i = 0; i < g.n_det; ++i)
      EXPECT_NEAR(rows[a * g.n_det + i], chord(g.bin_center(i), g.angles[a], 0.5 * n), 1e-10);
}

TEST(Fbp, ZeroSinogram) {
  const auto g = SinogramGeometry::parallel(16, 10);
  Sinogram s{Eigen::MatrixXd::Zero(g.n_det, g.n_angles())};
  EXPECT_EQ(filtered_backprojection(s, g).pixels.norm(), 0.0);
}

TEST(Fbp, GeometryMismatch) {
  const auto g = SinogramGeometry::parallel(16, 10);
  Sinogram s{Eigen::MatrixXd::Zero(g.n_det + 1, g.n_angles())};
  EXPECT_THROW(filtered_backprojection(s, g), GeometryMismatch);
}

TEST(Fbp, DenseAnglesReconstructDisk) {
  const Eigen::Index n = 128;
  const Image truth = disk(n, 40.0);
  const auto g = SinogramGeometry::parallel(n, 180);
  const Sinogram s = Sinogram::from_vector(radon_operator(g).apply(truth.pixels), g);
  const Image rec = filtered_backprojection(s, g);
  const double err = (rec.pixels - truth.pixels).norm() / truth.pixels.norm();
  EXPECT_LT(err, 0.1);
  const Image hann = filtered_backprojection(s, g, RampWindow::hann);
  EXPECT_LT((hann.pixels - truth.pixels).norm() / truth.pixels.norm(), 0.2);
}

TEST(Fbp, FewNoisyAnglesAreWorse) {
  const Eigen::Index n = 128;
  const Image truth = disk(n, 40.0);
  const auto dense = SinogramGeometry::parallel(n, 180);
  const auto sparse = SinogramGeometry::parallel(n, 29);
  const Image rd = filtered_backprojection(
      Sinogram::from_vector(radon_operator(dense).apply(truth.pixels), dense), dense);
  Signal b = radon_operator(sparse).apply(truth.pixels);
  b += 0.05 * b.norm() / std::sqrt(static_cast<double>(b.size())) * random_signal(b.size(), 3);
  const Image rs = filtered_backprojection(Sinogram::from_vector(b, sparse), sparse);
  EXPECT_GT((rs.pixels - truth.pixels).norm(), (rd.pixels - truth.pixels).norm());
}

TEST(Cgls, IdentityOneIteration) {
  const Signal b = random_signal(25, 1);
  const auto [x, rep] = cgls(IdentityOperator(25), b, 50, 1e-12);
  EXPECT_LT((x - b).norm(), 1e-12);
  EXPECT_EQ(rep.iterations, 1);
  EXPECT_TRUE(rep.converged);
}

TEST(Cgls, SmallDenseSystem) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(8, 8) * 4.0;
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) m(i, j) += 0.3 * std::sin(1.0 + i * 8 + j);
  const Signal b = random_signal(8, 2);
  const auto [x, rep] = cgls(DenseOperator(m, "m"), b, 100, 1e-14);
  EXPECT_LT((x - m.fullPivLu().solve(b)).norm(), 1e-8);
}

TEST(Cgls, OverdeterminedLeastSquares) {
  const auto a = gaussian_sensing(40, 12, 5);
  const Signal b = random_signal(40, 6);
  const auto [x, rep] = cgls(a, b, 200, 1e-14);
  const Signal ref = a.matrix().colPivHouseholderQr().solve(b);
  EXPECT_NEAR((a.apply(x) - b).norm(), (a.apply(ref) - b).norm(), 1e-6);
  EXPECT_EQ(rep.objective.size(), static_cast<std::size_t>(rep.iterations));
  for (std::size_t i = 1; i < rep.objective.size(); ++i)
    EXPECT_LE(rep.objective[i], rep.objective[i - 1] * (1 + 1e-12));
}

TEST(Cgls, ResidualNonIncreasingOnRadon) {
  const auto g = SinogramGeometry::parallel(24, 8);
  const auto a = radon_operator(g);
  const Signal b = a.apply(disk(24, 8.0).pixels) + 0.1 * random_signal(g.measurements(), 1);
  const auto [x, rep] = cgls(a, b, 40, 1e-12);
  for (std::size_t i = 1; i < rep.objective.size(); ++i)
    EXPECT_LE(rep.objective[i], rep.objective[i - 1] * (1 + 1e-12));
}
