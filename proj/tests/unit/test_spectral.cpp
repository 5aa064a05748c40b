#include <gtest/gtest.h>

#include <complex>

#include "mhotv/spectral.hpp"
#include "test_helpers.hpp"

using namespace mhotv;
using testing_util::random_signal;

TEST(Dft, ImpulseHasFlatSpectrum) {
  Signal d = Signal::Zero(4);
  d[0] = 1.0;
  const Spectrum s = dft(d);
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_NEAR(std::abs(s[i] - Complex(1.0, 0.0)), 0.0, 1e-15);
}

TEST(Dft, ConstantIsDcOnly) {
  const Signal c = Signal::Constant(8, 2.5);
  const Spectrum s = dft(c);
  EXPECT_NEAR(s[0].real(), 20.0, 1e-12);
  for (Eigen::Index i = 1; i < 8; ++i) EXPECT_LT(std::abs(s[i]), 1e-12);
}

TEST(Dft, MatchesDirectSummation) {
  for (int n : {1, 2, 3, 16, 17, 31, 100}) {
    const Signal f = random_signal(n, 3 + n);
    EXPECT_LT((dft(f) - dft_direct(f)).cwiseAbs().maxCoeff(), 1e-10) << n;
  }
}

TEST(Dft, DeterministicForIdenticalInput) {
  const Signal f = random_signal(97, 5);
  const Spectrum a = dft(f), b = dft(f);
  for (Eigen::Index i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(Idft, RoundTrip) {
  const Signal f = random_signal(64, 1);
  EXPECT_LT((idft(dft(f)) - f).norm() / f.norm(), 1e-12);
  const Signal g = random_signal(45, 2);
  EXPECT_LT((idft(dft(g)) - g).norm() / g.norm(), 1e-12);
}

TEST(Idft, AllOnesGivesImpulse) {
  const Signal d = idft(Spectrum::Constant(4, Complex(1.0, 0.0)));
  EXPECT_NEAR(d[0], 1.0, 1e-15);
  for (int i = 1; i < 4; ++i) EXPECT_NEAR(d[i], 0.0, 1e-15);
}

TEST(Idft, RejectsAsymmetricSpectrum) {
  Spectrum s = Spectrum::Zero(8);
  s[1] = Complex(1.0, 0.0);
  EXPECT_THROW(idft(s), NonSymmetricSpectrum);
  EXPECT_NO_THROW(idft_complex(s));
}

TEST(Dft, Parseval) {
  const Signal f = random_signal(77, 9);
  const double lhs = dft(f).squaredNorm();
  EXPECT_NEAR(lhs / (77.0 * f.squaredNorm()), 1.0, 1e-10);
}

TEST(Dft, Linearity) {
  const Signal f = random_signal(40, 1), g = random_signal(40, 2);
  const Spectrum lhs = dft(Signal(2.0 * f - 3.5 * g));
  const Spectrum rhs = 2.0 * dft(f) - 3.5 * dft(g);
  EXPECT_LT((lhs - rhs).norm() / rhs.norm(), 1e-12);
}

TEST(Convolve, IdentityElement) {
  const Signal f = random_signal(10, 4);
  Signal d = Signal::Zero(10);
  d[0] = 1.0;
  EXPECT_LT((circular_convolve(f, d) - f).norm(), 1e-12);
  EXPECT_LT((circular_convolve_direct(f, d) - f).norm(), 0.0 + 1e-15);
}

TEST(Convolve, HandExample) {
  Signal f(4), g(4);
  f << 1, 2, 3, 4;
  g << 1, -1, 0, 0;
  Signal expect(4);
  expect << -3, 1, 1, 1;
  // (f*g)_m = f_m - f_{m-1}: m=0 -> 1-4
  EXPECT_LT((circular_convolve_direct(f, g) - expect).norm(), 1e-14);
  EXPECT_LT((circular_convolve(f, g) - expect).norm(), 1e-12);
}

TEST(Convolve, FastMatchesDirect) {
  const Signal f = random_signal(128, 1), g = random_signal(128, 2);
  const Signal a = circular_convolve(f, g), b = circular_convolve_direct(f, g);
  EXPECT_LT((a - b).norm() / b.norm(), 1e-10);
}

TEST(Convolve, LengthMismatch) {
  EXPECT_THROW(circular_convolve(Signal::Zero(3), Signal::Zero(4)), LengthMismatch);
  EXPECT_THROW(circular_convolve_direct(Signal::Zero(3), Signal::Zero(4)), LengthMismatch);
}

TEST(Convolve, ConvolutionTheorem) {
  const Signal f = random_signal(50, 1), g = random_signal(50, 2);
  const Spectrum lhs = dft(circular_convolve_direct(f, g));
  const Spectrum rhs = dft(f).cwiseProduct(dft(g));
  EXPECT_LT((lhs - rhs).norm() / rhs.norm(), 1e-10);
}

TEST(Convolve, CommutativeAndAssociative) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Signal f = random_signal(33, s), g = random_signal(33, s + 10), h = random_signal(33, s + 20);
    const Signal fg = circular_convolve(f, g);
    EXPECT_LT((fg - circular_convolve(g, f)).norm() / fg.norm(), 1e-10);
    const Signal left = circular_convolve(fg, h);
    const Signal right = circular_convolve(f, circular_convolve(g, h));
    EXPECT_LT((left - right).norm() / left.norm(), 1e-10);
  }
}
