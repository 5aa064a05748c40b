#pragma once

// Closed-form DFT of phi_{k,j}:
//
//   H_xi = (e^{i 2 pi xi j / N} - 1)^{k+1} / (e^{i 2 pi xi / N} - 1),  xi != 0
//   H_0  = 0
//
// The formula is also evaluated for real k > 0 (fractional orders). The
// complex power then uses the principal branch, and the result is
// conjugate-symmetrized so real signals keep real coefficients.

#include <cmath>
#include <numbers>
#include <string>

#include "mhotv/errors.hpp"
#include "mhotv/spectral.hpp"

namespace mhotv {

struct FilterSpectrum {
  double order = 0.0;
  int scale = 0;
  Spectrum values;

  Eigen::Index size() const { return values.size(); }
};

inline bool is_integer_order(double order) { return order == std::round(order); }

namespace detail {

// e^{i 2 pi r / n} - 1 with r reduced mod n first, so exact multiples of n give
// an exact zero.
inline Complex unit_root_minus_one(std::int64_t r, std::int64_t n) {
  r %= n;
  if (r < 0) r += n;
  if (r == 0) return {0.0, 0.0};
  const double half = std::numbers::pi * static_cast<double>(r) / static_cast<double>(n);
  const double s = std::sin(half);
  return {-2.0 * s * s, std::sin(2.0 * half)};
}

inline Complex raise(Complex z, double exponent) {
  if (z == Complex(0.0, 0.0)) return {0.0, 0.0};
  if (is_integer_order(exponent) && exponent >= 0.0 && exponent < 64.0) {
    Complex out(1.0, 0.0);
    for (int i = 0; i < static_cast<int>(exponent); ++i) out *= z;
    return out;
  }
  return std::exp(exponent * std::log(z));  // principal branch
}

}  // namespace detail

/// DFT of phi_{k,j} for real order k > 0.
inline FilterSpectrum filter_spectrum(double order, int scale, int n) {
  if (!(order > 0.0) || !std::isfinite(order))
    detail::fail<InvalidOrder>("filter_spectrum: order must be positive, got " +
                               std::to_string(order));
  if (scale < 1) detail::fail<InvalidOrder>("filter_spectrum: scale must be >= 1");
  if (n < 2) detail::fail<LengthMismatch>("filter_spectrum: N must be >= 2");

  FilterSpectrum h{order, scale, Spectrum::Zero(n)};
  for (int xi = 1; xi < n; ++xi) {
    const Complex num = detail::raise(
        detail::unit_root_minus_one(static_cast<std::int64_t>(xi) * scale, n), order + 1.0);
    const Complex den = detail::unit_root_minus_one(xi, n);
    h.values[xi] = num / den;
  }
  if (!is_integer_order(order)) {
    Spectrum sym(n);
    sym[0] = 0.0;
    for (int xi = 1; xi < n; ++xi) sym[xi] = 0.5 * (h.values[xi] + std::conj(h.values[n - xi]));
    h.values = sym;
  }
  return h;
}

/// Real-space stencil for any positive order: the inverse DFT of the filter.
/// For integer orders this reproduces build_stencil up to rounding; for
/// fractional orders it shows the nonlocal tail.
inline Signal stencil_from_filter(const FilterSpectrum& h) { return idft(h.values); }

}  // namespace mhotv
