#pragma once

// Multiscale higher-order finite-difference stencils and the sparse binomial
// P-chain factors used to grow them dyadically.
//
// phi_{k,j} is stored as a length-N convolution vector; convolving with it
// gives the periodic k-th order difference of scale j, which in shift
// notation (S f)_m = f_{m+1} reads
//
//   Phi_{k,j} = (S^j - I)^k (I + S + ... + S^{j-1}).
//
// Hence Phi_{k,2s} = (I + S^s)^{k+1} Phi_{k,s}: one P-chain pass per doubling.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mhotv/errors.hpp"
#include "mhotv/flops.hpp"
#include "mhotv/spectral.hpp"

namespace mhotv {

/// Exact binomial coefficient for the small orders used here.
inline std::int64_t binomial(int n, int r) {
  if (r < 0 || r > n) return 0;
  if (r > n - r) r = n - r;
  std::int64_t out = 1;
  for (int i = 1; i <= r; ++i) out = out * (n - r + i) / i;
  return out;
}

struct Stencil {
  int order = 0;
  int scale = 0;
  Signal values;

  Eigen::Index size() const { return values.size(); }

  Eigen::Index nonzeros() const {
    Eigen::Index count = 0;
    for (Eigen::Index m = 0; m < values.size(); ++m) count += values[m] != 0.0;
    return count;
  }
};

namespace detail {

inline void require_fits(std::int64_t order, std::int64_t scale, std::int64_t n,
                         const char* what) {
  if (scale * (order + 1) > n) {
    fail<StencilTooLong>(std::string(what) + ": support " + std::to_string(scale * (order + 1)) +
                         " exceeds signal length " + std::to_string(n));
  }
}

inline Eigen::Index wrap(Eigen::Index i, Eigen::Index n) {
  i %= n;
  return i < 0 ? i + n : i;
}

}  // namespace detail

/// phi_{k,j} of length n. Throws StencilTooLong when j(k+1) > n.
inline Stencil build_stencil(int order, int scale, int n) {
  if (order < 1) detail::fail<InvalidOrder>("build_stencil: order must be >= 1");
  if (scale < 1) detail::fail<InvalidOrder>("build_stencil: scale must be >= 1");
  detail::require_fits(order, scale, n, "build_stencil");

  Stencil s{order, scale, Signal::Zero(n)};
  s.values[0] = (order % 2 == 0) ? 1.0 : -1.0;
  for (int m = n - scale * (order + 1) + 1; m < n; ++m) {
    const int q = (n - m) / scale;
    const double sign = ((order + q) % 2 == 0) ? 1.0 : -1.0;
    s.values[m] = sign * static_cast<double>(binomial(order, q));
  }
  return s;
}

/// f * phi, evaluated over the stencil's nonzero taps only.
inline Signal apply_direct(const Signal& f, const Stencil& s, FlopCounter* counter = nullptr) {
  if (f.size() != s.size()) {
    detail::fail<LengthMismatch>("apply_direct: signal length " + std::to_string(f.size()) +
                                 " vs stencil length " + std::to_string(s.size()));
  }
  const Eigen::Index n = f.size();
  std::vector<std::pair<Eigen::Index, double>> taps;
  for (Eigen::Index q = 0; q < n; ++q)
    if (s.values[q] != 0.0) taps.emplace_back(q, s.values[q]);

  Signal out = Signal::Zero(n);
  std::uint64_t weighted = 0;
  for (const auto& [q, w] : taps) {
    weighted += (w != 1.0 && w != -1.0);
    for (Eigen::Index m = 0; m < n; ++m) out[m] += w * f[detail::wrap(m - q, n)];
  }
  if (!taps.empty()) {
    detail::count_adds(counter, static_cast<std::uint64_t>(n) * (taps.size() - 1));
    detail::count_muls(counter, static_cast<std::uint64_t>(n) * weighted);
  }
  return out;
}

/// Index layout for running 1-D kernels along one axis of a flattened
/// array: element (o, i, r) lives at (o * length + i) * inner + r.
struct AxisLayout {
  Eigen::Index outer = 1;
  Eigen::Index length = 0;
  Eigen::Index inner = 1;

  static AxisLayout line(Eigen::Index n) { return {1, n, 1}; }
  /// Along each row of a row-major rows x cols image.
  static AxisLayout rows_of(Eigen::Index rows, Eigen::Index cols) { return {rows, cols, 1}; }
  /// Along each column of a row-major rows x cols image.
  static AxisLayout cols_of(Eigen::Index rows, Eigen::Index cols) { return {1, rows, cols}; }

  Eigen::Index total() const { return outer * length * inner; }
};

namespace detail {

// y_i = a * x_i + x_{i+shift}, periodic along the axis. With a = -1 this is a
// forward difference; with a = +1 it is one P factor (I + S^shift).
// Negative shifts give the transposed kernels.
inline Signal axis_shift_combine(const Signal& x, const AxisLayout& lay, Eigen::Index shift,
                                 double a, FlopCounter* counter) {
  const Eigen::Index len = lay.length;
  const Eigen::Index s = wrap(shift, len);
  Signal y(x.size());
  for (Eigen::Index o = 0; o < lay.outer; ++o) {
    const Eigen::Index base = o * len * lay.inner;
    for (Eigen::Index i = 0; i < len; ++i) {
      Eigen::Index ip = i + s;
      if (ip >= len) ip -= len;
      const double* xi = x.data() + base + i * lay.inner;
      const double* xs = x.data() + base + ip * lay.inner;
      double* yi = y.data() + base + i * lay.inner;
      if (a == 1.0) {
        for (Eigen::Index r = 0; r < lay.inner; ++r) yi[r] = xi[r] + xs[r];
      } else {
        for (Eigen::Index r = 0; r < lay.inner; ++r) yi[r] = xs[r] - xi[r];
      }
    }
  }
  count_adds(counter, static_cast<std::uint64_t>(lay.total()));
  return y;
}

}  // namespace detail

/// k successive periodic first differences along the axis: Phi_k f.
inline Signal forward_differences(Signal x, const AxisLayout& lay, int order,
                                  FlopCounter* counter = nullptr) {
  for (int i = 0; i < order; ++i) x = detail::axis_shift_combine(x, lay, 1, -1.0, counter);
  return x;
}

/// Transpose of forward_differences.
inline Signal forward_differences_adjoint(Signal x, const AxisLayout& lay, int order,
                                          FlopCounter* counter = nullptr) {
  for (int i = 0; i < order; ++i) x = detail::axis_shift_combine(x, lay, -1, -1.0, counter);
  return x;
}

/// P^{k+1} along the axis with the given shift: k+1 passes of (I + S^shift).
inline Signal pchain_axis(Signal x, const AxisLayout& lay, Eigen::Index shift, int order,
                          FlopCounter* counter = nullptr) {
  for (int i = 0; i <= order; ++i) x = detail::axis_shift_combine(x, lay, shift, 1.0, counter);
  return x;
}

inline Signal pchain_axis_adjoint(Signal x, const AxisLayout& lay, Eigen::Index shift, int order,
                                  FlopCounter* counter = nullptr) {
  for (int i = 0; i <= order; ++i) x = detail::axis_shift_combine(x, lay, -shift, 1.0, counter);
  return x;
}

/// Implicit P_j^{k+1}: binomial weights C(k+1, l) at circular offsets step*l.
struct PChain {
  int step = 1;
  int order = 0;

  /// (offset, weight) pairs of one row, offset measured from the diagonal.
  std::vector<std::pair<Eigen::Index, std::int64_t>> taps() const {
    std::vector<std::pair<Eigen::Index, std::int64_t>> out;
    for (int l = 0; l <= order + 1; ++l)
      out.emplace_back(static_cast<Eigen::Index>(step) * l, binomial(order + 1, l));
    return out;
  }

  Signal apply(const Signal& f, FlopCounter* counter = nullptr) const {
    detail::require_fits(order, step, f.size(), "apply_pchain");
    return pchain_axis(f, AxisLayout::line(f.size()), step, order, counter);
  }

  Signal apply_adjoint(const Signal& f, FlopCounter* counter = nullptr) const {
    detail::require_fits(order, step, f.size(), "apply_pchain");
    return pchain_axis_adjoint(f, AxisLayout::line(f.size()), step, order, counter);
  }
};

/// P_j^{k+1} f computed as k+1 shifted additions; the matrix is never formed.
inline Signal apply_pchain(const Signal& f, int step, int order, FlopCounter* counter = nullptr) {
  if (order < 0) detail::fail<InvalidOrder>("apply_pchain: order must be >= 0");
  if (step < 1) detail::fail<InvalidOrder>("apply_pchain: step must be >= 1");
  return PChain{step, order}.apply(f, counter);
}

}  // namespace mhotv
