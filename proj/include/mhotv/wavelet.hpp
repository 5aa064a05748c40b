#pragma once

// Translation-invariant (cycle-spinning) Daubechies frame.
//
// Undecimated a trous cascade with periodic wrap:
//   a_0 = f
//   d_j[t]     = sum_n g[n] a_j[t + 2^j n]
//   a_{j+1}[t] = sum_n h[n] a_j[t + 2^j n]
// so d_j[t] = <f, psi_j(. - t)> for every shift t. Only the detail planes d_j
// enter the regularizer; the final approximation is discarded.

#include <cmath>
#include <string>
#include <vector>

#include "mhotv/errors.hpp"
#include "mhotv/image.hpp"
#include "mhotv/spectral.hpp"
#include "mhotv/stencil.hpp"
#include "mhotv/transform.hpp"

namespace mhotv {

struct WaveletFilters {
  int vanishing_moments = 0;
  std::vector<double> h;  // scaling (low-pass)
  std::vector<double> g;  // wavelet (high-pass), g_n = (-1)^n h_{2k-1-n}
};

namespace detail {

inline void verify_wavelet(const WaveletFilters& w) {
  const double tol = 1e-8;
  const int len = static_cast<int>(w.h.size());
  double sum = 0.0;
  for (double v : w.h) sum += v;
  if (std::abs(sum - std::sqrt(2.0)) > tol)
    fail<Error>("daubechies filter: sum(h) != sqrt(2)");
  for (int m = 0; 2 * m < len; ++m) {
    double acc = 0.0;
    for (int n = 0; n + 2 * m < len; ++n) acc += w.h[n] * w.h[n + 2 * m];
    if (std::abs(acc - (m == 0 ? 1.0 : 0.0)) > tol)
      fail<Error>("daubechies filter: not orthonormal at shift " + std::to_string(2 * m));
  }
  for (int n = 0; n < len; ++n) {
    const double expect = ((n % 2) ? -1.0 : 1.0) * w.h[len - 1 - n];
    if (std::abs(w.g[n] - expect) > tol) fail<Error>("daubechies filter: QMF relation broken");
  }
  for (int p = 0; p < w.vanishing_moments; ++p) {
    double moment = 0.0;
    for (int n = 0; n < len; ++n) moment += w.g[n] * std::pow(static_cast<double>(n), p);
    if (std::abs(moment) > tol)
      fail<Error>("daubechies filter: moment " + std::to_string(p) + " does not vanish");
  }
}

}  // namespace detail

/// db1 (Haar), db2 and db3 from their closed forms; every invariant is
/// re-checked before the filters are returned.
inline WaveletFilters daubechies_filters(int k) {
  WaveletFilters w;
  w.vanishing_moments = k;
  const double r2 = std::sqrt(2.0);
  switch (k) {
    case 1:
      w.h = {1.0 / r2, 1.0 / r2};
      break;
    case 2: {
      const double r3 = std::sqrt(3.0);
      const double s = 4.0 * r2;
      w.h = {(1 + r3) / s, (3 + r3) / s, (3 - r3) / s, (1 - r3) / s};
      break;
    }
    case 3: {
      const double r10 = std::sqrt(10.0);
      const double q = std::sqrt(5.0 + 2.0 * r10);
      const double s = 16.0 * r2;
      w.h = {(1 + r10 + q) / s,          (5 + r10 + 3 * q) / s,
             (10 - 2 * r10 + 2 * q) / s, (10 - 2 * r10 - 2 * q) / s,
             (5 + r10 - 3 * q) / s,      (1 + r10 - q) / s};
      break;
    }
    default:
      detail::fail<UnsupportedOrder>("daubechies_filters: only 1, 2 or 3 vanishing moments, got " +
                                     std::to_string(k));
  }
  const int len = 2 * k;
  w.g.resize(len);
  for (int n = 0; n < len; ++n) w.g[n] = ((n % 2) ? -1.0 : 1.0) * w.h[len - 1 - n];
  detail::verify_wavelet(w);
  return w;
}

/// 2^{-(j+k-1)} / levels for j = 0..levels-1.
inline std::vector<double> wavelet_level_weights(int k, int levels) {
  if (levels < 1) detail::fail<ShapeMismatch>("wavelet_level_weights: levels must be >= 1");
  std::vector<double> w;
  for (int j = 0; j < levels; ++j)
    w.push_back(std::pow(2.0, -(static_cast<double>(j) + k - 1.0)) / levels);
  return w;
}

namespace detail {

// y[t] = sum_n taps[n] x[t + dilation * n] along the axis (correlation).
inline Signal axis_correlate(const Signal& x, const AxisLayout& lay, const std::vector<double>& taps,
                             Eigen::Index dilation) {
  Signal y = Signal::Zero(x.size());
  const Eigen::Index len = lay.length;
  for (std::size_t n = 0; n < taps.size(); ++n) {
    const Eigen::Index s = wrap(dilation * static_cast<Eigen::Index>(n), len);
    const double w = taps[n];
    for (Eigen::Index o = 0; o < lay.outer; ++o) {
      const Eigen::Index base = o * len * lay.inner;
      for (Eigen::Index i = 0; i < len; ++i) {
        Eigen::Index ip = i + s;
        if (ip >= len) ip -= len;
        const double* xs = x.data() + base + ip * lay.inner;
        double* yi = y.data() + base + i * lay.inner;
        for (Eigen::Index r = 0; r < lay.inner; ++r) yi[r] += w * xs[r];
      }
    }
  }
  return y;
}

// Transpose of axis_correlate: y[u] = sum_n taps[n] x[u - dilation * n].
inline Signal axis_convolve(const Signal& x, const AxisLayout& lay, const std::vector<double>& taps,
                            Eigen::Index dilation) {
  Signal y = Signal::Zero(x.size());
  const Eigen::Index len = lay.length;
  for (std::size_t n = 0; n < taps.size(); ++n) {
    const Eigen::Index s = wrap(-dilation * static_cast<Eigen::Index>(n), len);
    const double w = taps[n];
    for (Eigen::Index o = 0; o < lay.outer; ++o) {
      const Eigen::Index base = o * len * lay.inner;
      for (Eigen::Index i = 0; i < len; ++i) {
        Eigen::Index ip = i + s;
        if (ip >= len) ip -= len;
        const double* xs = x.data() + base + ip * lay.inner;
        double* yi = y.data() + base + i * lay.inner;
        for (Eigen::Index r = 0; r < lay.inner; ++r) yi[r] += w * xs[r];
      }
    }
  }
  return y;
}

}  // namespace detail

class WaveletFrameTransform final : public SparsifyingTransform {
 public:
  WaveletFrameTransform(int k, int levels, Shape shape)
      : filters_(daubechies_filters(k)), levels_(levels), shape_(shape) {
    if (levels < 1) detail::fail<ShapeMismatch>("wavelet frame needs at least one level");
  }

  Shape shape() const override { return shape_; }
  int levels() const { return levels_; }
  const WaveletFilters& filters() const { return filters_; }

  std::vector<double> default_weights() const override {
    return wavelet_level_weights(filters_.vanishing_moments, levels_);
  }

  bool shift_invariant() const override { return shape_.dims == 1; }

  std::string describe() const override {
    return "daubechies(k=" + std::to_string(filters_.vanishing_moments) +
           ", levels=" + std::to_string(levels_) + ")";
  }

  CoefficientStack forward(const Signal& f) const override {
    check_size(f.size());
    const auto axes = detail::axes_of(shape_);
    CoefficientStack out;
    out.order = filters_.vanishing_moments;
    out.directions = static_cast<int>(axes.size());
    out.weights = default_weights();
    out.planes.assign(static_cast<std::size_t>(levels_) * axes.size(), Signal());
    for (std::size_t d = 0; d < axes.size(); ++d) {
      Signal approx = f;
      for (int j = 0; j < levels_; ++j) {
        const Eigen::Index dil = Eigen::Index{1} << j;
        out.plane(j, static_cast<int>(d)) = detail::axis_correlate(approx, axes[d], filters_.g, dil);
        if (j + 1 < levels_) approx = detail::axis_correlate(approx, axes[d], filters_.h, dil);
      }
    }
    return out;
  }

  Signal adjoint(const CoefficientStack& c) const override {
    const auto axes = detail::axes_of(shape_);
    if (c.levels() != levels_ || c.directions != static_cast<int>(axes.size()))
      detail::fail<ShapeMismatch>("wavelet adjoint: stack shape does not match the frame");
    for (const auto& p : c.planes) check_size(p.size());
    Signal out = Signal::Zero(shape_.size());
    for (std::size_t d = 0; d < axes.size(); ++d) {
      Signal acc = Signal::Zero(shape_.size());
      for (int j = levels_ - 1; j >= 0; --j) {
        const Eigen::Index dil = Eigen::Index{1} << j;
        Signal next = detail::axis_convolve(c.plane(j, static_cast<int>(d)), axes[d], filters_.g, dil);
        if (j + 1 < levels_) next += detail::axis_convolve(acc, axes[d], filters_.h, dil);
        acc = std::move(next);
      }
      out += acc;
    }
    return out;
  }

 private:
  void check_size(Eigen::Index n) const {
    if (n != shape_.size())
      detail::fail<ShapeMismatch>("wavelet frame: length " + std::to_string(n) +
                                  " does not match shape " + shape_.str());
  }

  WaveletFilters filters_;
  int levels_;
  Shape shape_;
};

inline CoefficientStack ti_wavelet_transform(const Signal& f, int k, int levels) {
  return WaveletFrameTransform(k, levels, Shape::line(f.size())).forward(f);
}

inline Signal ti_wavelet_adjoint(const CoefficientStack& c, int k, int levels, Eigen::Index n) {
  return WaveletFrameTransform(k, levels, Shape::line(n)).adjoint(c);
}

}  // namespace mhotv
