#pragma once

// Parallel-beam Radon transform of an n x n pixel image and filtered
// backprojection.
//
// Geometry (pixel units): the image covers [-n/2, n/2]^2, pixel (r, c) spans
// x in [c - n/2, c + 1 - n/2], y in [n/2 - r - 1, n/2 - r]. Detector bin i
// sits at t_i = (i - (n_det - 1)/2) * spacing and measures the line
// t = x cos(theta) + y sin(theta). Matrix rows are angle-major:
// row = angle * n_det + bin.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "mhotv/errors.hpp"
#include "mhotv/image.hpp"
#include "mhotv/operators.hpp"
#include "mhotv/spectral.hpp"

namespace mhotv {

struct SinogramGeometry {
  Eigen::Index n_pix = 0;
  std::vector<double> angles;  // radians, strictly increasing in [0, pi)
  Eigen::Index n_det = 0;
  double spacing = 1.0;

  static Eigen::Index default_detector_count(Eigen::Index n_pix) {
    return static_cast<Eigen::Index>(std::ceil(std::sqrt(2.0) * static_cast<double>(n_pix)));
  }

  /// n_angles equispaced angles over [0, pi).
  static SinogramGeometry parallel(Eigen::Index n_pix, int n_angles, Eigen::Index n_det = 0) {
    SinogramGeometry g;
    g.n_pix = n_pix;
    g.n_det = n_det > 0 ? n_det : default_detector_count(n_pix);
    for (int i = 0; i < n_angles; ++i) g.angles.push_back(std::numbers::pi * i / n_angles);
    g.validate();
    return g;
  }

  Eigen::Index n_angles() const { return static_cast<Eigen::Index>(angles.size()); }
  Eigen::Index measurements() const { return n_det * n_angles(); }

  double bin_center(Eigen::Index i) const {
    return (static_cast<double>(i) - 0.5 * static_cast<double>(n_det - 1)) * spacing;
  }

  void validate() const {
    if (n_pix < 1) detail::fail<GeometryMismatch>("geometry: n_pix must be >= 1");
    if (n_det < n_pix) detail::fail<GeometryMismatch>("geometry: n_det must be >= n_pix");
    if (!(spacing > 0.0)) detail::fail<GeometryMismatch>("geometry: spacing must be positive");
    if (angles.empty()) detail::fail<GeometryMismatch>("geometry: no angles");
    for (std::size_t i = 0; i < angles.size(); ++i) {
      if (angles[i] < 0.0 || angles[i] >= std::numbers::pi)
        detail::fail<GeometryMismatch>("geometry: angles must lie in [0, pi)");
      if (i > 0 && !(angles[i] > angles[i - 1]))
        detail::fail<GeometryMismatch>("geometry: angles must be strictly increasing");
    }
  }
};

/// n_det x n_angles line integrals; values(bin, angle). Column-major storage
/// makes values.reshaped() the angle-major measurement vector.
struct Sinogram {
  Eigen::MatrixXd values;

  Eigen::Index n_det() const { return values.rows(); }
  Eigen::Index n_angles() const { return values.cols(); }
  Signal as_vector() const { return values.reshaped(); }

  static Sinogram from_vector(const Signal& b, const SinogramGeometry& g) {
    if (b.size() != g.measurements())
      detail::fail<GeometryMismatch>("sinogram: " + std::to_string(b.size()) +
                                     " values do not match geometry");
    return Sinogram{b.reshaped(g.n_det, g.n_angles())};
  }
};

namespace detail {

// Exact intersection lengths of one line with the pixel grid (Siddon).
inline void trace_ray(double t, double theta, Eigen::Index n, Eigen::Index row,
                      std::vector<Eigen::Triplet<double>>& out) {
  const double h = 0.5 * static_cast<double>(n);
  const double c = std::cos(theta), s = std::sin(theta);
  const double px = t * c, py = t * s;  // closest point to the origin
  const double dx = -s, dy = c;         // unit direction
  constexpr double parallel_eps = 1e-12;
  constexpr double inf = std::numeric_limits<double>::infinity();

  double s_in = -inf, s_out = inf;
  auto clip = [&](double p, double d) {
    if (std::abs(d) < parallel_eps) {
      if (p <= -h || p >= h) s_in = inf;  // misses the box
      return;
    }
    const double a = (-h - p) / d, b = (h - p) / d;
    s_in = std::max(s_in, std::min(a, b));
    s_out = std::min(s_out, std::max(a, b));
  };
  clip(px, dx);
  clip(py, dy);
  if (!(s_out > s_in)) return;

  std::vector<double> cuts{s_in, s_out};
  auto add_planes = [&](double p, double d) {
    if (std::abs(d) < parallel_eps) return;
    for (Eigen::Index i = 0; i <= n; ++i) {
      const double sc = (-h + static_cast<double>(i) - p) / d;
      if (sc > s_in && sc < s_out) cuts.push_back(sc);
    }
  };
  add_planes(px, dx);
  add_planes(py, dy);
  std::sort(cuts.begin(), cuts.end());

  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double len = cuts[i + 1] - cuts[i];
    if (len <= 1e-14) continue;
    const double sm = 0.5 * (cuts[i] + cuts[i + 1]);
    const double x = px + sm * dx, y = py + sm * dy;
    const auto col = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::floor(x + h)), 0, n - 1);
    const auto rr = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::floor(h - y)), 0, n - 1);
    out.emplace_back(row, rr * n + col, len);
  }
}

}  // namespace detail

/// Sparse line-integral matrix of the geometry; adjoint is unfiltered
/// backprojection via the stored transpose.
inline SparseOperator radon_operator(const SinogramGeometry& geom) {
  geom.validate();
  const Eigen::Index n = geom.n_pix;
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(geom.measurements() * 2 * n));
  for (Eigen::Index a = 0; a < geom.n_angles(); ++a)
    for (Eigen::Index i = 0; i < geom.n_det; ++i)
      detail::trace_ray(geom.bin_center(i), geom.angles[a], n, a * geom.n_det + i, triplets);
  SparseMatrix m(geom.measurements(), n * n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return SparseOperator(std::move(m), "radon(" + std::to_string(n) + "x" + std::to_string(n) +
                                          ", angles=" + std::to_string(geom.n_angles()) +
                                          ", bins=" + std::to_string(geom.n_det) + ")");
}

enum class RampWindow { ram_lak, hann };

/// Ram-Lak filtered backprojection (Hann apodization optional).
inline Image filtered_backprojection(const Sinogram& sino, const SinogramGeometry& geom,
                                     RampWindow window = RampWindow::ram_lak) {
  geom.validate();
  if (sino.n_det() != geom.n_det || sino.n_angles() != geom.n_angles())
    detail::fail<GeometryMismatch>("filtered_backprojection: sinogram is " +
                                   std::to_string(sino.n_det()) + "x" +
                                   std::to_string(sino.n_angles()) + ", geometry expects " +
                                   std::to_string(geom.n_det) + "x" +
                                   std::to_string(geom.n_angles()));
  const Eigen::Index nd = geom.n_det;
  int padded = 1;
  while (padded < 2 * nd) padded <<= 1;
  const double tau = geom.spacing;

  // spatial Ram-Lak kernel, laid out circularly
  Signal kernel = Signal::Zero(padded);
  kernel[0] = 1.0 / (4.0 * tau * tau);
  for (int k = 1; k < padded / 2; k += 2) {
    const double v = -1.0 / (std::numbers::pi * std::numbers::pi * k * k * tau * tau);
    kernel[k] = v;
    kernel[padded - k] = v;
  }
  Spectrum response = detail::rfft(kernel);
  if (window == RampWindow::hann) {
    for (Eigen::Index u = 0; u < response.size(); ++u) {
      const double nu = static_cast<double>(u) / padded;
      response[u] *= 0.5 * (1.0 + std::cos(2.0 * std::numbers::pi * nu));
    }
  }

  const Eigen::Index n = geom.n_pix;
  const double h = 0.5 * static_cast<double>(n);
  Image out(n, n);
  for (Eigen::Index a = 0; a < geom.n_angles(); ++a) {
    Signal col = Signal::Zero(padded);
    col.head(nd) = sino.values.col(a);
    Signal q = detail::irfft(detail::rfft(col).cwiseProduct(response), padded) * tau;
    const double c = std::cos(geom.angles[a]), s = std::sin(geom.angles[a]);
    for (Eigen::Index r = 0; r < n; ++r) {
      const double y = h - static_cast<double>(r) - 0.5;
      for (Eigen::Index cc = 0; cc < n; ++cc) {
        const double x = static_cast<double>(cc) + 0.5 - h;
        const double pos = (x * c + y * s) / tau + 0.5 * static_cast<double>(nd - 1);
        const auto i0 = static_cast<Eigen::Index>(std::floor(pos));
        const double frac = pos - static_cast<double>(i0);
        double v = 0.0;
        if (i0 >= 0 && i0 < nd) v += (1.0 - frac) * q[i0];
        if (i0 + 1 >= 0 && i0 + 1 < nd) v += frac * q[i0 + 1];
        out(r, cc) += v;
      }
    }
  }
  out.pixels *= std::numbers::pi / static_cast<double>(geom.n_angles());
  return out;
}

}  // namespace mhotv
