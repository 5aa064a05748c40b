#pragma once

// Test signals, phantoms and measurement noise.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "mhotv/errors.hpp"
#include "mhotv/image.hpp"
#include "mhotv/spectral.hpp"

namespace mhotv {

/// splitmix64 step; used to derive independent per-trial / per-stream seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t trial, std::uint64_t stream) {
  return mix_seed(mix_seed(mix_seed(base) ^ trial) ^ stream);
}

struct PiecewisePolySpec {
  int degree = 2;
  int jumps = 5;
  Eigen::Index n = 1024;
  double coef_lo = -1.0;
  double coef_hi = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (degree < 0) detail::fail<ConfigError>("piecewise polynomial: degree must be >= 0");
    if (jumps < 0) detail::fail<ConfigError>("piecewise polynomial: jumps must be >= 0");
    if (n < 2 || jumps > n - 1)
      detail::fail<ConfigError>("piecewise polynomial: need n - 1 >= jumps interior positions");
    if (!(coef_hi > coef_lo)) detail::fail<ConfigError>("piecewise polynomial: empty coefficient range");
  }
};

/// Sorted jump positions: segment boundaries drawn uniformly without
/// replacement from 1..n-1 (a jump at p means a new piece starts at p).
inline std::vector<Eigen::Index> jump_locations(const PiecewisePolySpec& spec) {
  spec.validate();
  std::mt19937_64 rng(derive_seed(spec.seed, 0, 1));
  std::vector<Eigen::Index> pool(static_cast<std::size_t>(spec.n - 1));
  for (Eigen::Index i = 0; i < spec.n - 1; ++i) pool[i] = i + 1;
  for (int i = 0; i < spec.jumps; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  std::vector<Eigen::Index> out(pool.begin(), pool.begin() + spec.jumps);
  std::sort(out.begin(), out.end());
  return out;
}

/// Random piecewise polynomial with `jumps` discontinuities. Each piece is a
/// polynomial in a local coordinate x in [-1, 1] with coefficients drawn from
/// U[coef_lo, coef_hi]; the result is scaled to max |f| = 1.
inline Signal gen_piecewise_poly(const PiecewisePolySpec& spec) {
  const auto cuts = jump_locations(spec);
  std::mt19937_64 rng(derive_seed(spec.seed, 0, 2));
  std::uniform_real_distribution<double> coef(spec.coef_lo, spec.coef_hi);

  std::vector<Eigen::Index> edges{0};
  edges.insert(edges.end(), cuts.begin(), cuts.end());
  edges.push_back(spec.n);

  Signal f(spec.n);
  for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
    std::vector<double> c(spec.degree + 1);
    for (auto& v : c) v = coef(rng);
    const Eigen::Index a = edges[s], b = edges[s + 1];
    const double len = static_cast<double>(b - a);
    for (Eigen::Index i = a; i < b; ++i) {
      const double x = len > 1 ? 2.0 * static_cast<double>(i - a) / (len - 1.0) - 1.0 : 0.0;
      double v = 0.0;
      for (int p = spec.degree; p >= 0; --p) v = v * x + c[p];
      f[i] = v;
    }
  }
  const double peak = f.cwiseAbs().maxCoeff();
  if (peak > 0.0) f /= peak;
  return f;
}

/// Piecewise-constant test image with values in [0, 1]: a background disk,
/// nested ellipses and small high-contrast disks at several scales.
/// Geometry is fixed in normalized coordinates, so the image only depends on n.
inline Image phantom2d(Eigen::Index n) {
  if (n < 32) detail::fail<ConfigError>("phantom2d: n_pix must be >= 32");
  struct Ellipse {
    double cx, cy, a, b, angle, value;
  };
  static const Ellipse shapes[] = {
      {0.00, 0.00, 0.90, 0.90, 0.0, 0.20},    // body
      {0.00, 0.05, 0.70, 0.55, 0.3, 0.45},
      {-0.25, 0.15, 0.25, 0.15, -0.5, 0.75},
      {0.30, -0.20, 0.18, 0.28, 0.8, 0.60},
      {0.05, -0.45, 0.30, 0.08, 0.0, 0.90},
      {-0.45, 0.45, 0.12, 0.06, 1.1, 0.35},
      {0.40, 0.35, 0.06, 0.06, 0.0, 1.00},
      {0.52, 0.22, 0.035, 0.035, 0.0, 1.00},
      {-0.50, -0.20, 0.045, 0.045, 0.0, 0.00},
      {-0.10, 0.50, 0.025, 0.025, 0.0, 1.00},
      {0.15, 0.15, 0.05, 0.05, 0.0, 0.95},
      {-0.35, -0.45, 0.03, 0.03, 0.0, 1.00},
      {-0.62, 0.05, 0.02, 0.02, 0.0, 1.00},
  };
  Image img(n, n);
  const double h = 0.5 * static_cast<double>(n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) {
      const double x = (static_cast<double>(c) + 0.5 - h) / h;
      const double y = (h - static_cast<double>(r) - 0.5) / h;
      double v = 0.0;
      for (const auto& e : shapes) {
        const double ca = std::cos(e.angle), sa = std::sin(e.angle);
        const double u = ((x - e.cx) * ca + (y - e.cy) * sa) / e.a;
        const double w = (-(x - e.cx) * sa + (y - e.cy) * ca) / e.b;
        if (u * u + w * w <= 1.0) v = e.value;
      }
      img(r, c) = v;
    }
  return img;
}

/// Noise level: SNR = RMS(b) / RMS(noise), an absolute sigma, or none.
struct NoiseSpec {
  enum class Mode { none, snr, sigma };
  Mode mode = Mode::none;
  double value = 0.0;

  static NoiseSpec snr(double s) { return {Mode::snr, s}; }
  static NoiseSpec sigma(double s) { return {Mode::sigma, s}; }

  void validate() const {
    if (mode != Mode::none && !(value > 0.0))
      detail::fail<ConfigError>("noise: snr / sigma must be positive");
  }

  double sigma_for(const Signal& b) const {
    validate();
    switch (mode) {
      case Mode::none: return 0.0;
      case Mode::sigma: return value;
      case Mode::snr:
        if (std::isinf(value)) return 0.0;
        return b.norm() / (std::sqrt(static_cast<double>(b.size())) * value);
    }
    return 0.0;
  }

  std::string str() const {
    switch (mode) {
      case Mode::none: return "none";
      case Mode::sigma: return "sigma=" + std::to_string(value);
      case Mode::snr: return "snr=" + std::to_string(value);
    }
    return "?";
  }
};

/// b + i.i.d. N(0, sigma^2) noise, deterministic per seed.
inline Signal add_noise(const Signal& b, const NoiseSpec& noise, std::uint64_t seed) {
  const double sigma = noise.sigma_for(b);
  if (sigma == 0.0) return b;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  Signal out = b;
  for (auto& v : out) v += normal(rng);
  return out;
}

inline Signal add_noise(const Signal& b, double snr, std::uint64_t seed) {
  return add_noise(b, NoiseSpec::snr(snr), seed);
}

}  // namespace mhotv
