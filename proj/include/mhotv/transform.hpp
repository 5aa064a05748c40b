#pragma once

// MHOTV coefficient transforms: the stack Phi_{k,2^j} f for j = 0..l, in 1-D
// or along rows and columns of an image, with three interchangeable
// computation paths.
//
//   decomposition  level 0 by k first differences, then level j from level
//                  j-1 with one P-chain at shift 2^{j-1}. Costs
//                  l*N*(k+1) + N*k additions for the whole stack.
//   fourier        one forward FFT, then a closed-form filter product and an
//                  inverse FFT per level. The only path for fractional k.
//   direct         explicit stencil convolution per level (reference).

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "mhotv/errors.hpp"
#include "mhotv/filters.hpp"
#include "mhotv/flops.hpp"
#include "mhotv/image.hpp"
#include "mhotv/spectral.hpp"
#include "mhotv/stencil.hpp"

namespace mhotv {

enum class Backend { fourier, decomposition, direct };

inline std::string to_string(Backend b) {
  switch (b) {
    case Backend::fourier: return "fourier";
    case Backend::decomposition: return "decomp";
    case Backend::direct: return "direct";
  }
  return "?";
}

inline Backend parse_backend(const std::string& s) {
  if (s == "fourier") return Backend::fourier;
  if (s == "decomp" || s == "decomposition") return Backend::decomposition;
  if (s == "direct") return Backend::direct;
  detail::fail<ConfigError>("unknown backend '" + s + "' (expected fourier|decomp|direct)");
}

/// Per-level coefficients. Images carry two planes per level: differences
/// along rows (direction 0) and along columns (direction 1).
struct CoefficientStack {
  double order = 0.0;
  int directions = 1;
  std::vector<Signal> planes;   // planes[level * directions + direction]
  std::vector<double> weights;  // one per level

  int levels() const { return directions ? static_cast<int>(planes.size()) / directions : 0; }
  Signal& plane(int level, int direction = 0) { return planes[level * directions + direction]; }
  const Signal& plane(int level, int direction = 0) const {
    return planes[level * directions + direction];
  }
  double weight_of_plane(std::size_t p) const { return weights[p / directions]; }

  CoefficientStack zeros_like() const {
    CoefficientStack z = *this;
    for (auto& p : z.planes) p.setZero();
    return z;
  }
  double dot(const CoefficientStack& other) const {
    double acc = 0.0;
    for (std::size_t p = 0; p < planes.size(); ++p) acc += planes[p].dot(other.planes[p]);
    return acc;
  }
};

/// 2^{-(j+k-1)} / (l+1) for j = 0..l.
inline std::vector<double> level_weights(double order, int max_level) {
  if (max_level < 0) detail::fail<ShapeMismatch>("level_weights: max level must be >= 0");
  std::vector<double> w;
  for (int j = 0; j <= max_level; ++j)
    w.push_back(std::pow(2.0, -(static_cast<double>(j) + order - 1.0)) / (max_level + 1));
  return w;
}

/// Linear analysis operator used as the regularizer inside the solvers.
class SparsifyingTransform {
 public:
  virtual ~SparsifyingTransform() = default;

  virtual Shape shape() const = 0;
  virtual CoefficientStack forward(const Signal& f) const = 0;
  virtual Signal adjoint(const CoefficientStack& c) const = 0;
  virtual std::vector<double> default_weights() const = 0;
  virtual std::string describe() const = 0;

  /// True when T commutes with circular shifts of a 1-D signal, so T^T T is circulant.
  virtual bool shift_invariant() const { return false; }
};

namespace detail {

inline std::vector<AxisLayout> axes_of(const Shape& s) {
  if (s.dims == 1) return {AxisLayout::line(s.cols)};
  return {AxisLayout::rows_of(s.rows, s.cols), AxisLayout::cols_of(s.rows, s.cols)};
}

inline Signal gather_line(const Signal& x, const AxisLayout& lay, Eigen::Index o, Eigen::Index r) {
  Signal line(lay.length);
  const Eigen::Index base = o * lay.length * lay.inner + r;
  for (Eigen::Index i = 0; i < lay.length; ++i) line[i] = x[base + i * lay.inner];
  return line;
}

inline void scatter_line(const Signal& line, Signal& x, const AxisLayout& lay, Eigen::Index o,
                         Eigen::Index r) {
  const Eigen::Index base = o * lay.length * lay.inner + r;
  for (Eigen::Index i = 0; i < lay.length; ++i) x[base + i * lay.inner] = line[i];
}

/// Half-spectrum (rfft layout) copy of a full filter.
inline Spectrum half_of(const Spectrum& full) { return full.head(full.size() / 2 + 1); }

inline Stencil reversed(const Stencil& s) {
  Stencil r = s;
  const Eigen::Index n = s.size();
  for (Eigen::Index m = 0; m < n; ++m) r.values[m] = s.values[(n - m) % n];
  return r;
}

}  // namespace detail

class MultiscaleTransform final : public SparsifyingTransform {
 public:
  /// levels = l + 1 scales 2^0..2^l.
  MultiscaleTransform(double order, int levels, Shape shape, Backend backend = Backend::fourier,
                      bool drop_wrapped = false)
      : order_(order), levels_(levels), shape_(shape), backend_(backend),
        drop_wrapped_(drop_wrapped) {
    if (!(order > 0.0)) detail::fail<InvalidOrder>("MHOTV order must be positive");
    if (levels < 1) detail::fail<ShapeMismatch>("MHOTV needs at least one level");
    const bool integral = is_integer_order(order);
    if (!integral && backend != Backend::fourier)
      detail::fail<InvalidOrder>("fractional orders require the fourier backend");
    if (!integral && drop_wrapped)
      detail::fail<InvalidOrder>("drop-wrapped mode needs an integer order");

    const Eigen::Index top_scale = Eigen::Index{1} << (levels - 1);
    for (const auto& lay : detail::axes_of(shape)) {
      if (integral) {
        detail::require_fits(static_cast<std::int64_t>(order), top_scale, lay.length,
                             "MultiscaleTransform");
      }
      if (backend == Backend::fourier) {
        std::vector<Spectrum> per_level;
        for (int j = 0; j < levels; ++j) {
          per_level.push_back(detail::half_of(
              filter_spectrum(order, 1 << j, static_cast<int>(lay.length)).values));
        }
        filters_.push_back(std::move(per_level));
      } else if (backend == Backend::direct) {
        std::vector<Stencil> per_level;
        for (int j = 0; j < levels; ++j)
          per_level.push_back(
              build_stencil(static_cast<int>(order), 1 << j, static_cast<int>(lay.length)));
        stencils_.push_back(std::move(per_level));
      }
    }
  }

  Shape shape() const override { return shape_; }
  double order() const { return order_; }
  int levels() const { return levels_; }
  Backend backend() const { return backend_; }

  std::vector<double> default_weights() const override {
    return level_weights(order_, levels_ - 1);
  }

  bool shift_invariant() const override { return shape_.dims == 1 && !drop_wrapped_; }

  std::string describe() const override {
    return "mhotv(order=" + format_order() + ", levels=" + std::to_string(levels_) +
           ", backend=" + to_string(backend_) + ")";
  }

  CoefficientStack forward(const Signal& f) const override { return forward(f, nullptr); }

  CoefficientStack forward(const Signal& f, FlopCounter* counter) const {
    check_size(f.size());
    const auto axes = detail::axes_of(shape_);
    CoefficientStack out;
    out.order = order_;
    out.directions = static_cast<int>(axes.size());
    out.weights = default_weights();
    out.planes.assign(static_cast<std::size_t>(levels_) * axes.size(), Signal());

    for (std::size_t d = 0; d < axes.size(); ++d) {
      std::vector<Signal> per_level = forward_axis(f, axes[d], d, counter);
      for (int j = 0; j < levels_; ++j) {
        if (drop_wrapped_) apply_wrap_mask(per_level[j], axes[d], j);
        out.plane(j, static_cast<int>(d)) = std::move(per_level[j]);
      }
    }
    return out;
  }

  Signal adjoint(const CoefficientStack& c) const override {
    const auto axes = detail::axes_of(shape_);
    if (c.levels() != levels_ || c.directions != static_cast<int>(axes.size()))
      detail::fail<ShapeMismatch>("MHOTV adjoint: stack has " + std::to_string(c.levels()) +
                                  " levels x " + std::to_string(c.directions) +
                                  " directions, expected " + std::to_string(levels_) + " x " +
                                  std::to_string(axes.size()));
    for (const auto& p : c.planes) check_size(p.size());

    Signal out = Signal::Zero(shape_.size());
    for (std::size_t d = 0; d < axes.size(); ++d) {
      std::vector<Signal> per_level;
      for (int j = 0; j < levels_; ++j) {
        Signal p = c.plane(j, static_cast<int>(d));
        if (drop_wrapped_) apply_wrap_mask(p, axes[d], j);
        per_level.push_back(std::move(p));
      }
      out += adjoint_axis(per_level, axes[d], d);
    }
    return out;
  }

 private:
  std::string format_order() const {
    std::string s = std::to_string(order_);
    s.erase(s.find_last_not_of('0') + 1);
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
  }

  void check_size(Eigen::Index n) const {
    if (n != shape_.size())
      detail::fail<ShapeMismatch>("MHOTV transform: length " + std::to_string(n) +
                                  " does not match shape " + shape_.str());
  }

  // Outputs whose stencil support runs past the end of the line.
  void apply_wrap_mask(Signal& x, const AxisLayout& lay, int level) const {
    const Eigen::Index support = (static_cast<Eigen::Index>(order_) + 1) << level;
    const Eigen::Index first = std::max<Eigen::Index>(0, lay.length - support + 1);
    for (Eigen::Index o = 0; o < lay.outer; ++o)
      for (Eigen::Index i = first; i < lay.length; ++i)
        for (Eigen::Index r = 0; r < lay.inner; ++r)
          x[(o * lay.length + i) * lay.inner + r] = 0.0;
  }

  std::vector<Signal> forward_axis(const Signal& f, const AxisLayout& lay, std::size_t axis,
                                   FlopCounter* counter) const {
    std::vector<Signal> out;
    const int k = static_cast<int>(order_);
    switch (backend_) {
      case Backend::decomposition: {
        out.push_back(forward_differences(f, lay, k, counter));
        for (int j = 1; j < levels_; ++j)
          out.push_back(pchain_axis(out.back(), lay, Eigen::Index{1} << (j - 1), k, counter));
        break;
      }
      case Backend::fourier: {
        out.assign(levels_, Signal(f.size()));
        for (Eigen::Index o = 0; o < lay.outer; ++o) {
          for (Eigen::Index r = 0; r < lay.inner; ++r) {
            const Spectrum spec = detail::rfft(detail::gather_line(f, lay, o, r));
            detail::count_fft(counter, lay.length);
            for (int j = 0; j < levels_; ++j) {
              const Signal line = detail::irfft(spec.cwiseProduct(filters_[axis][j]),
                                                static_cast<int>(lay.length));
              detail::count_products(counter, lay.length);
              detail::count_fft(counter, lay.length);
              detail::scatter_line(line, out[j], lay, o, r);
            }
          }
        }
        break;
      }
      case Backend::direct: {
        out.assign(levels_, Signal(f.size()));
        for (Eigen::Index o = 0; o < lay.outer; ++o)
          for (Eigen::Index r = 0; r < lay.inner; ++r) {
            const Signal line = detail::gather_line(f, lay, o, r);
            for (int j = 0; j < levels_; ++j)
              detail::scatter_line(apply_direct(line, stencils_[axis][j], counter), out[j], lay,
                                   o, r);
          }
        break;
      }
    }
    return out;
  }

  Signal adjoint_axis(const std::vector<Signal>& c, const AxisLayout& lay,
                      std::size_t axis) const {
    const int k = static_cast<int>(order_);
    switch (backend_) {
      case Backend::decomposition: {
        // sum_j Phi_j^T c_j = Phi_0^T (c_0 + P_1^T (c_1 + P_2^T (c_2 + ...)))
        Signal acc = c[levels_ - 1];
        for (int j = levels_ - 1; j >= 1; --j)
          acc = pchain_axis_adjoint(acc, lay, Eigen::Index{1} << (j - 1), k) + c[j - 1];
        return forward_differences_adjoint(acc, lay, k);
      }
      case Backend::fourier: {
        Signal out(shape_.size());
        for (Eigen::Index o = 0; o < lay.outer; ++o)
          for (Eigen::Index r = 0; r < lay.inner; ++r) {
            Spectrum acc = Spectrum::Zero(lay.length / 2 + 1);
            for (int j = 0; j < levels_; ++j)
              acc += detail::rfft(detail::gather_line(c[j], lay, o, r))
                         .cwiseProduct(filters_[axis][j].conjugate());
            detail::scatter_line(detail::irfft(acc, static_cast<int>(lay.length)), out, lay, o,
                                 r);
          }
        return out;
      }
      case Backend::direct: {
        Signal out(shape_.size());
        for (Eigen::Index o = 0; o < lay.outer; ++o)
          for (Eigen::Index r = 0; r < lay.inner; ++r) {
            Signal line = Signal::Zero(lay.length);
            for (int j = 0; j < levels_; ++j)
              line += apply_direct(detail::gather_line(c[j], lay, o, r),
                                   detail::reversed(stencils_[axis][j]));
            detail::scatter_line(line, out, lay, o, r);
          }
        return out;
      }
    }
    return {};
  }

  double order_;
  int levels_;
  Shape shape_;
  Backend backend_;
  bool drop_wrapped_;
  std::vector<std::vector<Spectrum>> filters_;   // [axis][level], half spectra
  std::vector<std::vector<Stencil>> stencils_;   // [axis][level]
};

/// All l+1 levels of a 1-D signal by one decomposition sweep.
inline CoefficientStack transform_decomposition(const Signal& f, int order, int max_level,
                                                FlopCounter* counter = nullptr) {
  return MultiscaleTransform(order, max_level + 1, Shape::line(f.size()), Backend::decomposition)
      .forward(f, counter);
}

/// All l+1 levels of a 1-D signal through closed-form Fourier filters.
inline CoefficientStack transform_fourier(const Signal& f, double order, int max_level,
                                          FlopCounter* counter = nullptr) {
  return MultiscaleTransform(order, max_level + 1, Shape::line(f.size()), Backend::fourier)
      .forward(f, counter);
}

/// sum_j Phi_{k,2^j}^T c_j (level weights are not applied).
inline Signal adjoint_transform(const CoefficientStack& c, double order, int max_level,
                                Eigen::Index n) {
  const Backend b = is_integer_order(order) ? Backend::decomposition : Backend::fourier;
  return MultiscaleTransform(order, max_level + 1, Shape::line(n), b).adjoint(c);
}

/// Row-wise and column-wise stacks of an image.
inline CoefficientStack transform_2d(const Image& img, double order, int max_level,
                                     Backend backend = Backend::decomposition,
                                     FlopCounter* counter = nullptr) {
  return MultiscaleTransform(order, max_level + 1, img.shape(), backend)
      .forward(img.pixels, counter);
}

inline Signal adjoint_transform_2d(const CoefficientStack& c, double order, int max_level,
                                   Eigen::Index rows, Eigen::Index cols,
                                   Backend backend = Backend::decomposition) {
  return MultiscaleTransform(order, max_level + 1, Shape::image(rows, cols), backend).adjoint(c);
}

}  // namespace mhotv
