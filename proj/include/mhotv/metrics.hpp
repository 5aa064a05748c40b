#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

#include "mhotv/errors.hpp"
#include "mhotv/spectral.hpp"
#include "mhotv/stencil.hpp"

namespace mhotv {

/// ||f - f_true|| / ||f_true||.
inline double rel_error(const Signal& f, const Signal& f_true) {
  if (f.size() != f_true.size())
    detail::fail<ShapeMismatch>("rel_error: lengths " + std::to_string(f.size()) + " and " +
                                std::to_string(f_true.size()) + " differ");
  const double nt = f_true.norm();
  if (nt == 0.0) return f.norm() == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return (f - f_true).norm() / nt;
}

/// Number of entries with |c_i| > rel * max |c| (an l0 proxy; smaller is sparser).
inline std::size_t l0_proxy(const Signal& c, double rel = 1e-3) {
  if (c.size() == 0) return 0;
  const double cut = rel * c.cwiseAbs().maxCoeff();
  std::size_t count = 0;
  for (double v : c) count += std::abs(v) > cut;
  return count;
}

/// k-th order single-scale finite differences of f (periodic).
inline Signal finite_differences(const Signal& f, int order) {
  return apply_direct(f, build_stencil(order, 1, static_cast<int>(f.size())));
}

/// log10 |k-th differences|, floored at 1e-16 * max so exact zeros stay finite.
inline Signal log_differences(const Signal& f, int order) {
  const Signal d = finite_differences(f, order).cwiseAbs();
  const double floor = std::max(1e-16 * d.maxCoeff(), std::numeric_limits<double>::min());
  return d.unaryExpr([floor](double v) { return std::log10(std::max(v, floor)); });
}

}  // namespace mhotv
