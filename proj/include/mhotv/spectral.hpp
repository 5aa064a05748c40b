#pragma once

// Discrete Fourier transforms and periodic convolution.
//
// Conventions:
//   dft(f)_xi  = sum_n f_n exp(-i 2 pi n xi / N)
//   idft(F)_n  = (1/N) sum_xi F_xi exp(+i 2 pi xi n / N)
//   (f*g)_m    = sum_n f_n g_{(m-n) mod N}
//
// Arbitrary N is supported. The fast paths run on FFTW with plans created
// once per (size, kind) under a mutex and never mutated afterwards, so all
// functions here may be called concurrently.

#include <fftw3.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <utility>

#include "mhotv/errors.hpp"

namespace mhotv {

using Signal = Eigen::VectorXd;
using Spectrum = Eigen::VectorXcd;
using Complex = std::complex<double>;

namespace detail {

enum class PlanKind { r2c, c2r, forward, backward };

class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(int n, PlanKind kind) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto key = std::make_pair(n, kind);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    auto* re = static_cast<double*>(fftw_malloc(sizeof(double) * n));
    auto* a = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    auto* b = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    fftw_plan p = nullptr;
    switch (kind) {
      case PlanKind::r2c: p = fftw_plan_dft_r2c_1d(n, re, a, flags); break;
      case PlanKind::c2r: p = fftw_plan_dft_c2r_1d(n, a, re, flags); break;
      case PlanKind::forward: p = fftw_plan_dft_1d(n, a, b, FFTW_FORWARD, flags); break;
      case PlanKind::backward: p = fftw_plan_dft_1d(n, a, b, FFTW_BACKWARD, flags); break;
    }
    fftw_free(re);
    fftw_free(a);
    fftw_free(b);
    plans_.emplace(key, p);
    return p;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  std::mutex mutex_;
  std::map<std::pair<int, PlanKind>, fftw_plan> plans_;
};

inline fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }

/// Half spectrum (N/2+1 bins) of a real signal.
inline Spectrum rfft(const Signal& f) {
  const int n = static_cast<int>(f.size());
  Spectrum out(n / 2 + 1);
  Signal in = f;  // FFTW's new-array interface wants non-const input
  fftw_execute_dft_r2c(PlanCache::instance().get(n, PlanKind::r2c), in.data(),
                       as_fftw(out.data()));
  return out;
}

/// Inverse of rfft, including the 1/N factor. The input is treated as the
/// non-redundant half of a Hermitian spectrum.
inline Signal irfft(const Spectrum& half, int n) {
  Spectrum in = half;  // c2r overwrites its input
  Signal out(n);
  fftw_execute_dft_c2r(PlanCache::instance().get(n, PlanKind::c2r), as_fftw(in.data()),
                       out.data());
  out /= static_cast<double>(n);
  return out;
}

inline Spectrum complex_fft(const Spectrum& f, PlanKind kind) {
  const int n = static_cast<int>(f.size());
  Spectrum in = f;
  Spectrum out(n);
  fftw_execute_dft(PlanCache::instance().get(n, kind), as_fftw(in.data()),
                   as_fftw(out.data()));
  return out;
}

inline void require_nonempty(Eigen::Index n, const char* what) {
  if (n < 1) fail<LengthMismatch>(std::string(what) + ": empty input");
}

}  // namespace detail

/// Full complex spectrum of a real signal.
inline Spectrum dft(const Signal& f) {
  detail::require_nonempty(f.size(), "dft");
  const Eigen::Index n = f.size();
  Spectrum half = detail::rfft(f);
  Spectrum full(n);
  full.head(half.size()) = half;
  for (Eigen::Index xi = half.size(); xi < n; ++xi) full[xi] = std::conj(half[n - xi]);
  return full;
}

inline Spectrum dft(const Spectrum& f) {
  detail::require_nonempty(f.size(), "dft");
  return detail::complex_fft(f, detail::PlanKind::forward);
}

/// Complex inverse transform (1/N on the inverse only).
inline Spectrum idft_complex(const Spectrum& spectrum) {
  detail::require_nonempty(spectrum.size(), "idft");
  Spectrum out = detail::complex_fft(spectrum, detail::PlanKind::backward);
  out /= static_cast<double>(spectrum.size());
  return out;
}

/// Real inverse transform. Throws NonSymmetricSpectrum when the spectrum is
/// not conjugate symmetric, i.e. when the discarded imaginary part of the
/// result exceeds 1e-9 * ||F||.
inline Signal idft(const Spectrum& spectrum) {
  Spectrum out = idft_complex(spectrum);
  const double residue = out.imag().norm();
  const double scale = spectrum.norm();
  if (residue > 1e-9 * scale) {
    detail::fail<NonSymmetricSpectrum>("idft: imaginary residue " + std::to_string(residue) +
                                       " exceeds tolerance for a real result");
  }
  return out.real();
}

/// O(N^2) evaluation of the DFT sum; reference for tests and small sizes.
inline Spectrum dft_direct(const Signal& f) {
  detail::require_nonempty(f.size(), "dft_direct");
  const Eigen::Index n = f.size();
  Spectrum out(n);
  for (Eigen::Index xi = 0; xi < n; ++xi) {
    Complex acc = 0.0;
    for (Eigen::Index m = 0; m < n; ++m) {
      // reduce the phase index exactly before converting to an angle
      const double phase = -2.0 * std::numbers::pi * static_cast<double>((m * xi) % n) /
                           static_cast<double>(n);
      acc += f[m] * Complex(std::cos(phase), std::sin(phase));
    }
    out[xi] = acc;
  }
  return out;
}

inline Signal circular_convolve_direct(const Signal& f, const Signal& g) {
  if (f.size() != g.size()) {
    detail::fail<LengthMismatch>("circular_convolve: lengths " + std::to_string(f.size()) +
                                 " and " + std::to_string(g.size()) + " differ");
  }
  detail::require_nonempty(f.size(), "circular_convolve");
  const Eigen::Index n = f.size();
  Signal out = Signal::Zero(n);
  for (Eigen::Index m = 0; m < n; ++m) {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) acc += f[k] * g[((m - k) % n + n) % n];
    out[m] = acc;
  }
  return out;
}

/// Periodic convolution through the convolution theorem.
inline Signal circular_convolve(const Signal& f, const Signal& g) {
  if (f.size() != g.size()) {
    detail::fail<LengthMismatch>("circular_convolve: lengths " + std::to_string(f.size()) +
                                 " and " + std::to_string(g.size()) + " differ");
  }
  detail::require_nonempty(f.size(), "circular_convolve");
  const int n = static_cast<int>(f.size());
  Spectrum product = detail::rfft(f).cwiseProduct(detail::rfft(g));
  return detail::irfft(product, n);
}

}  // namespace mhotv
