#pragma once

#include <cmath>
#include <cstdint>

namespace mhotv {

/// Arithmetic-operation tally for the coefficient paths.
///
/// The decomposition and direct paths count real additions and
/// multiplications as they are performed. The Fourier path charges the usual
/// model cost: N*log2(N) per transform and N per spectral product.
struct FlopCounter {
  std::uint64_t additions = 0;
  std::uint64_t multiplications = 0;
  std::uint64_t transform_flops = 0;
  std::uint64_t spectral_products = 0;

  std::uint64_t total() const {
    return additions + multiplications + transform_flops + spectral_products;
  }
  void reset() { *this = FlopCounter{}; }
};

/// Model cost of one length-n FFT: n*log2(n), rounded up to a whole log for
/// non-powers of two.
inline std::uint64_t fft_model_cost(std::uint64_t n) {
  if (n < 2) return 0;
  std::uint64_t lg = 0;
  while ((std::uint64_t{1} << lg) < n) ++lg;
  return n * lg;
}

namespace detail {

inline void count_adds(FlopCounter* c, std::uint64_t n) {
  if (c) c->additions += n;
}
inline void count_muls(FlopCounter* c, std::uint64_t n) {
  if (c) c->multiplications += n;
}
inline void count_fft(FlopCounter* c, std::uint64_t n) {
  if (c) c->transform_flops += fft_model_cost(n);
}
inline void count_products(FlopCounter* c, std::uint64_t n) {
  if (c) c->spectral_products += n;
}

}  // namespace detail
}  // namespace mhotv
