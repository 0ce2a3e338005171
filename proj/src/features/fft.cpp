#include <cmath>
#include <numbers>
#include <string>

#include "bitwave/error.hpp"
#include "bitwave/features.hpp"

namespace bitwave::features {

bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

std::vector<Complex> dft_naive(std::span<const Complex> x) {
  const std::size_t n = x.size();
  if (n == 0) throw Error(ErrorKind::shape, "DFT of an empty vector");
  std::vector<Complex> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    Complex acc{0.0, 0.0};
    for (std::size_t j = 0; j < n; ++j) {
      // Reduce k*j mod N first so the angle stays in [0, 2 pi).
      const double angle = -2.0 * std::numbers::pi * static_cast<double>((k * j) % n) / static_cast<double>(n);
      acc += x[j] * Complex(std::cos(angle), std::sin(angle));
    }
    out[k] = acc;
  }
  return out;
}

std::vector<Complex> fft(std::span<const Complex> x) {
  const std::size_t n = x.size();
  if (!is_power_of_two(n))
    throw Error(ErrorKind::shape, "FFT size " + std::to_string(n) + " is not a power of two");
  std::vector<Complex> a(x.begin(), x.end());
  if (n == 1) return a;

  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }

  // Twiddles computed directly, not by recurrence, to keep the error O(log N).
  std::vector<Complex> twiddle(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    twiddle[k] = Complex(std::cos(angle), std::sin(angle));
  }

  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t step = n / len;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const Complex u = a[start + k];
        const Complex v = a[start + k + half] * twiddle[k * step];
        a[start + k] = u + v;
        a[start + k + half] = u - v;
      }
    }
  }
  return a;
}

}  // namespace bitwave::features
