// Compiled with -mavx2 (and deliberately without -mfma: the scalar reference
// accumulates with separate multiply and add, and the two paths must agree
// bit for bit).

#include "poisonguard/simd/distance.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

namespace pg::simd {

float squared_distance_avx2(const float* a, const float* b, std::size_t n) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t blocks = n / 8 * 8;
  for (std::size_t i = 0; i < blocks; i += 8) {
    __m256 d = _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i));
    acc = _mm256_add_ps(acc, _mm256_mul_ps(d, d));
  }
  alignas(32) float partial[8];
  _mm256_store_ps(partial, acc);
  for (std::size_t i = blocks; i < n; ++i) {
    float d = a[i] - b[i];
    partial[i - blocks] += d * d;
  }
  return ((partial[0] + partial[1]) + (partial[2] + partial[3])) +
         ((partial[4] + partial[5]) + (partial[6] + partial[7]));
}

}  // namespace pg::simd

#endif
