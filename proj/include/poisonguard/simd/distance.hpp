#pragma once

#include <cstddef>
#include <string>

namespace pg::simd {

// Squared Euclidean distance between float vectors.
//
// All variants implement the same fixed accumulation order so that scalar
// and vector paths produce bit-identical results and runtime dispatch never
// changes downstream nearest-neighbor decisions:
//   partial[j] += (a[i]-b[i])^2   for i in blocks of 8, j = i mod 8
//   tail elements (n % 8) go into partial[0..r)
//   result = ((p0+p1)+(p2+p3)) + ((p4+p5)+(p6+p7))
// No FMA contraction is used on any path.

float squared_distance_scalar(const float* a, const float* b, std::size_t n);

#if defined(__x86_64__) || defined(_M_X64)
float squared_distance_avx2(const float* a, const float* b, std::size_t n);
#endif
#if defined(__aarch64__)
float squared_distance_neon(const float* a, const float* b, std::size_t n);
#endif

using distance_fn = float (*)(const float*, const float*, std::size_t);

// Best kernel supported by the executing CPU, chosen once per process.
distance_fn active_kernel();
const std::string& active_kernel_name();

float squared_distance(const float* a, const float* b, std::size_t n);

// out[r] = squared_distance(query, points + r*dim) for r in [0, rows).
void squared_distances(const float* query, const float* points, std::size_t rows,
                       std::size_t dim, float* out);

}  // namespace pg::simd
