#include "poisonguard/simd/distance.hpp"

#if defined(__aarch64__)
#include <arm_neon.h>
#endif

namespace pg::simd {

float squared_distance_scalar(const float* a, const float* b, std::size_t n) {
  float partial[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t blocks = n / 8 * 8;
  for (std::size_t i = 0; i < blocks; i += 8) {
    for (std::size_t j = 0; j < 8; ++j) {
      float d = a[i + j] - b[i + j];
      partial[j] += d * d;
    }
  }
  for (std::size_t i = blocks; i < n; ++i) {
    float d = a[i] - b[i];
    partial[i - blocks] += d * d;
  }
  return ((partial[0] + partial[1]) + (partial[2] + partial[3])) +
         ((partial[4] + partial[5]) + (partial[6] + partial[7]));
}

#if defined(__aarch64__)
float squared_distance_neon(const float* a, const float* b, std::size_t n) {
  float32x4_t acc_lo = vdupq_n_f32(0.0f);
  float32x4_t acc_hi = vdupq_n_f32(0.0f);
  std::size_t blocks = n / 8 * 8;
  for (std::size_t i = 0; i < blocks; i += 8) {
    float32x4_t d_lo = vsubq_f32(vld1q_f32(a + i), vld1q_f32(b + i));
    float32x4_t d_hi = vsubq_f32(vld1q_f32(a + i + 4), vld1q_f32(b + i + 4));
    acc_lo = vaddq_f32(acc_lo, vmulq_f32(d_lo, d_lo));
    acc_hi = vaddq_f32(acc_hi, vmulq_f32(d_hi, d_hi));
  }
  float partial[8];
  vst1q_f32(partial, acc_lo);
  vst1q_f32(partial + 4, acc_hi);
  for (std::size_t i = blocks; i < n; ++i) {
    float d = a[i] - b[i];
    partial[i - blocks] += d * d;
  }
  return ((partial[0] + partial[1]) + (partial[2] + partial[3])) +
         ((partial[4] + partial[5]) + (partial[6] + partial[7]));
}
#endif

namespace {

distance_fn pick_kernel(std::string& name) {
#if defined(__x86_64__) || defined(_M_X64)
  if (__builtin_cpu_supports("avx2")) {
    name = "avx2";
    return &squared_distance_avx2;
  }
#endif
#if defined(__aarch64__)
  name = "neon";
  return &squared_distance_neon;
#endif
  name = "scalar";
  return &squared_distance_scalar;
}

struct Dispatch {
  std::string name;
  distance_fn fn;
  Dispatch() { fn = pick_kernel(name); }
};

const Dispatch& dispatch() {
  static const Dispatch d;
  return d;
}

}  // namespace

distance_fn active_kernel() { return dispatch().fn; }

const std::string& active_kernel_name() { return dispatch().name; }

float squared_distance(const float* a, const float* b, std::size_t n) {
  return dispatch().fn(a, b, n);
}

void squared_distances(const float* query, const float* points, std::size_t rows,
                       std::size_t dim, float* out) {
  distance_fn fn = dispatch().fn;
  for (std::size_t r = 0; r < rows; ++r) {
    out[r] = fn(query, points + r * dim, dim);
  }
}

}  // namespace pg::simd
