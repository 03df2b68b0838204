// Compiled with -mavx2 (and without -mfma); only reached after a runtime
// CPU check.
#include "seqlpd/simd/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define SEQLPD_HAVE_X86 1
#include <immintrin.h>
#else
#define SEQLPD_HAVE_X86 0
#endif

namespace seqlpd::simd::avx2 {

#if SEQLPD_HAVE_X86 && defined(__AVX2__)

namespace {

inline float hsum(__m256 v) {
  const __m128 lo = _mm256_castps256_ps128(v);
  const __m128 hi = _mm256_extractf128_ps(v, 1);
  const __m128 q = _mm_add_ps(lo, hi);            // [a0+a4, a1+a5, a2+a6, a3+a7]
  const __m128 h = _mm_add_ps(q, _mm_movehl_ps(q, q));  // [q0+q2, q1+q3, ..]
  const __m128 s = _mm_add_ss(h, _mm_shuffle_ps(h, h, 0x1));
  return _mm_cvtss_f32(s);
}

}  // namespace

bool available() { return __builtin_cpu_supports("avx2"); }

float dot(const float* a, const float* b, std::size_t n) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256 p = _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i));
    acc = _mm256_add_ps(acc, p);
  }
  float s = hsum(acc);
  for (; i < n; ++i) {
    const float p = a[i] * b[i];
    s = s + p;
  }
  return s;
}

float l2sq(const float* a, const float* b, std::size_t n) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256 d = _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i));
    acc = _mm256_add_ps(acc, _mm256_mul_ps(d, d));
  }
  float s = hsum(acc);
  for (; i < n; ++i) {
    const float d = a[i] - b[i];
    const float p = d * d;
    s = s + p;
  }
  return s;
}

void axpy_f64(double* y, double alpha, const float* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xd = _mm256_cvtps_pd(_mm_loadu_ps(x + i));
    const __m256d p = _mm256_mul_pd(va, xd);
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), p));
  }
  for (; i < n; ++i) {
    const double p = alpha * static_cast<double>(x[i]);
    y[i] = y[i] + p;
  }
}

#else

bool available() { return false; }
float dot(const float* a, const float* b, std::size_t n) { return scalar::dot(a, b, n); }
float l2sq(const float* a, const float* b, std::size_t n) { return scalar::l2sq(a, b, n); }
void axpy_f64(double* y, double alpha, const float* x, std::size_t n) {
  scalar::axpy_f64(y, alpha, x, n);
}

#endif

}  // namespace seqlpd::simd::avx2
