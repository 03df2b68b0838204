#include "seqlpd/simd/kernels.hpp"

namespace seqlpd::simd::scalar {
namespace {

// Same tree as the AVX2 horizontal add: fold 256->128 bits, then 128->64,
// then the last pair.
inline float reduce_lanes(const float (&acc)[kLanes]) {
  const float q0 = acc[0] + acc[4];
  const float q1 = acc[1] + acc[5];
  const float q2 = acc[2] + acc[6];
  const float q3 = acc[3] + acc[7];
  const float h0 = q0 + q2;
  const float h1 = q1 + q3;
  return h0 + h1;
}

}  // namespace

float dot(const float* a, const float* b, std::size_t n) {
  float acc[kLanes] = {};
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) {
      const float p = a[i + l] * b[i + l];
      acc[l] = acc[l] + p;
    }
  }
  float s = reduce_lanes(acc);
  for (; i < n; ++i) {
    const float p = a[i] * b[i];
    s = s + p;
  }
  return s;
}

float l2sq(const float* a, const float* b, std::size_t n) {
  float acc[kLanes] = {};
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) {
      const float d = a[i + l] - b[i + l];
      const float p = d * d;
      acc[l] = acc[l] + p;
    }
  }
  float s = reduce_lanes(acc);
  for (; i < n; ++i) {
    const float d = a[i] - b[i];
    const float p = d * d;
    s = s + p;
  }
  return s;
}

void axpy_f64(double* y, double alpha, const float* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double p = alpha * static_cast<double>(x[i]);
    y[i] = y[i] + p;
  }
}

}  // namespace seqlpd::simd::scalar
