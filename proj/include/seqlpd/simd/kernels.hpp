#pragma once

// Data-parallel inner loops shared by the descriptor network and the
// matching stages.
//
// Every kernel has a scalar reference and an AVX2 variant. The reference
// reproduces the AVX2 evaluation order exactly: eight lane accumulators over
// full blocks of eight, a fixed reduction tree, then a sequential tail. No
// fused multiply-add is used on either path, so both produce bit-identical
// results and the choice of path never changes a descriptor.

#include <cstddef>
#include <string_view>

namespace seqlpd::simd {

inline constexpr std::size_t kLanes = 8;

namespace scalar {
float dot(const float* a, const float* b, std::size_t n);
float l2sq(const float* a, const float* b, std::size_t n);
// y[i] += alpha * double(x[i])
void axpy_f64(double* y, double alpha, const float* x, std::size_t n);
}  // namespace scalar

namespace avx2 {
bool available();
float dot(const float* a, const float* b, std::size_t n);
float l2sq(const float* a, const float* b, std::size_t n);
void axpy_f64(double* y, double alpha, const float* x, std::size_t n);
}  // namespace avx2

enum class Isa { Scalar, Avx2 };

// Resolved once: AVX2 when the CPU supports it, unless SEQLPD_SIMD=scalar.
Isa active_isa();
std::string_view isa_name(Isa isa);

float dot(const float* a, const float* b, std::size_t n);
float l2sq(const float* a, const float* b, std::size_t n);
void axpy_f64(double* y, double alpha, const float* x, std::size_t n);

}  // namespace seqlpd::simd
