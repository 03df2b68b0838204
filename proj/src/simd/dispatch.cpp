#include <cstdlib>
#include <cstring>

#include "seqlpd/simd/kernels.hpp"

namespace seqlpd::simd {
namespace {

struct Table {
  Isa isa;
  float (*dot)(const float*, const float*, std::size_t);
  float (*l2sq)(const float*, const float*, std::size_t);
  void (*axpy_f64)(double*, double, const float*, std::size_t);
};

Table resolve() {
  const char* force = std::getenv("SEQLPD_SIMD");
  const bool want_scalar = force != nullptr && std::strcmp(force, "scalar") == 0;
  if (!want_scalar && avx2::available()) {
    return {Isa::Avx2, avx2::dot, avx2::l2sq, avx2::axpy_f64};
  }
  return {Isa::Scalar, scalar::dot, scalar::l2sq, scalar::axpy_f64};
}

const Table& table() {
  static const Table t = resolve();
  return t;
}

}  // namespace

Isa active_isa() { return table().isa; }

std::string_view isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

float dot(const float* a, const float* b, std::size_t n) { return table().dot(a, b, n); }

float l2sq(const float* a, const float* b, std::size_t n) { return table().l2sq(a, b, n); }

void axpy_f64(double* y, double alpha, const float* x, std::size_t n) {
  table().axpy_f64(y, alpha, x, n);
}

}  // namespace seqlpd::simd
