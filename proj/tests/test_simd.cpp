#include <doctest.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <random>
#include <vector>

#include "seqlpd/simd/kernels.hpp"

using namespace seqlpd;

namespace {

std::vector<float> random_floats(std::size_t n, std::mt19937_64& rng, float scale) {
  std::normal_distribution<float> g(0.0f, scale);
  std::vector<float> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

// Naive double-precision sums, to bound the error of the blocked kernels.
double dot_ref(const std::vector<float>& a, const std::vector<float>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += double(a[i]) * b[i];
  return s;
}

}  // namespace

TEST_CASE("scalar kernels track a double-precision reference") {
  std::mt19937_64 rng(1);
  for (std::size_t n : {0u, 1u, 7u, 8u, 9u, 63u, 64u, 1024u, 1031u}) {
    const auto a = random_floats(n, rng, 1.0f), b = random_floats(n, rng, 1.0f);
    const double ref = dot_ref(a, b);
    CHECK(std::abs(simd::scalar::dot(a.data(), b.data(), n) - ref) <= 1e-5 * (1.0 + n));
    double l2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) l2 += double(a[i] - b[i]) * (a[i] - b[i]);
    CHECK(std::abs(simd::scalar::l2sq(a.data(), b.data(), n) - l2) <= 1e-5 * (1.0 + n));
    std::vector<double> y(n, 0.5);
    simd::scalar::axpy_f64(y.data(), 0.25, a.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(y[i] == 0.5 + 0.25 * double(a[i]));
  }
  const float ones[3] = {1, 1, 1};
  CHECK(simd::scalar::dot(ones, ones, 3) == 3.0f);
  CHECK(simd::scalar::l2sq(ones, ones, 3) == 0.0f);
}

TEST_CASE("AVX2 kernels are bit-identical to the scalar reference") {
  if (!simd::avx2::available()) {
    MESSAGE("AVX2 not available on this CPU; equivalence test skipped");
    return;
  }
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(0, 2100)(rng);
    const float scale = trial % 3 == 0 ? 1e3f : 1.0f;
    auto a = random_floats(n + 3, rng, scale), b = random_floats(n + 3, rng, scale);
    // Unaligned starting offsets exercise the unaligned loads.
    const std::size_t off = trial % 4;
    const float* pa = a.data() + off;
    const float* pb = b.data() + (3 - off);
    CHECK(std::bit_cast<std::uint32_t>(simd::scalar::dot(pa, pb, n)) ==
          std::bit_cast<std::uint32_t>(simd::avx2::dot(pa, pb, n)));
    CHECK(std::bit_cast<std::uint32_t>(simd::scalar::l2sq(pa, pb, n)) ==
          std::bit_cast<std::uint32_t>(simd::avx2::l2sq(pa, pb, n)));
    std::vector<double> y1(n), y2(n);
    for (std::size_t i = 0; i < n; ++i) y1[i] = y2[i] = double(a[i]) * 0.5;
    const double alpha = std::normal_distribution<double>()(rng);
    simd::scalar::axpy_f64(y1.data(), alpha, pb, n);
    simd::avx2::axpy_f64(y2.data(), alpha, pb, n);
    CHECK(std::memcmp(y1.data(), y2.data(), n * sizeof(double)) == 0);
  }
}

TEST_CASE("dispatch honours the active ISA") {
  std::mt19937_64 rng(3);
  const auto a = random_floats(333, rng, 1.0f), b = random_floats(333, rng, 1.0f);
  CHECK(simd::dot(a.data(), b.data(), a.size()) == simd::scalar::dot(a.data(), b.data(), a.size()));
  CHECK(simd::l2sq(a.data(), b.data(), a.size()) == simd::scalar::l2sq(a.data(), b.data(), a.size()));
  const std::string_view name = simd::isa_name(simd::active_isa());
  CHECK((name == "scalar" || name == "avx2"));
}
