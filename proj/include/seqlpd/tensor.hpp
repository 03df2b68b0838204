#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

namespace seqlpd {

// Row-major float32 array with an explicit shape.
struct Tensor {
  std::vector<std::uint32_t> shape;
  std::vector<float> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::uint32_t> s) : shape(std::move(s)), data(element_count(shape)) {}
  Tensor(std::vector<std::uint32_t> s, std::vector<float> d) : shape(std::move(s)), data(std::move(d)) {}

  static std::size_t element_count(const std::vector<std::uint32_t>& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
  }

  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  std::span<float> row(std::size_t i) { return {data.data() + i * cols(), cols()}; }
  std::span<const float> row(std::size_t i) const { return {data.data() + i * cols(), cols()}; }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

}  // namespace seqlpd
