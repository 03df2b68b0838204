#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "seqlpd/cloud.hpp"
#include "seqlpd/error.hpp"
#include "seqlpd/net.hpp"

namespace testsupport {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::uint64_t counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("seqlpd_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::vector<unsigned char> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline std::vector<seqlpd::Point3> uniform_points(std::size_t n, double lo, double hi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<seqlpd::Point3> pts(n);
  for (auto& p : pts) p = {u(rng), u(rng), u(rng)};
  return pts;
}

// Points snapped to a coarse grid, so exact distance ties are common.
inline std::vector<seqlpd::Point3> grid_points(std::size_t n, int cells, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(0, cells - 1);
  std::vector<seqlpd::Point3> pts(n);
  for (auto& p : pts) p = {double(u(rng)), double(u(rng)), double(u(rng))};
  return pts;
}

inline seqlpd::Descriptor random_descriptor(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  seqlpd::Descriptor d(dim);
  double s = 0.0;
  for (auto& v : d) {
    v = static_cast<float>(g(rng));
    s += double(v) * v;
  }
  const double inv = 1.0 / std::sqrt(s);
  for (auto& v : d) v = static_cast<float>(v * inv);
  return d;
}

inline seqlpd::Descriptor basis(std::size_t dim, std::size_t i) {
  seqlpd::Descriptor d(dim, 0.0f);
  d[i] = 1.0f;
  return d;
}

template <typename F>
seqlpd::ErrorCode error_of(F&& f) {
  try {
    f();
  } catch (const seqlpd::Error& e) {
    return e.code();
  }
  throw std::runtime_error("expected a seqlpd::Error");
}

}  // namespace testsupport
