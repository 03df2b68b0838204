#pragma once

// Little-endian byte buffers for the LPDW / LPDM / LPDC containers.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "seqlpd/error.hpp"

namespace seqlpd::detail {

static_assert(std::endian::native == std::endian::little, "little-endian host assumed");

class ByteWriter {
 public:
  template <typename T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const char*>(data);
    buf_.insert(buf_.end(), p, p + n);
  }
  void put_magic(std::string_view m) { put_bytes(m.data(), m.size()); }

  void write_to(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
  }

  const std::vector<char>& bytes() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class ByteReader {
 public:
  ByteReader(std::vector<char> bytes, std::string what) : buf_(std::move(bytes)), what_(std::move(what)) {}

  static ByteReader from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return ByteReader(std::move(bytes), path.string());
  }

  template <typename T>
  T get() {
    T v;
    get_bytes(&v, sizeof(T));
    return v;
  }
  void get_bytes(void* out, std::size_t n) {
    if (remaining() < n) throw Error(ErrorCode::FormatError, what_ + ": truncated");
    std::memcpy(out, buf_.data() + pos_, n);
    pos_ += n;
  }
  void expect_magic(std::string_view m) {
    std::string got(m.size(), '\0');
    get_bytes(got.data(), m.size());
    if (got != m) throw Error(ErrorCode::FormatError, what_ + ": bad magic, expected " + std::string(m));
  }
  void expect_version(std::uint32_t want) {
    const auto v = get<std::uint32_t>();
    if (v != want) {
      throw Error(ErrorCode::FormatError, what_ + ": unsupported version " + std::to_string(v));
    }
  }
  void expect_end() const {
    if (remaining() != 0) {
      throw Error(ErrorCode::FormatError,
                  what_ + ": " + std::to_string(remaining()) + " trailing bytes");
    }
  }

  std::size_t remaining() const { return buf_.size() - pos_; }
  const std::string& what() const { return what_; }

 private:
  std::vector<char> buf_;
  std::size_t pos_ = 0;
  std::string what_;
};

}  // namespace seqlpd::detail
