#include "seqlpd/placemap.hpp"

#include <cmath>

#include "binio.hpp"
#include "seqlpd/error.hpp"
#include "seqlpd/kdtree.hpp"

namespace seqlpd {
namespace {
constexpr std::uint32_t kMapVersion = 1;
}  // namespace

void PlaceMap::insert(PlaceEntry entry) {
  if (!entries_.empty() && entry.frame_id <= entries_.back().frame_id) {
    throw Error(ErrorCode::OrderError, "frame " + std::to_string(entry.frame_id) + " after frame " +
                                           std::to_string(entries_.back().frame_id));
  }
  if (entry.descriptor.size() != dim_) {
    throw Error(ErrorCode::DimensionError, "descriptor has " + std::to_string(entry.descriptor.size()) +
                                               " dims, map expects " + std::to_string(dim_));
  }
  double norm_sq = 0.0;
  for (float v : entry.descriptor) norm_sq += static_cast<double>(v) * v;
  const double norm = std::sqrt(norm_sq);
  if (!(std::abs(norm - 1.0) <= kInsertNormTolerance)) {
    throw Error(ErrorCode::NormError, "frame " + std::to_string(entry.frame_id) +
                                          " descriptor norm " + std::to_string(norm));
  }
  entry.pose.frame_id = entry.frame_id;
  entries_.push_back(std::move(entry));
}

PlaceMap PlaceMap::prefix(std::size_t count) const {
  PlaceMap out(dim_);
  out.entries_.assign(entries_.begin(), entries_.begin() + static_cast<std::ptrdiff_t>(std::min(count, size())));
  return out;
}

double l2(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::DimensionError,
                "l2 of " + std::to_string(a.size()) + "-d and " + std::to_string(b.size()) + "-d vectors");
  }
  return std::sqrt(squared_distance(a.data(), b.data(), a.size()));
}

void save_map(const PlaceMap& map, const std::filesystem::path& path) {
  detail::ByteWriter w;
  w.put_magic("LPDM");
  w.put<std::uint32_t>(kMapVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(map.dim()));
  w.put<std::uint64_t>(map.size());
  for (const PlaceEntry& e : map.entries()) {
    w.put<std::uint64_t>(e.frame_id);
    w.put<double>(e.pose.x);
    w.put<double>(e.pose.y);
    w.put<double>(e.pose.z);
    w.put_bytes(e.descriptor.data(), e.descriptor.size() * sizeof(float));
  }
  w.write_to(path);
}

PlaceMap load_map(const std::filesystem::path& path) {
  auto r = detail::ByteReader::from_file(path);
  r.expect_magic("LPDM");
  r.expect_version(kMapVersion);
  const auto dim = r.get<std::uint32_t>();
  const auto count = r.get<std::uint64_t>();
  if (dim == 0) throw Error(ErrorCode::FormatError, r.what() + ": zero descriptor dimension");
  const std::size_t entry_bytes = 8 + 3 * 8 + std::size_t{dim} * 4;
  if (count > r.remaining() / entry_bytes) throw Error(ErrorCode::FormatError, r.what() + ": truncated");

  // Loaded entries go through the same ordering and norm checks as inserts.
  PlaceMap map(dim);
  std::vector<PlaceEntry> entries(count);
  for (PlaceEntry& e : entries) {
    e.frame_id = r.get<std::uint64_t>();
    e.pose.frame_id = e.frame_id;
    e.pose.x = r.get<double>();
    e.pose.y = r.get<double>();
    e.pose.z = r.get<double>();
    e.descriptor.resize(dim);
    r.get_bytes(e.descriptor.data(), std::size_t{dim} * sizeof(float));
  }
  r.expect_end();
  for (PlaceEntry& e : entries) {
    try {
      map.insert(std::move(e));
    } catch (const Error& err) {
      throw Error(ErrorCode::FormatError, r.what() + ": " + err.what());
    }
  }
  return map;
}

}  // namespace seqlpd
