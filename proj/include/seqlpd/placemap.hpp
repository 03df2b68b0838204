#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "seqlpd/cloud.hpp"
#include "seqlpd/net.hpp"

namespace seqlpd {

inline constexpr double kInsertNormTolerance = 1e-4;

struct PlaceEntry {
  std::uint64_t frame_id = 0;
  Pose pose;
  Descriptor descriptor;

  friend bool operator==(const PlaceEntry&, const PlaceEntry&) = default;
};

// Append-only place descriptor map ordered by frame id.
class PlaceMap {
 public:
  PlaceMap() = default;
  explicit PlaceMap(std::size_t dim) : dim_(dim) {}

  // Throws OrderError unless frame_id exceeds the last stored id, NormError
  // unless the descriptor is unit-norm within kInsertNormTolerance.
  void insert(PlaceEntry entry);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t dim() const { return dim_; }
  const PlaceEntry& operator[](std::size_t i) const { return entries_[i]; }
  const std::vector<PlaceEntry>& entries() const { return entries_; }
  std::span<const float> descriptor(std::size_t i) const { return entries_[i].descriptor; }

  // First `count` entries as a new map.
  PlaceMap prefix(std::size_t count) const;

  friend bool operator==(const PlaceMap&, const PlaceMap&) = default;

 private:
  std::size_t dim_ = kDescriptorDim;
  std::vector<PlaceEntry> entries_;
};

double l2(std::span<const float> a, std::span<const float> b);

void save_map(const PlaceMap& map, const std::filesystem::path& path);
PlaceMap load_map(const std::filesystem::path& path);

}  // namespace seqlpd
