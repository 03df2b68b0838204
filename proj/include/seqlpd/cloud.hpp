#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "seqlpd/kdtree.hpp"

namespace seqlpd {

struct Point3 {
  double x = 0.0, y = 0.0, z = 0.0;

  friend bool operator==(const Point3&, const Point3&) = default;
  Point3& operator+=(const Point3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  friend Point3 operator+(Point3 a, const Point3& b) { return a += b; }
  friend Point3 operator-(const Point3& a, const Point3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
};

double distance(const Point3& a, const Point3& b);

struct PointCloud {
  std::vector<Point3> points;
  std::uint64_t frame_id = 0;
};

// Translation-only sensor pose.
struct Pose {
  double x = 0.0, y = 0.0, z = 0.0;
  std::uint64_t frame_id = 0;

  Point3 position() const { return {x, y, z}; }
  friend bool operator==(const Pose&, const Pose&) = default;
};

inline constexpr std::size_t kDefaultSubmapPoints = 4096;
inline constexpr double kDefaultTrajectoryLength = 20.0;

// Fixed-size cloud centered on its centroid and scaled into [-1, 1].
struct Submap {
  std::vector<Point3> points;
  double scale = 1.0;
  Point3 centroid;
};

// KITTI velodyne records: 4 little-endian float32 (x, y, z, intensity).
PointCloud load_kitti_bin(const std::filesystem::path& path);
void save_kitti_bin(const PointCloud& cloud, const std::filesystem::path& path);

// "x,y,z" lines; a first line whose first field is not numeric is a header.
PointCloud load_csv(const std::filesystem::path& path);

// Merges the trailing frames whose poses lie within `trajectory_len` of path
// length ending at the last pose. Frame points are in their own sensor frame;
// the result is expressed in the last frame's sensor frame.
PointCloud accumulate_submap(const std::vector<PointCloud>& frames, const std::vector<Pose>& poses,
                             double trajectory_len = kDefaultTrajectoryLength);

Submap normalize_submap(const PointCloud& cloud, std::size_t n_sub = kDefaultSubmapPoints,
                        std::uint64_t seed = 0);

class SpatialIndex {
 public:
  explicit SpatialIndex(const std::vector<Point3>& points);

  std::size_t size() const { return tree_.size(); }

  // min(k, size()) indices by ascending distance, ties by lower index.
  std::vector<std::uint32_t> knn(const Point3& query, std::size_t k) const;
  std::vector<Neighbor> knn_with_distances(const Point3& query, std::size_t k) const;

 private:
  KdTree<double> tree_;
};

std::vector<std::uint32_t> knn(const SpatialIndex& index, const Point3& query, std::size_t k);

}  // namespace seqlpd
