#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "seqlpd/kdtree.hpp"
#include "seqlpd/net.hpp"
#include "seqlpd/placemap.hpp"

namespace seqlpd {

struct Clustering {
  std::size_t k = 0;
  std::size_t dim = 0;
  std::vector<float> centers;              // k x dim
  std::vector<std::uint32_t> assignment;   // per descriptor
  double distortion = 0.0;                 // sum of squared distances to own center
  std::vector<double> distortion_history;  // one value per Lloyd assignment step

  std::span<const float> center(std::size_t c) const { return {centers.data() + c * dim, dim}; }
};

struct ClusterParams {
  double d_max = 0.0;  // every member must end strictly closer than this to its center
  std::size_t k_max = 20;
  std::size_t iters_max = 100;
  std::uint64_t seed = 0;
  std::size_t restarts = 3;

  void validate(std::size_t n) const;
};

struct ElbowResult {
  std::size_t k = 0;
  std::size_t elbow_k = 0;  // before the distance constraint raised it
  Clustering clustering;
  std::vector<double> curve;  // curve[K-1] = best distortion with K clusters
  bool constraint_satisfied = true;
};

std::vector<Descriptor> map_descriptors(const PlaceMap& map);

// Number of pairwise distinct descriptors.
std::size_t distinct_count(const std::vector<Descriptor>& descriptors);

// K-means++ seeding followed by Lloyd iterations. Requires 1 <= K <= number of
// distinct descriptors.
Clustering kmeanspp(const std::vector<Descriptor>& descriptors, std::size_t k, std::uint64_t seed,
                    std::size_t iters_max = 100);

// Picks K at the largest discrete second difference of the distortion curve,
// then raises K until every member lies within params.d_max of its center or
// K reaches K_max (constraint_satisfied = false).
ElbowResult elbow_select(const std::vector<Descriptor>& descriptors, const ClusterParams& params);

double max_member_distance(const std::vector<Descriptor>& descriptors, const Clustering& clustering);

struct ClusterKeyframe {
  std::uint32_t keyframe = 0;           // entry index of the typical place
  std::vector<std::uint32_t> members;   // ascending entry indices
  KdTree<float> tree;                   // over member descriptors, in member order
};

struct SuperKeyframes {
  std::size_t dim = 0;
  std::vector<float> centers;  // k x dim
  std::vector<ClusterKeyframe> clusters;

  std::size_t size() const { return clusters.size(); }
  std::span<const float> center(std::size_t c) const { return {centers.data() + c * dim, dim}; }
};

SuperKeyframes super_keyframes(const PlaceMap& map, const Clustering& clustering);

// m nearest members of a cluster to `query`, as entry indices.
std::vector<std::uint32_t> nearest_in_cluster(const SuperKeyframes& skf, std::size_t cluster_id,
                                              std::span<const float> query, std::size_t m);

struct StoredClusters {
  SuperKeyframes skf;
  float d_max = 0.0f;
};

void save_clusters(const SuperKeyframes& skf, float d_max, const std::filesystem::path& path);
// Member and keyframe indices refer to `map`; KD-trees are rebuilt from it.
StoredClusters load_clusters(const std::filesystem::path& path, const PlaceMap& map);

}  // namespace seqlpd
