#pragma once

// Streaming frame-to-descriptor stage: optional submap accumulation over the
// trailing trajectory, subsampling, local features and the place descriptor.

#include <cstdint>
#include <optional>
#include <vector>

#include "seqlpd/cloud.hpp"
#include "seqlpd/config.hpp"
#include "seqlpd/net.hpp"
#include "seqlpd/placemap.hpp"

namespace seqlpd {

// Per-frame subsampling seed.
std::uint64_t submap_seed(std::uint64_t seed, std::uint64_t frame_id);

class FrameDescriber {
 public:
  // Histogram baseline descriptor.
  explicit FrameDescriber(const Config& config);
  // Network descriptor; the network shape is inferred from the weights.
  FrameDescriber(const Config& config, WeightSet weights);

  // Without a pose the frame is described on its own and its index becomes
  // the frame id. With poses, the frame joins the trailing window first.
  PlaceEntry push(PointCloud frame, const std::optional<Pose>& pose = std::nullopt);

  std::size_t last_submap_points() const { return last_points_; }

 private:
  Config cfg_;
  std::optional<WeightSet> weights_;
  NetConfig net_;
  std::vector<PointCloud> window_;
  std::vector<Pose> window_poses_;
  std::uint64_t next_index_ = 0;
  std::size_t last_points_ = 0;
};

// All frames in order, one entry each.
PlaceMap describe_sequence(FrameDescriber& describer, const std::vector<PointCloud>& frames,
                           const std::vector<Pose>& poses);

}  // namespace seqlpd
