#include "seqlpd/pipeline.hpp"

#include "seqlpd/error.hpp"
#include "seqlpd/features.hpp"

namespace seqlpd {

std::uint64_t submap_seed(std::uint64_t seed, std::uint64_t frame_id) {
  return seed * 0x9e3779b97f4a7c15ull + frame_id;
}

FrameDescriber::FrameDescriber(const Config& config) : cfg_(config) {}

FrameDescriber::FrameDescriber(const Config& config, WeightSet weights) : cfg_(config) {
  net_ = infer_config(weights, config.net());
  weights.validate(net_);
  weights_ = std::move(weights);
}

PlaceEntry FrameDescriber::push(PointCloud frame, const std::optional<Pose>& pose) {
  PlaceEntry entry;
  entry.frame_id = pose ? pose->frame_id : next_index_;
  ++next_index_;
  frame.frame_id = entry.frame_id;
  if (pose) {
    entry.pose = *pose;
    window_.push_back(std::move(frame));
    window_poses_.push_back(*pose);
    frame = accumulate_submap(window_, window_poses_, cfg_.trajectory_len);
    // Keep only the frames the next submap can still reach.
    double path = 0.0;
    std::size_t keep = window_poses_.size() - 1;
    for (std::size_t j = window_poses_.size() - 1; j > 0; --j) {
      path += distance(window_poses_[j].position(), window_poses_[j - 1].position());
      if (path > cfg_.trajectory_len) break;
      keep = j - 1;
    }
    window_.erase(window_.begin(), window_.begin() + static_cast<std::ptrdiff_t>(keep));
    window_poses_.erase(window_poses_.begin(), window_poses_.begin() + static_cast<std::ptrdiff_t>(keep));
  }
  last_points_ = frame.points.size();
  const Submap sub = normalize_submap(frame, cfg_.n_sub, submap_seed(cfg_.seed, entry.frame_id));
  const LocalFeatures lf = local_features(sub, cfg_.k_local);
  entry.descriptor = weights_ ? describe(sub, lf, *weights_, net_) : baseline_descriptor(sub, lf);
  return entry;
}

PlaceMap describe_sequence(FrameDescriber& describer, const std::vector<PointCloud>& frames,
                           const std::vector<Pose>& poses) {
  if (!poses.empty() && poses.size() != frames.size()) {
    throw Error(ErrorCode::LengthMismatch, "frames and poses differ in length");
  }
  PlaceMap map;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    map.insert(describer.push(frames[i], poses.empty() ? std::nullopt : std::optional<Pose>(poses[i])));
  }
  return map;
}

}  // namespace seqlpd
