#pragma once

// Ground-truth generators for desk-scale runs: descriptor sequences with known
// revisits, 3-blob descriptor sets, and point-cloud worlds driven along a route.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "seqlpd/cloud.hpp"
#include "seqlpd/net.hpp"
#include "seqlpd/placemap.hpp"

namespace seqlpd::synth {

Descriptor normalized(Descriptor d);

// Unit vector drawn uniformly from the sphere spanned by dims [first, first + count).
Descriptor random_unit(std::size_t dim, std::size_t first, std::size_t count, std::mt19937_64& rng);

struct BlobSet {
  std::vector<Descriptor> descriptors;
  std::vector<std::uint32_t> labels;
};

// `blobs` Gaussian blobs (per-component sigma) around centers e_b / sqrt(2) * separation,
// which are pairwise `separation` apart.
BlobSet blobs(std::size_t blobs, std::size_t per_blob, double sigma, double separation, std::size_t dim,
              std::uint64_t seed);

struct DescriptorRoute {
  std::vector<Descriptor> places;          // one unit descriptor per place along the route
  std::vector<std::uint32_t> segment;      // segment id per place
};

struct RouteOptions {
  std::size_t places = 200;
  std::size_t segment_min = 15;
  std::size_t segment_max = 40;
  double segment_weight = 1.0;  // shared per-segment component
  double place_weight = 0.6;    // per-place component
  std::size_t dim = kDescriptorDim;
  std::size_t subspace_first = 0;  // descriptors live in dims [first, first + count)
  std::size_t subspace_count = kDescriptorDim;
};

DescriptorRoute descriptor_route(const RouteOptions& options, std::uint64_t seed);

// Re-observation of a place: additive per-component Gaussian noise, renormalized.
Descriptor observe(const Descriptor& place, double sigma, std::mt19937_64& rng);

// Map with one entry per descriptor, frame ids first_id.., poses along x spaced `step` apart.
PlaceMap make_map(const std::vector<Descriptor>& descriptors, std::uint64_t first_id = 0, double step = 1.0);

enum class Scenario { Loop, Blobs, Line };

Scenario parse_scenario(const std::string& name);
std::string scenario_name(Scenario s);

struct SceneOptions {
  std::size_t frames = 60;  // frames per lap (loop), per pass (line), total (blobs)
  double noise = 0.0;       // per-coordinate Gaussian noise on every point, meters
  double step = 4.0;        // meters between consecutive poses
  double sensor_range = 20.0;
  std::size_t points_per_frame = 6000;
};

struct SceneCorpus {
  std::vector<PointCloud> frames;  // sensor-frame points
  std::vector<Pose> poses;
  // (query frame index, reference frame index) revisit pairs; blob labels for Blobs.
  std::vector<std::pair<std::size_t, std::size_t>> ground_truth;
  std::vector<std::uint32_t> labels;
};

SceneCorpus scene_corpus(Scenario scenario, const SceneOptions& options, std::uint64_t seed);

// Frames as 000000.bin.., poses.csv (frame_id,x,y,z), ground_truth.csv.
void write_corpus(const SceneCorpus& corpus, Scenario scenario, const std::filesystem::path& dir);

}  // namespace seqlpd::synth
