#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "seqlpd/cluster.hpp"
#include "seqlpd/net.hpp"
#include "seqlpd/seqmatch.hpp"

namespace seqlpd {

// Every pipeline tunable. Files use "key = value" lines; '#' starts a comment.
struct Config {
  std::size_t k_local = kDefaultLocalK;
  std::size_t k_graph = 20;
  std::size_t n_sub = kDefaultSubmapPoints;
  std::size_t descriptor_dim = kDescriptorDim;
  std::size_t vlad_clusters = 64;
  double alpha = 0.5;
  double beta = 0.2;
  std::size_t p_pos = 2;
  std::size_t p_neg = 18;
  std::size_t window = 10;
  double v_min = 0.8;
  double v_max = 1.2;
  double v_step = 0.1;
  double accept_ratio = 0.8;
  std::optional<std::size_t> exclusion;
  bool reverse = false;
  std::optional<double> d_max;      // key "D"; required by clustering
  std::optional<std::size_t> k_max;
  std::size_t iters_max = 100;
  std::optional<double> gt_radius;  // required by evaluation
  std::size_t min_successes = 3;
  double trajectory_len = kDefaultTrajectoryLength;
  std::uint64_t seed = 0;

  // Throws InvalidParams for unknown keys or unparsable values.
  void set(const std::string& key, const std::string& value);
  void load_file(const std::filesystem::path& path);
  void validate() const;

  NetConfig net() const;
  MatchParams match() const;
  ClusterParams cluster(std::size_t entries) const;
};

}  // namespace seqlpd
