#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "seqlpd/cloud.hpp"
#include "seqlpd/net.hpp"
#include "seqlpd/placemap.hpp"

namespace seqlpd {

struct Query {
  Descriptor descriptor;
  Pose pose;
};

// Per query: database entries within gt_radius of its pose.
using GroundTruth = std::vector<std::vector<std::uint32_t>>;

GroundTruth ground_truth(std::span<const Query> queries, const PlaceMap& db, double gt_radius);

// Indices of the n nearest database descriptors (L2, ties by lower index).
std::vector<std::uint32_t> top_n(std::span<const float> query, const PlaceMap& db, std::size_t n);

struct RecallResult {
  double percent = 0.0;
  std::size_t n = 0;
  std::size_t evaluated = 0;  // queries with at least one true positive
  std::size_t skipped = 0;    // queries without any
};

RecallResult recall_at_n(std::span<const Query> queries, const PlaceMap& db, double gt_radius, std::size_t n);

// Recall@1%: n = ceil(0.01 * |db|).
RecallResult recall_at_one_percent(std::span<const Query> queries, const PlaceMap& db, double gt_radius);

inline constexpr std::size_t kRunLength = 5;

struct SeqProtocolResult {
  double percent = 0.0;
  std::size_t runs = 0;
  std::size_t correct = 0;
};

// A run of 5 consecutive frames is a correct matching when at least
// `min_successes` of its frames succeed at Recall@1.
SeqProtocolResult seq_protocol(std::span<const std::vector<Query>> runs, const PlaceMap& db, double gt_radius,
                               std::size_t min_successes = 3);

}  // namespace seqlpd
