#include "seqlpd/eval.hpp"

#include <algorithm>
#include <cmath>

#include "seqlpd/error.hpp"
#include "seqlpd/kdtree.hpp"
#include "seqlpd/parallel.hpp"

namespace seqlpd {
namespace {

void check_inputs(const PlaceMap& db, double gt_radius) {
  if (db.empty()) throw Error(ErrorCode::EmptyDatabase, "empty database");
  if (!(gt_radius > 0.0)) throw Error(ErrorCode::InvalidParams, "gt_radius must be > 0");
}

bool retrieves(std::span<const float> query, const PlaceMap& db, const std::vector<std::uint32_t>& positives,
               std::size_t n) {
  for (std::uint32_t idx : top_n(query, db, n)) {
    if (std::binary_search(positives.begin(), positives.end(), idx)) return true;
  }
  return false;
}

}  // namespace

GroundTruth ground_truth(std::span<const Query> queries, const PlaceMap& db, double gt_radius) {
  check_inputs(db, gt_radius);
  GroundTruth gt(queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    for (std::size_t i = 0; i < db.size(); ++i) {
      if (distance(queries[q].pose.position(), db[i].pose.position()) <= gt_radius) {
        gt[q].push_back(static_cast<std::uint32_t>(i));
      }
    }
  }
  return gt;
}

std::vector<std::uint32_t> top_n(std::span<const float> query, const PlaceMap& db, std::size_t n) {
  if (query.size() != db.dim()) throw Error(ErrorCode::DimensionError, "query dimension mismatch");
  NeighborSet best(std::min(n, db.size()));
  for (std::size_t i = 0; i < db.size(); ++i) {
    best.offer({squared_distance(query.data(), db.descriptor(i).data(), db.dim()), static_cast<std::uint32_t>(i)});
  }
  std::vector<std::uint32_t> out;
  for (const Neighbor& nb : best.items()) out.push_back(nb.index);
  return out;
}

RecallResult recall_at_n(std::span<const Query> queries, const PlaceMap& db, double gt_radius, std::size_t n) {
  check_inputs(db, gt_radius);
  if (n < 1) throw Error(ErrorCode::InvalidParams, "N must be >= 1");
  const GroundTruth gt = ground_truth(queries, db, gt_radius);
  std::vector<char> hit(queries.size(), 0);
  parallel_for(queries.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t q = begin; q < end; ++q) {
      if (!gt[q].empty()) hit[q] = retrieves(queries[q].descriptor, db, gt[q], n);
    }
  }, 8);

  RecallResult r;
  r.n = n;
  std::size_t hits = 0;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    if (gt[q].empty()) {
      ++r.skipped;
      continue;
    }
    ++r.evaluated;
    hits += hit[q] ? 1 : 0;
  }
  r.percent = r.evaluated ? 100.0 * static_cast<double>(hits) / static_cast<double>(r.evaluated) : 0.0;
  return r;
}

RecallResult recall_at_one_percent(std::span<const Query> queries, const PlaceMap& db, double gt_radius) {
  check_inputs(db, gt_radius);
  const auto n = static_cast<std::size_t>(std::ceil(0.01 * static_cast<double>(db.size())));
  return recall_at_n(queries, db, gt_radius, std::max<std::size_t>(n, 1));
}

SeqProtocolResult seq_protocol(std::span<const std::vector<Query>> runs, const PlaceMap& db, double gt_radius,
                               std::size_t min_successes) {
  check_inputs(db, gt_radius);
  if (min_successes < 1 || min_successes > kRunLength) {
    throw Error(ErrorCode::InvalidParams, "min_successes must lie in [1, 5]");
  }
  SeqProtocolResult r;
  for (const auto& run : runs) {
    if (run.size() != kRunLength) {
      throw Error(ErrorCode::RunLengthError, "run of " + std::to_string(run.size()) + " frames, expected 5");
    }
    const GroundTruth gt = ground_truth(run, db, gt_radius);
    std::size_t ok = 0;
    for (std::size_t f = 0; f < run.size(); ++f) {
      if (!gt[f].empty() && retrieves(run[f].descriptor, db, gt[f], 1)) ++ok;
    }
    ++r.runs;
    if (ok >= min_successes) ++r.correct;
  }
  r.percent = r.runs ? 100.0 * static_cast<double>(r.correct) / static_cast<double>(r.runs) : 0.0;
  return r;
}

}  // namespace seqlpd
