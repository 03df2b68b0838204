#include "seqlpd/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "binio.hpp"
#include "seqlpd/error.hpp"
#include "seqlpd/parallel.hpp"

namespace seqlpd {
namespace {

constexpr std::uint32_t kClusterVersion = 1;

struct Assignment {
  std::vector<std::uint32_t> cluster;
  std::vector<double> dist_sq;
  double distortion = 0.0;
};

Assignment assign_nearest(const std::vector<Descriptor>& x, const std::vector<float>& centers,
                          std::size_t k, std::size_t dim) {
  Assignment a;
  a.cluster.resize(x.size());
  a.dist_sq.resize(x.size());
  parallel_for(x.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      double best = std::numeric_limits<double>::infinity();
      std::uint32_t best_c = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double d = squared_distance(x[i].data(), centers.data() + c * dim, dim);
        if (d < best) {
          best = d;
          best_c = static_cast<std::uint32_t>(c);
        }
      }
      a.cluster[i] = best_c;
      a.dist_sq[i] = best;
    }
  });
  for (double d : a.dist_sq) a.distortion += d;  // fixed order
  return a;
}

std::vector<std::size_t> cluster_sizes(const std::vector<std::uint32_t>& cluster, std::size_t k) {
  std::vector<std::size_t> sizes(k, 0);
  for (std::uint32_t c : cluster) ++sizes[c];
  return sizes;
}

// Reseeds each empty cluster at the point farthest from its own center.
void repair_empty(const std::vector<Descriptor>& x, std::vector<float>& centers, std::size_t k,
                  std::size_t dim, Assignment& a) {
  for (std::size_t round = 0; round <= k; ++round) {
    const auto sizes = cluster_sizes(a.cluster, k);
    const auto empty = std::find(sizes.begin(), sizes.end(), std::size_t{0});
    if (empty == sizes.end()) return;
    std::size_t far = x.size();
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (sizes[a.cluster[i]] < 2) continue;
      if (far == x.size() || a.dist_sq[i] > a.dist_sq[far]) far = i;
    }
    if (far == x.size()) break;
    const std::size_t c = static_cast<std::size_t>(empty - sizes.begin());
    std::copy(x[far].begin(), x[far].end(), centers.begin() + static_cast<std::ptrdiff_t>(c * dim));
    a = assign_nearest(x, centers, k, dim);
  }
  throw Error(ErrorCode::InvalidK, "could not populate every cluster");
}

std::vector<float> cluster_means(const std::vector<Descriptor>& x, const std::vector<std::uint32_t>& cluster,
                                 std::size_t k, std::size_t dim) {
  std::vector<double> sum(k * dim, 0.0);
  std::vector<std::size_t> count(k, 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::size_t c = cluster[i];
    ++count[c];
    for (std::size_t d = 0; d < dim; ++d) sum[c * dim + d] += x[i][d];
  }
  std::vector<float> centers(k * dim);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t d = 0; d < dim; ++d) {
      centers[c * dim + d] = static_cast<float>(sum[c * dim + d] / static_cast<double>(count[c]));
    }
  }
  return centers;
}

std::uint64_t restart_seed(std::uint64_t seed, std::size_t k, std::size_t restart) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(restart)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

std::size_t check_dim(const std::vector<Descriptor>& x) {
  const std::size_t dim = x.front().size();
  for (const auto& d : x) {
    if (d.size() != dim) throw Error(ErrorCode::DimensionError, "descriptors of mixed dimension");
  }
  return dim;
}

}  // namespace

void ClusterParams::validate(std::size_t n) const {
  if (!(d_max > 0.0)) throw Error(ErrorCode::InvalidParams, "D must be > 0");
  if (k_max < 1 || k_max > n) {
    throw Error(ErrorCode::InvalidParams,
                "K_max must lie in [1, " + std::to_string(n) + "], got " + std::to_string(k_max));
  }
  if (iters_max < 1) throw Error(ErrorCode::InvalidParams, "iters_max must be >= 1");
  if (restarts < 1) throw Error(ErrorCode::InvalidParams, "restarts must be >= 1");
}

std::vector<Descriptor> map_descriptors(const PlaceMap& map) {
  std::vector<Descriptor> out;
  out.reserve(map.size());
  for (const PlaceEntry& e : map.entries()) out.push_back(e.descriptor);
  return out;
}

std::size_t distinct_count(const std::vector<Descriptor>& descriptors) {
  std::vector<const Descriptor*> sorted;
  sorted.reserve(descriptors.size());
  for (const auto& d : descriptors) sorted.push_back(&d);
  std::sort(sorted.begin(), sorted.end(), [](const Descriptor* a, const Descriptor* b) { return *a < *b; });
  std::size_t n = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i == 0 || *sorted[i] != *sorted[i - 1]) ++n;
  }
  return n;
}

Clustering kmeanspp(const std::vector<Descriptor>& x, std::size_t k, std::uint64_t seed, std::size_t iters_max) {
  if (x.empty()) throw Error(ErrorCode::InvalidK, "no descriptors to cluster");
  if (k < 1 || k > x.size()) {
    throw Error(ErrorCode::InvalidK, "K=" + std::to_string(k) + " outside [1, " + std::to_string(x.size()) + "]");
  }
  const std::size_t distinct = distinct_count(x);
  if (k > distinct) {
    throw Error(ErrorCode::InvalidK,
                "K=" + std::to_string(k) + " exceeds " + std::to_string(distinct) + " distinct descriptors");
  }
  const std::size_t n = x.size(), dim = check_dim(x);

  std::mt19937_64 rng(seed);
  std::vector<float> centers;
  centers.reserve(k * dim);
  const std::size_t first = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  centers.insert(centers.end(), x[first].begin(), x[first].end());
  std::vector<double> min_d2(n);
  for (std::size_t i = 0; i < n; ++i) min_d2[i] = squared_distance(x[i].data(), x[first].data(), dim);
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double d : min_d2) total += d;
    const double r = std::uniform_real_distribution<double>(0.0, total)(rng);
    std::size_t pick = n;
    double cum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (min_d2[i] <= 0.0) continue;
      cum += min_d2[i];
      pick = i;
      if (cum > r) break;
    }
    centers.insert(centers.end(), x[pick].begin(), x[pick].end());
    for (std::size_t i = 0; i < n; ++i) {
      min_d2[i] = std::min(min_d2[i], squared_distance(x[i].data(), x[pick].data(), dim));
    }
  }

  Clustering best{k, dim, {}, {}, 0.0, {}};
  bool have_prev = false;
  for (std::size_t it = 0; it < iters_max; ++it) {
    Assignment a = assign_nearest(x, centers, k, dim);
    repair_empty(x, centers, k, dim, a);
    // Float-rounded means can only lose to the previous step by round-off;
    // stop there rather than accept a worse state.
    if (have_prev && a.distortion > best.distortion) break;
    const bool converged = have_prev && a.cluster == best.assignment;
    best.centers = centers;
    best.assignment = std::move(a.cluster);
    best.distortion = a.distortion;
    best.distortion_history.push_back(a.distortion);
    have_prev = true;
    if (converged) break;
    centers = cluster_means(x, best.assignment, k, dim);
  }
  return best;
}

double max_member_distance(const std::vector<Descriptor>& x, const Clustering& cl) {
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = std::sqrt(squared_distance(x[i].data(), cl.centers.data() + cl.assignment[i] * cl.dim, cl.dim));
    worst = std::max(worst, d);
  }
  return worst;
}

ElbowResult elbow_select(const std::vector<Descriptor>& x, const ClusterParams& params) {
  if (x.size() < 2) throw Error(ErrorCode::InvalidParams, "elbow selection needs at least 2 descriptors");
  params.validate(x.size());
  const std::size_t k_max = std::min(params.k_max, distinct_count(x));

  std::vector<Clustering> per_k;
  ElbowResult result;
  for (std::size_t k = 1; k <= k_max; ++k) {
    Clustering best;
    for (std::size_t r = 0; r < params.restarts; ++r) {
      Clustering c = kmeanspp(x, k, restart_seed(params.seed, k, r), params.iters_max);
      if (r == 0 || c.distortion < best.distortion) best = std::move(c);
    }
    result.curve.push_back(best.distortion);
    per_k.push_back(std::move(best));
  }

  std::size_t k = 1;
  if (k_max >= 3) {
    double best_curv = -std::numeric_limits<double>::infinity();
    for (std::size_t kk = 2; kk + 1 <= k_max; ++kk) {
      const double curv = result.curve[kk - 2] - 2.0 * result.curve[kk - 1] + result.curve[kk];
      if (curv > best_curv) {
        best_curv = curv;
        k = kk;
      }
    }
  }
  result.elbow_k = k;
  while (max_member_distance(x, per_k[k - 1]) >= params.d_max && k < k_max) ++k;
  result.k = k;
  result.constraint_satisfied = max_member_distance(x, per_k[k - 1]) < params.d_max;
  result.clustering = std::move(per_k[k - 1]);
  return result;
}

SuperKeyframes super_keyframes(const PlaceMap& map, const Clustering& cl) {
  if (cl.assignment.size() != map.size()) {
    throw Error(ErrorCode::InvalidParams, "clustering does not cover the map");
  }
  SuperKeyframes skf;
  skf.dim = cl.dim;
  skf.centers = cl.centers;
  skf.clusters.resize(cl.k);
  for (std::size_t i = 0; i < map.size(); ++i) {
    skf.clusters[cl.assignment[i]].members.push_back(static_cast<std::uint32_t>(i));
  }
  for (std::size_t c = 0; c < cl.k; ++c) {
    ClusterKeyframe& ck = skf.clusters[c];
    if (ck.members.empty()) throw Error(ErrorCode::InvalidParams, "cluster " + std::to_string(c) + " is empty");
    double best = std::numeric_limits<double>::infinity();
    std::vector<float> coords;
    coords.reserve(ck.members.size() * cl.dim);
    for (std::uint32_t m : ck.members) {
      const auto d = map.descriptor(m);
      const double dist = squared_distance(d.data(), skf.center(c).data(), cl.dim);
      if (dist < best) {
        best = dist;
        ck.keyframe = m;
      }
      coords.insert(coords.end(), d.begin(), d.end());
    }
    ck.tree = KdTree<float>(std::move(coords), cl.dim);
  }
  return skf;
}

std::vector<std::uint32_t> nearest_in_cluster(const SuperKeyframes& skf, std::size_t cluster_id,
                                              std::span<const float> query, std::size_t m) {
  if (cluster_id >= skf.size()) {
    throw Error(ErrorCode::InvalidCluster, "cluster " + std::to_string(cluster_id) + " of " + std::to_string(skf.size()));
  }
  if (query.size() != skf.dim) throw Error(ErrorCode::DimensionError, "query dimension mismatch");
  if (m < 1) throw Error(ErrorCode::InvalidParams, "m must be >= 1");
  const ClusterKeyframe& ck = skf.clusters[cluster_id];
  std::vector<std::uint32_t> out;
  for (const Neighbor& nb : ck.tree.knn(query, m)) out.push_back(ck.members[nb.index]);
  return out;
}

void save_clusters(const SuperKeyframes& skf, float d_max, const std::filesystem::path& path) {
  if (skf.dim != kDescriptorDim) {
    throw Error(ErrorCode::DimensionError, "LPDC stores " + std::to_string(kDescriptorDim) + "-d centers");
  }
  detail::ByteWriter w;
  w.put_magic("LPDC");
  w.put<std::uint32_t>(kClusterVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(skf.size()));
  w.put<float>(d_max);
  for (const ClusterKeyframe& ck : skf.clusters) {
    w.put<std::uint32_t>(ck.keyframe);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(ck.members.size()));
    w.put_bytes(ck.members.data(), ck.members.size() * sizeof(std::uint32_t));
  }
  w.put_bytes(skf.centers.data(), skf.centers.size() * sizeof(float));
  w.write_to(path);
}

StoredClusters load_clusters(const std::filesystem::path& path, const PlaceMap& map) {
  auto r = detail::ByteReader::from_file(path);
  r.expect_magic("LPDC");
  r.expect_version(kClusterVersion);
  const auto k = r.get<std::uint32_t>();
  StoredClusters out;
  out.d_max = r.get<float>();
  if (k == 0) throw Error(ErrorCode::FormatError, r.what() + ": zero clusters");
  if (map.dim() != kDescriptorDim) throw Error(ErrorCode::DimensionError, "map descriptors are not 256-d");

  SuperKeyframes& skf = out.skf;
  skf.dim = kDescriptorDim;
  skf.clusters.resize(k);
  for (ClusterKeyframe& ck : skf.clusters) {
    ck.keyframe = r.get<std::uint32_t>();
    const auto count = r.get<std::uint32_t>();
    if (count > r.remaining() / sizeof(std::uint32_t)) throw Error(ErrorCode::FormatError, r.what() + ": truncated");
    ck.members.resize(count);
    r.get_bytes(ck.members.data(), std::size_t{count} * sizeof(std::uint32_t));
    if (count == 0 || !std::is_sorted(ck.members.begin(), ck.members.end()) ||
        !std::binary_search(ck.members.begin(), ck.members.end(), ck.keyframe) ||
        ck.members.back() >= map.size()) {
      throw Error(ErrorCode::FormatError, r.what() + ": inconsistent cluster membership");
    }
  }
  skf.centers.resize(std::size_t{k} * kDescriptorDim);
  r.get_bytes(skf.centers.data(), skf.centers.size() * sizeof(float));
  r.expect_end();

  for (ClusterKeyframe& ck : skf.clusters) {
    std::vector<float> coords;
    coords.reserve(ck.members.size() * kDescriptorDim);
    for (std::uint32_t m : ck.members) {
      const auto d = map.descriptor(m);
      coords.insert(coords.end(), d.begin(), d.end());
    }
    ck.tree = KdTree<float>(std::move(coords), kDescriptorDim);
  }
  return out;
}

}  // namespace seqlpd
