#include "seqlpd/cloud.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "seqlpd/error.hpp"

namespace seqlpd {
namespace {

static_assert(std::endian::native == std::endian::little, "little-endian host assumed");

std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::IoError, "read failed: " + path.string());
  return bytes;
}

bool parse_double(std::string_view s, double& out) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      fields.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return fields;
}

}  // namespace

double distance(const Point3& a, const Point3& b) {
  const Point3 d = a - b;
  return std::sqrt(d.x * d.x + d.y * d.y + d.z * d.z);
}

PointCloud load_kitti_bin(const std::filesystem::path& path) {
  const std::vector<char> bytes = read_file(path);
  if (bytes.size() % 16 != 0) {
    throw Error(ErrorCode::FormatError,
                path.string() + ": length " + std::to_string(bytes.size()) + " is not a multiple of 16");
  }
  PointCloud cloud;
  cloud.points.reserve(bytes.size() / 16);
  for (std::size_t off = 0; off < bytes.size(); off += 16) {
    std::array<float, 4> rec;
    std::memcpy(rec.data(), bytes.data() + off, 16);
    for (float v : rec) {
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::FormatError,
                    path.string() + ": non-finite value in record " + std::to_string(off / 16));
      }
    }
    cloud.points.push_back({rec[0], rec[1], rec[2]});
  }
  return cloud;
}

void save_kitti_bin(const PointCloud& cloud, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  for (const Point3& p : cloud.points) {
    const std::array<float, 4> rec = {static_cast<float>(p.x), static_cast<float>(p.y),
                                      static_cast<float>(p.z), 0.0f};
    out.write(reinterpret_cast<const char*>(rec.data()), 16);
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

PointCloud load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  PointCloud cloud;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_commas(line);
    std::array<double, 3> xyz{};
    bool ok = fields.size() == 3;
    for (std::size_t i = 0; ok && i < 3; ++i) ok = parse_double(fields[i], xyz[i]);
    if (!ok) {
      double first = 0.0;
      if (line_no == 1 && !fields.empty() && !parse_double(fields[0], first)) continue;  // header
      throw Error(ErrorCode::FormatError,
                  path.string() + ": malformed line " + std::to_string(line_no));
    }
    cloud.points.push_back({xyz[0], xyz[1], xyz[2]});
  }
  return cloud;
}

PointCloud accumulate_submap(const std::vector<PointCloud>& frames, const std::vector<Pose>& poses,
                             double trajectory_len) {
  if (frames.size() != poses.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(frames.size()) + " frames vs " +
                                               std::to_string(poses.size()) + " poses");
  }
  if (frames.empty()) throw Error(ErrorCode::EmptyInput, "no frames to accumulate");
  if (!(trajectory_len > 0.0)) throw Error(ErrorCode::InvalidParams, "trajectory_len must be > 0");

  const std::size_t last = frames.size() - 1;
  std::size_t first = last;
  double path = 0.0;
  while (first > 0) {
    path += distance(poses[first].position(), poses[first - 1].position());
    if (path > trajectory_len) break;
    --first;
  }

  PointCloud out;
  out.frame_id = frames[last].frame_id;
  const Point3 origin = poses[last].position();
  for (std::size_t f = first; f <= last; ++f) {
    const Point3 shift = poses[f].position() - origin;
    for (const Point3& p : frames[f].points) out.points.push_back(p + shift);
  }
  return out;
}

Submap normalize_submap(const PointCloud& cloud, std::size_t n_sub, std::uint64_t seed) {
  if (cloud.points.empty()) throw Error(ErrorCode::EmptyInput, "cannot normalize an empty cloud");
  if (n_sub == 0) throw Error(ErrorCode::InvalidParams, "n_sub must be >= 1");

  const std::size_t n = cloud.points.size();
  std::vector<std::size_t> pick;
  if (n == n_sub) {
    pick.resize(n);
    std::iota(pick.begin(), pick.end(), std::size_t{0});
  } else {
    std::mt19937_64 rng(seed);
    if (n > n_sub) {
      // Partial Fisher-Yates, then restore storage order of the kept points.
      std::vector<std::size_t> idx(n);
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      for (std::size_t i = 0; i < n_sub; ++i) {
        std::uniform_int_distribution<std::size_t> d(i, n - 1);
        std::swap(idx[i], idx[d(rng)]);
      }
      pick.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_sub));
      std::sort(pick.begin(), pick.end());
    } else {
      pick.resize(n);
      std::iota(pick.begin(), pick.end(), std::size_t{0});
      std::uniform_int_distribution<std::size_t> d(0, n - 1);
      while (pick.size() < n_sub) pick.push_back(d(rng));
    }
  }

  Submap sub;
  sub.points.reserve(n_sub);
  Point3 sum;
  for (std::size_t i : pick) {
    sub.points.push_back(cloud.points[i]);
    sum += cloud.points[i];
  }
  const double inv = 1.0 / static_cast<double>(n_sub);
  sub.centroid = {sum.x * inv, sum.y * inv, sum.z * inv};

  double max_abs = 0.0;
  for (Point3& p : sub.points) {
    p = p - sub.centroid;
    max_abs = std::max({max_abs, std::abs(p.x), std::abs(p.y), std::abs(p.z)});
  }
  sub.scale = max_abs > 0.0 ? max_abs : 1.0;
  for (Point3& p : sub.points) {
    p = {p.x / sub.scale, p.y / sub.scale, p.z / sub.scale};
  }
  return sub;
}

SpatialIndex::SpatialIndex(const std::vector<Point3>& points) {
  std::vector<double> coords;
  coords.reserve(points.size() * 3);
  for (const Point3& p : points) {
    coords.insert(coords.end(), {p.x, p.y, p.z});
  }
  tree_ = KdTree<double>(std::move(coords), 3);
}

std::vector<Neighbor> SpatialIndex::knn_with_distances(const Point3& query, std::size_t k) const {
  if (tree_.size() == 0) throw Error(ErrorCode::EmptyIndex, "knn on an empty index");
  if (k == 0) throw Error(ErrorCode::InvalidParams, "k must be >= 1");
  const std::array<double, 3> q = {query.x, query.y, query.z};
  return tree_.knn(q, k);
}

std::vector<std::uint32_t> SpatialIndex::knn(const Point3& query, std::size_t k) const {
  const auto nn = knn_with_distances(query, k);
  std::vector<std::uint32_t> out;
  out.reserve(nn.size());
  for (const Neighbor& n : nn) out.push_back(n.index);
  return out;
}

std::vector<std::uint32_t> knn(const SpatialIndex& index, const Point3& query, std::size_t k) {
  return index.knn(query, k);
}

}  // namespace seqlpd
