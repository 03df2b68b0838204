#include "seqlpd/features.hpp"

#include <algorithm>
#include <cmath>

#include "seqlpd/error.hpp"
#include "seqlpd/parallel.hpp"

namespace seqlpd {

ZStats z_stats(std::span<const Point3> neighborhood) {
  if (neighborhood.empty()) throw Error(ErrorCode::EmptyInput, "empty neighborhood");
  double zmin = neighborhood.front().z, zmax = zmin, sum = 0.0;
  for (const Point3& p : neighborhood) {
    zmin = std::min(zmin, p.z);
    zmax = std::max(zmax, p.z);
    sum += p.z;
  }
  const double n = static_cast<double>(neighborhood.size());
  const double mean = sum / n;
  double ss = 0.0;
  for (const Point3& p : neighborhood) ss += (p.z - mean) * (p.z - mean);
  return {zmax - zmin, ss / n};
}

PlanarEigen planar_eigen(std::span<const Point3> neighborhood) {
  if (neighborhood.empty()) throw Error(ErrorCode::EmptyInput, "empty neighborhood");
  const double n = static_cast<double>(neighborhood.size());
  double sx = 0.0, sy = 0.0;
  for (const Point3& p : neighborhood) {
    sx += p.x;
    sy += p.y;
  }
  const double mx = sx / n, my = sy / n;
  double cxx = 0.0, cyy = 0.0, cxy = 0.0;
  for (const Point3& p : neighborhood) {
    const double dx = p.x - mx, dy = p.y - my;
    cxx += dx * dx;
    cyy += dy * dy;
    cxy += dx * dy;
  }
  cxx /= n;
  cyy /= n;
  cxy /= n;

  const double half_trace = 0.5 * (cxx + cyy);
  const double half_diff = 0.5 * (cxx - cyy);
  const double r = std::hypot(half_diff, cxy);
  const double l1 = std::max(half_trace + r, 0.0);
  const double l2 = std::max(half_trace - r, 0.0);
  return {l1, l2};
}

LocalFeatures local_features(const Submap& submap, std::size_t k) {
  if (k < 2) throw Error(ErrorCode::InvalidParams, "local feature k must be >= 2");
  const std::vector<Point3>& pts = submap.points;
  if (pts.empty()) throw Error(ErrorCode::EmptyInput, "empty submap");
  const SpatialIndex index(pts);

  LocalFeatures out(pts.size());
  parallel_for(pts.size(), [&](std::size_t begin, std::size_t end) {
    std::vector<Point3> hood;
    hood.reserve(k);
    for (std::size_t i = begin; i < end; ++i) {
      const auto nn = index.knn(pts[i], k);
      hood.clear();
      hood.push_back(pts[i]);
      for (std::uint32_t j : nn) {
        if (j == i) continue;
        if (hood.size() == k) break;
        hood.push_back(pts[j]);
      }
      const ZStats zs = z_stats(hood);
      const PlanarEigen ev = planar_eigen(hood);
      LocalFeature& f = out[i];
      f.dz_max = zs.dz_max;
      f.z_var = zs.z_var;
      f.s2d = ev.lambda1 + ev.lambda2;
      f.l2d = ev.lambda1 < kEigenEpsilon ? 0.0 : std::clamp(ev.lambda2 / ev.lambda1, 0.0, 1.0);
    }
  });
  return out;
}

}  // namespace seqlpd
