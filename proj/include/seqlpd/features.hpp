#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "seqlpd/cloud.hpp"

namespace seqlpd {

inline constexpr std::size_t kDefaultLocalK = 20;
inline constexpr double kEigenEpsilon = 1e-12;

// Per-point neighborhood statistics fed to the descriptor network.
struct LocalFeature {
  double dz_max = 0.0;  // max height difference in the neighborhood
  double z_var = 0.0;   // population variance of heights
  double s2d = 0.0;     // 2D scattering: lambda1 + lambda2
  double l2d = 0.0;     // lambda2 / lambda1, in [0, 1]

  friend bool operator==(const LocalFeature&, const LocalFeature&) = default;
};

using LocalFeatures = std::vector<LocalFeature>;

struct ZStats {
  double dz_max;
  double z_var;
};

struct PlanarEigen {
  double lambda1;  // >= lambda2
  double lambda2;  // >= 0
};

ZStats z_stats(std::span<const Point3> neighborhood);

// Eigenvalues of the population covariance of the (x, y) projection, from the
// closed form for symmetric 2x2 matrices.
PlanarEigen planar_eigen(std::span<const Point3> neighborhood);

// Neighborhood of point i = i itself plus its k-1 nearest other points.
LocalFeatures local_features(const Submap& submap, std::size_t k = kDefaultLocalK);

}  // namespace seqlpd
