#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "seqlpd/cloud.hpp"
#include "seqlpd/features.hpp"
#include "seqlpd/tensor.hpp"

namespace seqlpd {

inline constexpr std::size_t kDescriptorDim = 256;

using Descriptor = std::vector<float>;

// Layer widths of the light descriptor network. Defaults follow the PointNet /
// PointNetVLAD conventions; every width is recorded so weight files can be
// validated against it.
struct NetConfig {
  std::size_t k_graph = 20;
  std::size_t vlad_clusters = 64;
  std::vector<std::size_t> point_mlp = {64, 64};   // 7 -> 64 -> 64
  std::vector<std::size_t> edge_mlp = {64, 128};   // 2F -> 64 -> 128
  std::vector<std::size_t> post_mlp = {1024};      // 128 -> 1024
  std::vector<std::size_t> tnet_conv = {64, 128};  // per-point stage of both transform nets
  std::vector<std::size_t> tnet_fc = {64};         // head before the d*d output
  std::size_t descriptor_dim = kDescriptorDim;

  static constexpr std::size_t kInputDims = 7;  // x', y', z', dz_max, z_var, s2d, l2d

  std::size_t point_feature_dim() const { return point_mlp.back(); }
  std::size_t edge_feature_dim() const { return edge_mlp.back(); }
  std::size_t vlad_feature_dim() const { return post_mlp.back(); }

  void validate() const;
};

struct TensorSpec {
  std::string name;
  std::vector<std::uint32_t> shape;
};

// Every tensor the configured architecture reads, with its shape.
std::vector<TensorSpec> required_tensors(const NetConfig& config);

class WeightSet {
 public:
  const Tensor& at(const std::string& name) const;
  bool contains(const std::string& name) const { return tensors_.count(name) != 0; }
  void set(const std::string& name, Tensor t) { tensors_[name] = std::move(t); }
  void erase(const std::string& name) { tensors_.erase(name); }
  const std::map<std::string, Tensor>& tensors() const { return tensors_; }

  // Throws ShapeError naming the first missing or mis-shaped tensor.
  void validate(const NetConfig& config) const;

  friend bool operator==(const WeightSet&, const WeightSet&) = default;

 private:
  std::map<std::string, Tensor> tensors_;
};

// LPDW container; tensors are written in name order.
void save_weights(const WeightSet& ws, const std::filesystem::path& path);
WeightSet load_weights(const std::filesystem::path& path);
WeightSet load_weights(const std::filesystem::path& path, const NetConfig& config);

// Recovers layer widths from tensor shapes; k_graph is taken from `base`.
NetConfig infer_config(const WeightSet& ws, const NetConfig& base = {});

// Uniform [-0.05, 0.05] everywhere, except transform-net output biases which
// hold the flattened identity.
WeightSet random_weights(const NetConfig& config, std::uint64_t seed);

// Row-wise fully connected layer: out = x W^T + b, optionally ReLU.
Tensor dense(const Tensor& x, const Tensor& weight, const Tensor& bias, bool relu);

// x * m for an n x d input and a d x d matrix.
Tensor apply_transform(const Tensor& x, const Tensor& m);

Tensor input_transform(const Tensor& points, const WeightSet& ws);
Tensor feature_transform(const Tensor& feats, const WeightSet& ws);

// k nearest other rows of `feats` for every row, by squared L2 (ties by lower
// index). k saturates at n - 1.
std::vector<std::vector<std::uint32_t>> feature_neighbors(const Tensor& feats, std::size_t k);

Tensor graph_aggregate(const Tensor& feats, std::size_t k_graph, const WeightSet& ws);

Descriptor netvlad(const Tensor& feats, const WeightSet& ws);

// Stacks normalized coordinates and local features into the n x 3 and n x 4
// network inputs.
Tensor coordinates_tensor(const Submap& submap);

Descriptor describe(const Submap& submap, const LocalFeatures& lf, const WeightSet& ws,
                    const NetConfig& config);

struct QuadrupletMargins {
  double alpha = 0.5;
  double beta = 0.2;
};

// max_j [alpha + min_p d(a,p) - d(a,n_j)]_+ + max_k [beta + min_p d(a,p) - d(n*,n_k)]_+
// with squared L2 distances.
double lazy_quadruplet_loss(const Descriptor& anchor, const std::vector<Descriptor>& positives,
                            const std::vector<Descriptor>& negatives, const Descriptor& neg_star,
                            QuadrupletMargins margins = {});

// Weight-free descriptor: normalized histograms of height and the four local
// features, L2-normalized.
Descriptor baseline_descriptor(const Submap& submap, const LocalFeatures& lf);

}  // namespace seqlpd
