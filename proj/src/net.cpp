#include "seqlpd/net.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "binio.hpp"
#include "seqlpd/error.hpp"
#include "seqlpd/kdtree.hpp"
#include "seqlpd/parallel.hpp"
#include "seqlpd/simd/kernels.hpp"

namespace seqlpd {
namespace {

constexpr std::uint32_t kWeightsVersion = 1;
constexpr float kInitRange = 0.05f;

std::uint32_t u32(std::size_t v) { return static_cast<std::uint32_t>(v); }

std::string shape_str(const std::vector<std::uint32_t>& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

void add_layer(std::vector<TensorSpec>& specs, const std::string& name, std::size_t out, std::size_t in) {
  specs.push_back({name + ".weight", {u32(out), u32(in)}});
  specs.push_back({name + ".bias", {u32(out)}});
}

void add_transform_net(std::vector<TensorSpec>& specs, const std::string& prefix, std::size_t d,
                       const NetConfig& c) {
  std::size_t prev = d;
  for (std::size_t i = 0; i < c.tnet_conv.size(); ++i) {
    add_layer(specs, prefix + ".conv" + std::to_string(i), c.tnet_conv[i], prev);
    prev = c.tnet_conv[i];
  }
  for (std::size_t i = 0; i < c.tnet_fc.size(); ++i) {
    add_layer(specs, prefix + ".fc" + std::to_string(i), c.tnet_fc[i], prev);
    prev = c.tnet_fc[i];
  }
  add_layer(specs, prefix + ".out", d * d, prev);
}

void check_shape(const Tensor& t, const std::vector<std::uint32_t>& want, const std::string& what) {
  if (t.shape != want) {
    throw Error(ErrorCode::ShapeError, what + ": expected " + shape_str(want) + ", got " + shape_str(t.shape));
  }
}

Tensor run_stack(Tensor x, const WeightSet& ws, const std::string& prefix, std::size_t layers) {
  for (std::size_t i = 0; i < layers; ++i) {
    const std::string name = prefix + std::to_string(i);
    x = dense(x, ws.at(name + ".weight"), ws.at(name + ".bias"), true);
  }
  return x;
}

std::size_t count_layers(const WeightSet& ws, const std::string& prefix) {
  std::size_t n = 0;
  while (ws.contains(prefix + std::to_string(n) + ".weight")) ++n;
  return n;
}

Tensor transform_net(const Tensor& x, const WeightSet& ws, const std::string& prefix) {
  if (x.shape.size() != 2 || x.rows() == 0) {
    throw Error(ErrorCode::ShapeError, prefix + ": expected a non-empty n x d input");
  }
  const std::size_t d = x.cols();
  Tensor h = run_stack(x, ws, prefix + ".conv", count_layers(ws, prefix + ".conv"));

  // Max-pool over points; exact, so independent of row order.
  Tensor pooled({1, u32(h.cols())});
  std::copy(h.row(0).begin(), h.row(0).end(), pooled.data.begin());
  for (std::size_t i = 1; i < h.rows(); ++i) {
    const auto r = h.row(i);
    for (std::size_t c = 0; c < r.size(); ++c) pooled.data[c] = std::max(pooled.data[c], r[c]);
  }

  Tensor g = run_stack(pooled, ws, prefix + ".fc", count_layers(ws, prefix + ".fc"));
  const Tensor& w = ws.at(prefix + ".out.weight");
  if (w.rows() != d * d) {
    throw Error(ErrorCode::ShapeError, prefix + ": output layer does not produce a " +
                                           std::to_string(d) + "x" + std::to_string(d) + " matrix");
  }
  Tensor m = dense(g, w, ws.at(prefix + ".out.bias"), false);
  m.shape = {u32(d), u32(d)};
  return m;
}

std::vector<std::size_t> layer_widths(const WeightSet& ws, const std::string& prefix) {
  std::vector<std::size_t> widths;
  for (std::size_t i = 0; ws.contains(prefix + std::to_string(i) + ".weight"); ++i) {
    widths.push_back(ws.at(prefix + std::to_string(i) + ".weight").rows());
  }
  return widths;
}

}  // namespace

void NetConfig::validate() const {
  if (k_graph < 1) throw Error(ErrorCode::InvalidParams, "k_graph must be >= 1");
  if (vlad_clusters < 1) throw Error(ErrorCode::InvalidParams, "vlad_clusters must be >= 1");
  if (descriptor_dim < 1) throw Error(ErrorCode::InvalidParams, "descriptor_dim must be >= 1");
  if (point_mlp.empty() || edge_mlp.empty() || post_mlp.empty() || tnet_conv.empty()) {
    throw Error(ErrorCode::InvalidParams, "every MLP stack needs at least one layer");
  }
  for (const auto* stack : {&point_mlp, &edge_mlp, &post_mlp, &tnet_conv, &tnet_fc}) {
    for (std::size_t w : *stack) {
      if (w == 0) throw Error(ErrorCode::InvalidParams, "layer width must be >= 1");
    }
  }
}

std::vector<TensorSpec> required_tensors(const NetConfig& c) {
  c.validate();
  std::vector<TensorSpec> specs;
  add_transform_net(specs, "input_tnet", 3, c);
  std::size_t prev = NetConfig::kInputDims;
  for (std::size_t i = 0; i < c.point_mlp.size(); ++i) {
    add_layer(specs, "point_mlp" + std::to_string(i), c.point_mlp[i], prev);
    prev = c.point_mlp[i];
  }
  add_transform_net(specs, "feature_tnet", prev, c);
  prev = 2 * prev;
  for (std::size_t i = 0; i < c.edge_mlp.size(); ++i) {
    add_layer(specs, "edge_mlp" + std::to_string(i), c.edge_mlp[i], prev);
    prev = c.edge_mlp[i];
  }
  for (std::size_t i = 0; i < c.post_mlp.size(); ++i) {
    add_layer(specs, "post_mlp" + std::to_string(i), c.post_mlp[i], prev);
    prev = c.post_mlp[i];
  }
  specs.push_back({"vlad.centers", {u32(c.vlad_clusters), u32(prev)}});
  add_layer(specs, "vlad.assign", c.vlad_clusters, prev);
  add_layer(specs, "proj", c.descriptor_dim, c.vlad_clusters * prev);
  return specs;
}

const Tensor& WeightSet::at(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw Error(ErrorCode::ShapeError, "missing tensor " + name);
  return it->second;
}

void WeightSet::validate(const NetConfig& config) const {
  for (const TensorSpec& spec : required_tensors(config)) {
    check_shape(at(spec.name), spec.shape, spec.name);
  }
  for (const auto& [name, t] : tensors_) {
    if (t.data.size() != Tensor::element_count(t.shape)) {
      throw Error(ErrorCode::ShapeError, name + ": payload does not match shape");
    }
    for (float v : t.data) {
      if (!std::isfinite(v)) throw Error(ErrorCode::ShapeError, name + ": non-finite value");
    }
  }
}

void save_weights(const WeightSet& ws, const std::filesystem::path& path) {
  detail::ByteWriter w;
  w.put_magic("LPDW");
  w.put<std::uint32_t>(kWeightsVersion);
  w.put<std::uint32_t>(u32(ws.tensors().size()));
  for (const auto& [name, t] : ws.tensors()) {
    if (name.size() > std::numeric_limits<std::uint16_t>::max() || t.shape.size() > 255) {
      throw Error(ErrorCode::ShapeError, "tensor " + name + " cannot be encoded");
    }
    w.put<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
    w.put_bytes(name.data(), name.size());
    w.put<std::uint8_t>(static_cast<std::uint8_t>(t.shape.size()));
    for (std::uint32_t d : t.shape) w.put<std::uint32_t>(d);
    w.put_bytes(t.data.data(), t.data.size() * sizeof(float));
  }
  w.write_to(path);
}

WeightSet load_weights(const std::filesystem::path& path) {
  auto r = detail::ByteReader::from_file(path);
  r.expect_magic("LPDW");
  r.expect_version(kWeightsVersion);
  const auto count = r.get<std::uint32_t>();
  WeightSet ws;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = r.get<std::uint16_t>();
    std::string name(name_len, '\0');
    r.get_bytes(name.data(), name_len);
    const auto rank = r.get<std::uint8_t>();
    std::vector<std::uint32_t> shape(rank);
    for (auto& d : shape) d = r.get<std::uint32_t>();
    const std::size_t n = Tensor::element_count(shape);
    if (n > r.remaining() / sizeof(float)) {
      throw Error(ErrorCode::FormatError, r.what() + ": truncated tensor " + name);
    }
    Tensor t(std::move(shape));
    r.get_bytes(t.data.data(), n * sizeof(float));
    if (ws.contains(name)) throw Error(ErrorCode::FormatError, r.what() + ": duplicate tensor " + name);
    ws.set(name, std::move(t));
  }
  r.expect_end();
  return ws;
}

WeightSet load_weights(const std::filesystem::path& path, const NetConfig& config) {
  WeightSet ws = load_weights(path);
  ws.validate(config);
  return ws;
}

NetConfig infer_config(const WeightSet& ws, const NetConfig& base) {
  NetConfig c = base;
  c.point_mlp = layer_widths(ws, "point_mlp");
  c.edge_mlp = layer_widths(ws, "edge_mlp");
  c.post_mlp = layer_widths(ws, "post_mlp");
  c.tnet_conv = layer_widths(ws, "input_tnet.conv");
  c.tnet_fc = layer_widths(ws, "input_tnet.fc");
  c.vlad_clusters = ws.at("vlad.centers").rows();
  c.descriptor_dim = ws.at("proj.weight").rows();
  if (c.point_mlp.empty() || c.edge_mlp.empty() || c.post_mlp.empty() || c.tnet_conv.empty()) {
    throw Error(ErrorCode::ShapeError, "weight set is missing a layer stack");
  }
  return c;
}

WeightSet random_weights(const NetConfig& config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(-kInitRange, kInitRange);
  WeightSet ws;
  for (const TensorSpec& spec : required_tensors(config)) {
    Tensor t(spec.shape);
    for (float& v : t.data) v = dist(rng);
    ws.set(spec.name, std::move(t));
  }
  for (const auto& [prefix, d] : {std::pair<std::string, std::size_t>{"input_tnet", 3},
                                  {"feature_tnet", config.point_feature_dim()}}) {
    Tensor bias({u32(d * d)});
    for (std::size_t i = 0; i < d; ++i) bias.data[i * d + i] = 1.0f;
    ws.set(prefix + ".out.bias", std::move(bias));
  }
  return ws;
}

Tensor dense(const Tensor& x, const Tensor& weight, const Tensor& bias, bool relu) {
  const std::size_t in = x.cols(), out = weight.rows();
  if (x.shape.size() != 2 || weight.shape.size() != 2 || weight.cols() != in ||
      bias.data.size() != out) {
    throw Error(ErrorCode::ShapeError, "dense: input " + shape_str(x.shape) + " vs weight " +
                                           shape_str(weight.shape) + " / bias " + shape_str(bias.shape));
  }
  Tensor y({u32(x.rows()), u32(out)});
  parallel_for(x.rows(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const float* xi = x.data.data() + i * in;
      float* yi = y.data.data() + i * out;
      for (std::size_t o = 0; o < out; ++o) {
        float v = simd::dot(xi, weight.data.data() + o * in, in) + bias.data[o];
        yi[o] = relu ? std::max(v, 0.0f) : v;
      }
    }
  }, 8);
  return y;
}

Tensor apply_transform(const Tensor& x, const Tensor& m) {
  const std::size_t d = x.cols();
  if (m.rows() != d || m.cols() != d) {
    throw Error(ErrorCode::ShapeError, "transform " + shape_str(m.shape) + " vs input " + shape_str(x.shape));
  }
  Tensor mt({u32(d), u32(d)});
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < d; ++c) mt.data[c * d + r] = m.data[r * d + c];
  }
  Tensor y({u32(x.rows()), u32(d)});
  parallel_for(x.rows(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t c = 0; c < d; ++c) {
        y.data[i * d + c] = simd::dot(x.data.data() + i * d, mt.data.data() + c * d, d);
      }
    }
  }, 64);
  return y;
}

Tensor input_transform(const Tensor& points, const WeightSet& ws) {
  if (points.shape.size() != 2 || points.cols() != 3) {
    throw Error(ErrorCode::ShapeError, "input_transform expects n x 3, got " + shape_str(points.shape));
  }
  return transform_net(points, ws, "input_tnet");
}

Tensor feature_transform(const Tensor& feats, const WeightSet& ws) {
  return transform_net(feats, ws, "feature_tnet");
}

std::vector<std::vector<std::uint32_t>> feature_neighbors(const Tensor& feats, std::size_t k) {
  const std::size_t n = feats.rows(), f = feats.cols();
  const std::size_t keff = std::min(k, n == 0 ? 0 : n - 1);
  std::vector<std::vector<std::uint32_t>> out(n);
  if (keff == 0) return out;
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      NeighborSet best(keff);
      const float* fi = feats.data.data() + i * f;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const float d = simd::l2sq(fi, feats.data.data() + j * f, f);
        best.offer({static_cast<double>(d), u32(j)});
      }
      out[i].reserve(keff);
      for (const Neighbor& nb : best.items()) out[i].push_back(nb.index);
    }
  }, 8);
  return out;
}

Tensor graph_aggregate(const Tensor& feats, std::size_t k_graph, const WeightSet& ws) {
  if (feats.shape.size() != 2 || feats.rows() == 0) {
    throw Error(ErrorCode::ShapeError, "graph_aggregate expects a non-empty n x F input");
  }
  if (k_graph < 1) throw Error(ErrorCode::InvalidParams, "k_graph must be >= 1");
  const std::size_t n = feats.rows(), f = feats.cols();

  const Tensor transformed = apply_transform(feats, feature_transform(feats, ws));
  auto neighbors = feature_neighbors(transformed, k_graph);
  if (n == 1) neighbors[0] = {0};  // lone point: single self-edge concat(p, 0)

  // First edge layer on concat(p_i, p_i - p_j) splits into
  // (Wa + Wb) p_i + b - Wb p_j, so it is evaluated per point, not per edge.
  const Tensor& w0 = ws.at("edge_mlp0.weight");
  const Tensor& b0 = ws.at("edge_mlp0.bias");
  if (w0.shape.size() != 2 || w0.cols() != 2 * f) {
    throw Error(ErrorCode::ShapeError, "edge_mlp0.weight: expected input width " + std::to_string(2 * f));
  }
  const std::size_t h = w0.rows();
  Tensor w_self({u32(h), u32(f)}), w_nbr({u32(h), u32(f)});
  for (std::size_t o = 0; o < h; ++o) {
    for (std::size_t c = 0; c < f; ++c) {
      const float wa = w0.data[o * 2 * f + c];
      const float wb = w0.data[o * 2 * f + f + c];
      w_self.data[o * f + c] = wa + wb;
      w_nbr.data[o * f + c] = wb;
    }
  }
  const Tensor self_term = dense(feats, w_self, b0, false);
  const Tensor nbr_term = dense(feats, w_nbr, Tensor({u32(h)}), false);

  const std::size_t layers = count_layers(ws, "edge_mlp");
  std::size_t out_dim = h;
  for (std::size_t l = 1; l < layers; ++l) out_dim = ws.at("edge_mlp" + std::to_string(l) + ".weight").rows();

  Tensor out({u32(n), u32(out_dim)});
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& nb = neighbors[i];
      Tensor edges({u32(nb.size()), u32(h)});
      for (std::size_t e = 0; e < nb.size(); ++e) {
        const auto si = self_term.row(i);
        const auto nj = nbr_term.row(nb[e]);
        auto dst = edges.row(e);
        for (std::size_t c = 0; c < h; ++c) dst[c] = std::max(si[c] - nj[c], 0.0f);
      }
      for (std::size_t l = 1; l < layers; ++l) {
        const std::string name = "edge_mlp" + std::to_string(l);
        edges = dense(edges, ws.at(name + ".weight"), ws.at(name + ".bias"), true);
      }
      auto dst = out.row(i);
      std::copy(edges.row(0).begin(), edges.row(0).end(), dst.begin());
      for (std::size_t e = 1; e < edges.rows(); ++e) {
        const auto r = edges.row(e);
        for (std::size_t c = 0; c < out_dim; ++c) dst[c] = std::max(dst[c], r[c]);
      }
    }
  }, 4);
  return out;
}

Descriptor netvlad(const Tensor& feats, const WeightSet& ws) {
  const Tensor& centers = ws.at("vlad.centers");
  const Tensor& assign_w = ws.at("vlad.assign.weight");
  const Tensor& assign_b = ws.at("vlad.assign.bias");
  const Tensor& proj_w = ws.at("proj.weight");
  const Tensor& proj_b = ws.at("proj.bias");
  const std::size_t n = feats.rows(), f = feats.cols(), clusters = centers.rows();
  if (feats.shape.size() != 2 || n == 0) throw Error(ErrorCode::ShapeError, "netvlad expects a non-empty n x F input");
  if (centers.cols() != f || proj_w.cols() != clusters * f) {
    throw Error(ErrorCode::ShapeError, "netvlad: feature width " + std::to_string(f) + " vs centers " +
                                           shape_str(centers.shape) + " / projection " + shape_str(proj_w.shape));
  }

  // Soft assignment (softmax over clusters), in double.
  const Tensor logits = dense(feats, assign_w, assign_b, false);
  std::vector<double> assign(n * clusters);
  for (std::size_t i = 0; i < n; ++i) {
    const auto l = logits.row(i);
    const float mx = *std::max_element(l.begin(), l.end());
    double z = 0.0;
    for (std::size_t c = 0; c < clusters; ++c) {
      assign[i * clusters + c] = std::exp(static_cast<double>(l[c]) - mx);
      z += assign[i * clusters + c];
    }
    for (std::size_t c = 0; c < clusters; ++c) assign[i * clusters + c] /= z;
  }

  // Residuals sum_i a_ic (x_i - c_c) = sum_i a_ic x_i - (sum_i a_ic) c_c, then
  // intra-normalization. Each cluster is reduced over points in index order.
  std::vector<float> vlad(clusters * f);
  parallel_for(clusters, [&](std::size_t begin, std::size_t end) {
    std::vector<double> acc(f);
    for (std::size_t c = begin; c < end; ++c) {
      std::fill(acc.begin(), acc.end(), 0.0);
      double mass = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double a = assign[i * clusters + c];
        simd::axpy_f64(acc.data(), a, feats.data.data() + i * f, f);
        mass += a;
      }
      double norm_sq = 0.0;
      for (std::size_t j = 0; j < f; ++j) {
        acc[j] -= mass * static_cast<double>(centers.data[c * f + j]);
        norm_sq += acc[j] * acc[j];
      }
      const double inv = norm_sq > 0.0 ? 1.0 / std::sqrt(norm_sq) : 0.0;
      for (std::size_t j = 0; j < f; ++j) vlad[c * f + j] = static_cast<float>(acc[j] * inv);
    }
  }, 1);

  const std::size_t dim = proj_w.rows();
  std::vector<double> projected(dim);
  parallel_for(dim, [&](std::size_t begin, std::size_t end) {
    for (std::size_t o = begin; o < end; ++o) {
      projected[o] = static_cast<double>(simd::dot(vlad.data(), proj_w.data.data() + o * vlad.size(), vlad.size()) +
                                         proj_b.data[o]);
    }
  }, 8);
  double norm_sq = 0.0;
  for (double v : projected) norm_sq += v * v;
  const double inv = norm_sq > 0.0 ? 1.0 / std::sqrt(norm_sq) : 0.0;
  Descriptor d(dim);
  for (std::size_t o = 0; o < dim; ++o) d[o] = static_cast<float>(projected[o] * inv);
  return d;
}

Tensor coordinates_tensor(const Submap& submap) {
  Tensor t({u32(submap.points.size()), 3});
  for (std::size_t i = 0; i < submap.points.size(); ++i) {
    const Point3& p = submap.points[i];
    t.data[i * 3 + 0] = static_cast<float>(p.x);
    t.data[i * 3 + 1] = static_cast<float>(p.y);
    t.data[i * 3 + 2] = static_cast<float>(p.z);
  }
  return t;
}

Descriptor describe(const Submap& submap, const LocalFeatures& lf, const WeightSet& ws,
                    const NetConfig& config) {
  const std::size_t n = submap.points.size();
  if (n == 0) throw Error(ErrorCode::EmptyInput, "empty submap");
  if (lf.size() != n) {
    throw Error(ErrorCode::ShapeError, std::to_string(n) + " points vs " + std::to_string(lf.size()) +
                                           " local feature rows");
  }
  const Tensor coords = coordinates_tensor(submap);
  const Tensor aligned = apply_transform(coords, input_transform(coords, ws));

  Tensor input({u32(n), u32(NetConfig::kInputDims)});
  for (std::size_t i = 0; i < n; ++i) {
    float* r = input.data.data() + i * NetConfig::kInputDims;
    r[0] = aligned.data[i * 3 + 0];
    r[1] = aligned.data[i * 3 + 1];
    r[2] = aligned.data[i * 3 + 2];
    r[3] = static_cast<float>(lf[i].dz_max);
    r[4] = static_cast<float>(lf[i].z_var);
    r[5] = static_cast<float>(lf[i].s2d);
    r[6] = static_cast<float>(lf[i].l2d);
  }

  Tensor h = run_stack(std::move(input), ws, "point_mlp", config.point_mlp.size());
  h = graph_aggregate(h, config.k_graph, ws);
  h = run_stack(std::move(h), ws, "post_mlp", config.post_mlp.size());
  return netvlad(h, ws);
}

double lazy_quadruplet_loss(const Descriptor& anchor, const std::vector<Descriptor>& positives,
                            const std::vector<Descriptor>& negatives, const Descriptor& neg_star,
                            QuadrupletMargins margins) {
  if (positives.empty()) throw Error(ErrorCode::EmptyInput, "lazy quadruplet loss needs a positive");
  if (negatives.empty()) throw Error(ErrorCode::EmptyInput, "lazy quadruplet loss needs a negative");
  const std::size_t dim = anchor.size();
  auto dist = [dim](const Descriptor& a, const Descriptor& b) {
    if (a.size() != dim || b.size() != dim) throw Error(ErrorCode::DimensionError, "descriptor dimension mismatch");
    return squared_distance(a.data(), b.data(), dim);
  };
  if (neg_star.size() != dim) throw Error(ErrorCode::DimensionError, "descriptor dimension mismatch");

  double best_pos = std::numeric_limits<double>::infinity();
  for (const auto& p : positives) best_pos = std::min(best_pos, dist(anchor, p));

  double first = 0.0, second = 0.0;
  for (const auto& neg : negatives) {
    first = std::max(first, margins.alpha + best_pos - dist(anchor, neg));
    second = std::max(second, margins.beta + best_pos - dist(neg_star, neg));
  }
  return first + second;
}

namespace {

struct HistogramSpec {
  std::size_t bins;
  bool log_scale;
  double lo, hi;  // value range, or log10 range when log_scale
};

// 64 bins of height plus 48 for each local feature: 256 in total.
constexpr HistogramSpec kBaselineHists[] = {
    {64, false, -1.0, 1.0},  // z
    {48, true, -4.0, 0.5},   // dz_max
    {48, true, -8.0, 0.0},   // z_var
    {48, true, -8.0, 0.5},   // s2d
    {48, false, 0.0, 1.0},   // l2d
};

std::size_t bin_of(const HistogramSpec& h, double v) {
  double t;
  if (h.log_scale) {
    t = v > 0.0 ? (std::log10(v) - h.lo) / (h.hi - h.lo) : 0.0;
  } else {
    t = (v - h.lo) / (h.hi - h.lo);
  }
  const double b = std::floor(std::clamp(t, 0.0, 1.0) * static_cast<double>(h.bins));
  return std::min(static_cast<std::size_t>(b), h.bins - 1);
}

}  // namespace

Descriptor baseline_descriptor(const Submap& submap, const LocalFeatures& lf) {
  const std::size_t n = submap.points.size();
  if (n == 0) throw Error(ErrorCode::EmptyInput, "empty submap");
  if (lf.size() != n) throw Error(ErrorCode::ShapeError, "local feature rows do not match points");

  std::vector<std::uint32_t> counts(kDescriptorDim, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const double values[] = {submap.points[i].z, lf[i].dz_max, lf[i].z_var, lf[i].s2d, lf[i].l2d};
    std::size_t offset = 0;
    for (std::size_t h = 0; h < std::size(kBaselineHists); ++h) {
      ++counts[offset + bin_of(kBaselineHists[h], values[h])];
      offset += kBaselineHists[h].bins;
    }
  }
  // Every histogram holds n counts, so normalizing the whole vector is the
  // same as normalizing each histogram by n first.
  double norm_sq = 0.0;
  for (std::uint32_t c : counts) norm_sq += static_cast<double>(c) * static_cast<double>(c);
  const double inv = 1.0 / std::sqrt(norm_sq);
  Descriptor d(kDescriptorDim);
  for (std::size_t i = 0; i < kDescriptorDim; ++i) d[i] = static_cast<float>(counts[i] * inv);
  return d;
}

}  // namespace seqlpd
