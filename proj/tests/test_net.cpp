#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "seqlpd/features.hpp"
#include "seqlpd/net.hpp"
#include "seqlpd/simd/kernels.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace seqlpd;
using testsupport::error_of;

namespace {

NetConfig small_config() {
  NetConfig c;
  c.k_graph = 4;
  c.vlad_clusters = 4;
  c.point_mlp = {8, 8};
  c.edge_mlp = {8, 16};
  c.post_mlp = {32};
  c.tnet_conv = {8, 16};
  c.tnet_fc = {8};
  return c;
}

Tensor random_tensor(std::size_t rows, std::size_t cols, std::uint64_t seed, float scale = 1.0f) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-scale, scale);
  Tensor t({static_cast<std::uint32_t>(rows), static_cast<std::uint32_t>(cols)});
  for (float& v : t.data) v = u(rng);
  return t;
}

Tensor permute_rows(const Tensor& t, const std::vector<std::size_t>& perm) {
  Tensor out(t.shape);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    std::copy(t.row(perm[i]).begin(), t.row(perm[i]).end(), out.row(i).begin());
  }
  return out;
}

std::vector<std::size_t> random_perm(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  std::shuffle(p.begin(), p.end(), std::mt19937_64(seed));
  return p;
}

WeightSet zeroed_with_identity(const NetConfig& c) {
  WeightSet ws = random_weights(c, 0);
  for (const auto& [name, t] : ws.tensors()) {
    if (name.ends_with(".out.bias")) continue;
    Tensor z = t;
    std::fill(z.data.begin(), z.data.end(), 0.0f);
    ws.set(name, z);
  }
  return ws;
}

// Direct per-edge evaluation of the edge MLP on concat(p_i, p_i - p_j).
std::vector<float> edge_oracle(const Tensor& feats, std::size_t i, const std::vector<std::uint32_t>& nbrs,
                               const WeightSet& ws, std::size_t layers) {
  const std::size_t f = feats.cols();
  std::vector<float> best;
  for (std::uint32_t j : nbrs) {
    std::vector<double> x(2 * f);
    for (std::size_t c = 0; c < f; ++c) {
      x[c] = feats.row(i)[c];
      x[f + c] = double(feats.row(i)[c]) - feats.row(j)[c];
    }
    for (std::size_t l = 0; l < layers; ++l) {
      const Tensor& w = ws.at("edge_mlp" + std::to_string(l) + ".weight");
      const Tensor& b = ws.at("edge_mlp" + std::to_string(l) + ".bias");
      std::vector<double> y(w.rows());
      for (std::size_t o = 0; o < w.rows(); ++o) {
        double s = b.data[o];
        for (std::size_t c = 0; c < w.cols(); ++c) s += double(w.data[o * w.cols() + c]) * x[c];
        y[o] = std::max(s, 0.0);
      }
      x = y;
    }
    if (best.empty()) best.assign(x.size(), -1e30f);
    for (std::size_t c = 0; c < x.size(); ++c) best[c] = std::max(best[c], float(x[c]));
  }
  return best;
}

Submap random_submap(std::size_t n, std::uint64_t seed) {
  PointCloud c;
  c.points = testsupport::uniform_points(n, -1, 1, seed);
  return normalize_submap(c, n, seed);
}

}  // namespace

TEST_CASE("architecture shapes for the default configuration") {
  const auto specs = required_tensors(NetConfig{});
  auto shape_of = [&](const std::string& name) {
    for (const auto& s : specs) {
      if (s.name == name) return s.shape;
    }
    return std::vector<std::uint32_t>{};
  };
  CHECK(shape_of("input_tnet.out.weight") == std::vector<std::uint32_t>{9, 64});
  CHECK(shape_of("feature_tnet.out.weight") == std::vector<std::uint32_t>{4096, 64});
  CHECK(shape_of("point_mlp0.weight") == std::vector<std::uint32_t>{64, 7});
  CHECK(shape_of("point_mlp1.weight") == std::vector<std::uint32_t>{64, 64});
  CHECK(shape_of("edge_mlp0.weight") == std::vector<std::uint32_t>{64, 128});
  CHECK(shape_of("edge_mlp1.weight") == std::vector<std::uint32_t>{128, 64});
  CHECK(shape_of("post_mlp0.weight") == std::vector<std::uint32_t>{1024, 128});
  CHECK(shape_of("vlad.centers") == std::vector<std::uint32_t>{64, 1024});
  CHECK(shape_of("proj.weight") == std::vector<std::uint32_t>{256, 65536});
  CHECK(shape_of("proj.bias") == std::vector<std::uint32_t>{256});

  NetConfig bad;
  bad.k_graph = 0;
  CHECK(error_of([&] { bad.validate(); }) == ErrorCode::InvalidParams);
}

TEST_CASE("random_weights") {
  const NetConfig c = small_config();
  const WeightSet a = random_weights(c, 5), b = random_weights(c, 5), d = random_weights(c, 6);
  CHECK(a == b);
  CHECK_FALSE(a == d);
  a.validate(c);
  for (const auto& [name, t] : a.tensors()) {
    if (name.ends_with(".out.bias")) continue;
    for (float v : t.data) {
      CHECK(v >= -0.05f);
      CHECK(v <= 0.05f);
    }
  }
  const Tensor& bias = a.at("input_tnet.out.bias");
  CHECK(bias.data == std::vector<float>{1, 0, 0, 0, 1, 0, 0, 0, 1});
  CHECK(infer_config(a).point_mlp == c.point_mlp);
  CHECK(infer_config(a).vlad_clusters == c.vlad_clusters);
}

TEST_CASE("weight file round trip and failures") {
  testsupport::TempDir dir;
  const NetConfig c = small_config();
  const WeightSet ws = random_weights(c, 3);
  save_weights(ws, dir / "w.lpdw");
  CHECK(load_weights(dir / "w.lpdw", c) == ws);
  const auto bytes = testsupport::read_bytes(dir / "w.lpdw");
  save_weights(load_weights(dir / "w.lpdw"), dir / "again.lpdw");
  CHECK(testsupport::read_bytes(dir / "again.lpdw") == bytes);

  auto bad = bytes;
  std::copy_n("XXXX", 4, bad.begin());
  testsupport::write_bytes(dir / "magic.lpdw", bad);
  CHECK(error_of([&] { load_weights(dir / "magic.lpdw"); }) == ErrorCode::FormatError);

  bad = bytes;
  bad[4] = 2;
  testsupport::write_bytes(dir / "version.lpdw", bad);
  CHECK(error_of([&] { load_weights(dir / "version.lpdw"); }) == ErrorCode::FormatError);

  bad = bytes;
  bad.push_back(0);
  testsupport::write_bytes(dir / "trailing.lpdw", bad);
  CHECK(error_of([&] { load_weights(dir / "trailing.lpdw"); }) == ErrorCode::FormatError);

  bad.assign(bytes.begin(), bytes.end() - 3);
  testsupport::write_bytes(dir / "short.lpdw", bad);
  CHECK(error_of([&] { load_weights(dir / "short.lpdw"); }) == ErrorCode::FormatError);

  CHECK(error_of([&] { load_weights(dir / "absent.lpdw"); }) == ErrorCode::IoError);

  WeightSet missing = ws;
  missing.erase("vlad.centers");
  save_weights(missing, dir / "missing.lpdw");
  try {
    load_weights(dir / "missing.lpdw", c);
    FAIL("expected ShapeError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeError);
    CHECK(std::string(e.what()).find("vlad.centers") != std::string::npos);
  }

  WeightSet wrong = ws;
  wrong.set("proj.bias", Tensor({7}));
  CHECK(error_of([&] { wrong.validate(c); }) == ErrorCode::ShapeError);
}

TEST_CASE("transform nets") {
  const NetConfig c = small_config();
  const WeightSet zero = zeroed_with_identity(c);
  const Tensor pts = random_tensor(50, 3, 1);
  const Tensor m = input_transform(pts, zero);
  CHECK(m.shape == std::vector<std::uint32_t>{3, 3});
  CHECK(m.data == std::vector<float>{1, 0, 0, 0, 1, 0, 0, 0, 1});
  CHECK(apply_transform(pts, m) == pts);

  const Tensor feats = random_tensor(40, 8, 2);
  const Tensor fm = feature_transform(feats, zero);
  for (std::size_t r = 0; r < 8; ++r) {
    for (std::size_t col = 0; col < 8; ++col) CHECK(fm.data[r * 8 + col] == (r == col ? 1.0f : 0.0f));
  }

  const WeightSet ws = random_weights(c, 9);
  const auto perm = random_perm(50, 4);
  CHECK(input_transform(permute_rows(pts, perm), ws) == input_transform(pts, ws));
  const auto fperm = random_perm(40, 5);
  CHECK(feature_transform(permute_rows(feats, fperm), ws) == feature_transform(feats, ws));

  // Golden matrix for seed 9 on the fixed input above.
  const Tensor golden = input_transform(pts, ws);
  const float expect[9] = {0.998878181f, 0.00118534279f, 0.000908189453f, 0.00195759186f, 0.998239577f,
                          -0.0011799729f, -0.000526905875f, 0.000299067498f, 0.998346329f};
  for (std::size_t i = 0; i < 9; ++i) CHECK(golden.data[i] == doctest::Approx(expect[i]).epsilon(1e-6));

  CHECK(error_of([&] { input_transform(random_tensor(5, 4, 1), ws); }) == ErrorCode::ShapeError);
  CHECK(error_of([&] { input_transform(Tensor({0, 3}), ws); }) == ErrorCode::ShapeError);
}

TEST_CASE("apply_transform right-multiplies") {
  const Tensor x({2, 2}, {1, 2, 3, 4});
  const Tensor m({2, 2}, {0, 1, 1, 0});
  CHECK(apply_transform(x, m).data == std::vector<float>{2, 1, 4, 3});
  const Tensor s({2, 2}, {2, 0, 0, 3});
  CHECK(apply_transform(x, s).data == std::vector<float>{2, 6, 6, 12});
}

TEST_CASE("feature_neighbors equals the exhaustive scan") {
  for (std::size_t n : {10u, 57u, 400u}) {
    for (std::size_t k : {1u, 3u, 20u}) {
      const Tensor f = random_tensor(n, 16, n * 31 + k);
      const auto got = feature_neighbors(f, k);
      for (std::size_t i = 0; i < n; ++i) CHECK(got[i] == oracle::brute_feature_knn(f, i, k));
    }
  }
  // Duplicated rows: ties resolved by lower index.
  Tensor dup({4, 2}, {0, 0, 1, 1, 0, 0, 1, 1});
  const auto nb = feature_neighbors(dup, 2);
  CHECK(nb[0] == std::vector<std::uint32_t>{2, 1});
  CHECK(nb[3] == std::vector<std::uint32_t>{1, 0});
  CHECK(feature_neighbors(Tensor({1, 2}, {1, 1}), 5)[0].empty());
}

TEST_CASE("graph_aggregate matches direct edge evaluation") {
  const NetConfig c = small_config();
  const WeightSet ws = random_weights(c, 21);
  const Tensor feats = random_tensor(30, 8, 22);
  const Tensor out = graph_aggregate(feats, 4, ws);
  REQUIRE(out.shape == std::vector<std::uint32_t>{30, 16});
  const auto nb = feature_neighbors(apply_transform(feats, feature_transform(feats, ws)), 4);
  for (std::size_t i = 0; i < 30; ++i) {
    const auto want = edge_oracle(feats, i, nb[i], ws, 2);
    for (std::size_t col = 0; col < 16; ++col) CHECK(std::abs(out.row(i)[col] - want[col]) < 1e-5);
  }

  SUBCASE("single point uses its self edge") {
    const Tensor one = random_tensor(1, 8, 23);
    const Tensor o1 = graph_aggregate(one, 20, ws);
    const auto want = edge_oracle(one, 0, {0}, ws, 2);
    for (std::size_t col = 0; col < 16; ++col) CHECK(std::abs(o1.row(0)[col] - want[col]) < 1e-6);
  }
  SUBCASE("duplicate points give identical rows") {
    const Tensor two({2, 8}, std::vector<float>(16, 0.3f));
    const Tensor o2 = graph_aggregate(two, 3, ws);
    CHECK(std::equal(o2.row(0).begin(), o2.row(0).end(), o2.row(1).begin()));
  }
  SUBCASE("errors") {
    CHECK(error_of([&] { graph_aggregate(Tensor({0, 8}), 4, ws); }) == ErrorCode::ShapeError);
    CHECK(error_of([&] { graph_aggregate(random_tensor(5, 6, 1), 4, ws); }) == ErrorCode::ShapeError);
  }
}

TEST_CASE("netvlad") {
  const NetConfig c = small_config();
  const WeightSet ws = random_weights(c, 31);
  const Tensor feats = random_tensor(60, 32, 32);
  const Descriptor d = netvlad(feats, ws);
  REQUIRE(d.size() == 256);
  double norm = 0.0;
  for (float v : d) norm += double(v) * v;
  CHECK(std::abs(std::sqrt(norm) - 1.0) < 1e-5);

  const Descriptor p = netvlad(permute_rows(feats, random_perm(60, 3)), ws);
  double linf = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) linf = std::max(linf, double(std::abs(d[i] - p[i])));
  CHECK(linf < 1e-6);

  const Descriptor one = netvlad(random_tensor(1, 32, 4), ws);
  CHECK(one.size() == 256);

  // Double-precision reference of soft assignment, residuals and projection.
  const Tensor& centers = ws.at("vlad.centers");
  const Tensor& aw = ws.at("vlad.assign.weight");
  const Tensor& ab = ws.at("vlad.assign.bias");
  const Tensor& pw = ws.at("proj.weight");
  const Tensor& pb = ws.at("proj.bias");
  const std::size_t K = 4, F = 32;
  std::vector<double> v(K * F, 0.0);
  for (std::size_t i = 0; i < 60; ++i) {
    std::vector<double> logit(K);
    double mx = -1e300;
    for (std::size_t k = 0; k < K; ++k) {
      logit[k] = ab.data[k];
      for (std::size_t j = 0; j < F; ++j) logit[k] += double(aw.data[k * F + j]) * feats.row(i)[j];
      mx = std::max(mx, logit[k]);
    }
    double z = 0.0;
    for (double& l : logit) z += (l = std::exp(l - mx));
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t j = 0; j < F; ++j) v[k * F + j] += logit[k] / z * (feats.row(i)[j] - double(centers.data[k * F + j]));
    }
  }
  for (std::size_t k = 0; k < K; ++k) {
    double s = 0.0;
    for (std::size_t j = 0; j < F; ++j) s += v[k * F + j] * v[k * F + j];
    for (std::size_t j = 0; j < F; ++j) v[k * F + j] /= std::sqrt(s);
  }
  std::vector<double> out(256);
  double on = 0.0;
  for (std::size_t o = 0; o < 256; ++o) {
    out[o] = pb.data[o];
    for (std::size_t j = 0; j < K * F; ++j) out[o] += double(pw.data[o * K * F + j]) * v[j];
    on += out[o] * out[o];
  }
  for (std::size_t o = 0; o < 256; ++o) CHECK(std::abs(d[o] - out[o] / std::sqrt(on)) < 1e-5);
}

TEST_CASE("describe") {
  const NetConfig c = small_config();
  const WeightSet ws = random_weights(c, 41);
  const Submap s = random_submap(300, 42);
  const LocalFeatures lf = local_features(s, 20);
  const Descriptor d = describe(s, lf, ws, c);
  REQUIRE(d.size() == 256);

  SUBCASE("joint permutation of points and features") {
    const auto perm = random_perm(300, 7);
    Submap ps;
    LocalFeatures plf;
    for (std::size_t i : perm) {
      ps.points.push_back(s.points[i]);
      plf.push_back(lf[i]);
    }
    const Descriptor pd = describe(ps, plf, ws, c);
    double linf = 0.0;
    for (std::size_t i = 0; i < 256; ++i) linf = std::max(linf, double(std::abs(d[i] - pd[i])));
    CHECK(linf < 1e-6);
  }
  SUBCASE("golden descriptor") {
    const float expect[8] = {0.095202595f,   0.0300053358f, -0.00906957872f, -0.00716663431f,
                              -0.0683757812f, 0.0322904363f, -0.067629911f,   -0.000130922737f};
    for (std::size_t i = 0; i < 8; ++i) CHECK(d[i] == doctest::Approx(expect[i]).epsilon(1e-5));
    CHECK(describe(s, lf, ws, c) == d);
  }
  SUBCASE("bit-stable across thread counts") {
    setenv("SEQLPD_THREADS", "1", 1);
    const Descriptor one = describe(s, lf, ws, c);
    setenv("SEQLPD_THREADS", "4", 1);
    const Descriptor four = describe(s, lf, ws, c);
    unsetenv("SEQLPD_THREADS");
    CHECK(one == d);
    CHECK(four == d);
  }
  SUBCASE("row mismatch") {
    LocalFeatures shortlf(lf.begin(), lf.end() - 1);
    CHECK(error_of([&] { describe(s, shortlf, ws, c); }) == ErrorCode::ShapeError);
  }
}

TEST_CASE("describe with the default architecture on a 4096-point submap") {
  const NetConfig c;
  const WeightSet ws = random_weights(c, 1);
  PointCloud cloud;
  cloud.points = testsupport::uniform_points(5000, -10, 10, 3);
  const Submap s = normalize_submap(cloud, 4096, 1);
  const Descriptor d = describe(s, local_features(s, 20), ws, c);
  REQUIRE(d.size() == 256);
  double norm = 0.0;
  for (float v : d) norm += double(v) * v;
  CHECK(std::abs(std::sqrt(norm) - 1.0) < 1e-5);
}

TEST_CASE("lazy quadruplet loss") {
  const std::size_t dim = 4;
  auto vec = [](std::initializer_list<float> v) { return Descriptor(v); };

  SUBCASE("satisfied margins give zero") {
    const Descriptor a = vec({1, 0, 0, 0});
    const Descriptor neg_star = vec({0, 0, 0, 1});
    CHECK(lazy_quadruplet_loss(a, {a}, {vec({0, 1, 0, 0}), vec({0, 0, 1, 0})}, neg_star) == 0.0);
  }
  SUBCASE("hand-evaluated hinge") {
    // d(a,p) = 0.25, d(a,n) = 0.5, alpha 0.5; second term off: beta 0, d(n*, n) = 1.
    const Descriptor a = vec({0, 0, 0, 0});
    const Descriptor p = vec({0.5f, 0, 0, 0});
    const Descriptor n = vec({0, std::sqrt(0.5f), 0, 0});
    const Descriptor ns = vec({0, std::sqrt(0.5f), 1, 0});
    const double loss = lazy_quadruplet_loss(a, {p}, {n}, ns, {0.5, 0.0});
    CHECK(loss == doctest::Approx(0.25).epsilon(1e-7));
    CHECK(lazy_quadruplet_loss(a, {p}, {n}, ns, {1.5, 0.0}) == doctest::Approx(loss + 1.0).epsilon(1e-7));
  }
  SUBCASE("non-negative and non-decreasing in both margins") {
    std::mt19937_64 rng(8);
    for (int t = 0; t < 200; ++t) {
      const Descriptor a = testsupport::random_descriptor(dim, rng);
      std::vector<Descriptor> pos = {testsupport::random_descriptor(dim, rng), testsupport::random_descriptor(dim, rng)};
      std::vector<Descriptor> neg;
      for (int j = 0; j < 18; ++j) neg.push_back(testsupport::random_descriptor(dim, rng));
      const Descriptor ns = testsupport::random_descriptor(dim, rng);
      double prev = -1.0;
      for (double m = 0.0; m <= 2.0; m += 0.25) {
        const double l = lazy_quadruplet_loss(a, pos, neg, ns, {m, 0.2});
        CHECK(l >= 0.0);
        CHECK(l >= prev);
        prev = l;
      }
      prev = -1.0;
      for (double m = 0.0; m <= 2.0; m += 0.25) {
        const double l = lazy_quadruplet_loss(a, pos, neg, ns, {0.5, m});
        CHECK(l >= prev);
        prev = l;
      }
    }
  }
  SUBCASE("errors") {
    const Descriptor a = vec({1, 0, 0, 0});
    CHECK(error_of([&] { lazy_quadruplet_loss(a, {}, {a}, a); }) == ErrorCode::EmptyInput);
    CHECK(error_of([&] { lazy_quadruplet_loss(a, {a}, {}, a); }) == ErrorCode::EmptyInput);
    CHECK(error_of([&] { lazy_quadruplet_loss(a, {vec({1, 0})}, {a}, a); }) == ErrorCode::DimensionError);
  }
}

TEST_CASE("baseline descriptor") {
  const Submap s = random_submap(2000, 5);
  const LocalFeatures lf = local_features(s, 20);
  const Descriptor d = baseline_descriptor(s, lf);
  REQUIRE(d.size() == 256);
  double norm = 0.0;
  for (float v : d) norm += double(v) * v;
  CHECK(std::abs(std::sqrt(norm) - 1.0) < 1e-6);
  CHECK(baseline_descriptor(s, lf) == d);

  const auto perm = random_perm(2000, 6);
  Submap ps;
  LocalFeatures plf;
  for (std::size_t i : perm) {
    ps.points.push_back(s.points[i]);
    plf.push_back(lf[i]);
  }
  CHECK(baseline_descriptor(ps, plf) == d);

  // Flat plane against a field of vertical poles.
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-10, 10);
  PointCloud plane, poles;
  for (int i = 0; i < 4096; ++i) plane.points.push_back({u(rng), u(rng), 0.01 * u(rng)});
  for (int i = 0; i < 4096; ++i) {
    const int pole = i % 16;
    poles.points.push_back({-8.0 + pole + 0.05 * u(rng), -8.0 + (pole * 7 % 16) + 0.05 * u(rng), 0.5 * (u(rng) + 10)});
  }
  const Submap sp = normalize_submap(plane, 4096, 0), sq = normalize_submap(poles, 4096, 0);
  const Descriptor dp = baseline_descriptor(sp, local_features(sp, 20));
  const Descriptor dq = baseline_descriptor(sq, local_features(sq, 20));
  double dist = 0.0;
  for (std::size_t i = 0; i < 256; ++i) dist += double(dp[i] - dq[i]) * (dp[i] - dq[i]);
  dist = std::sqrt(dist);
  CHECK(dist > 0.1);
  CHECK(dist == doctest::Approx(1.31140538388).epsilon(1e-6));
}

TEST_CASE("lazy quadruplet loss equals the hinge oracle on random batches") {
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int batch = 0; batch < 100; ++batch) {
    const std::size_t dim = 8 + rng() % 64;
    auto draw = [&] { return testsupport::random_descriptor(dim, rng); };
    const Descriptor a = draw(), ns = draw();
    std::vector<Descriptor> pos, neg;
    for (int i = 0; i < 2; ++i) pos.push_back(draw());
    for (int i = 0; i < 18; ++i) neg.push_back(draw());
    const double alpha = u(rng), beta = u(rng);
    CHECK(std::abs(lazy_quadruplet_loss(a, pos, neg, ns, {alpha, beta}) -
                   oracle::quadruplet_oracle(a, pos, neg, ns, alpha, beta)) < 1e-7);
  }
}
