#include "seqlpd/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "seqlpd/error.hpp"

namespace seqlpd::synth {
namespace {

using Normal = std::normal_distribution<double>;
using Uniform = std::uniform_real_distribution<double>;

enum class Shape { Pole, Box, Tree, Wall };

struct Landmark {
  Shape shape;
  double x, y;       // footprint center
  double a, b;       // radius / half extents
  double height;
  double heading;    // wall orientation
};

double surface_area(const Landmark& l) {
  switch (l.shape) {
    case Shape::Pole: return 2.0 * std::numbers::pi * l.a * l.height;
    case Shape::Box: return 4.0 * (l.a + l.b) * l.height + 4.0 * l.a * l.b;
    case Shape::Tree: return 2.0 * std::numbers::pi * 0.25 * l.height + 4.0 * std::numbers::pi * l.a * l.a;
    case Shape::Wall: return 4.0 * l.a * l.height;
  }
  return 0.0;
}

Point3 sample_surface(const Landmark& l, std::mt19937_64& rng) {
  Uniform u(0.0, 1.0);
  const double two_pi = 2.0 * std::numbers::pi;
  switch (l.shape) {
    case Shape::Pole: {
      const double t = two_pi * u(rng);
      return {l.x + l.a * std::cos(t), l.y + l.a * std::sin(t), l.height * u(rng)};
    }
    case Shape::Box: {
      const double side = 4.0 * (l.a + l.b) * l.height;
      const double roof = 4.0 * l.a * l.b;
      if (u(rng) * (side + roof) < roof) {
        return {l.x + l.a * (2.0 * u(rng) - 1.0), l.y + l.b * (2.0 * u(rng) - 1.0), l.height};
      }
      const double s = u(rng) * 4.0 * (l.a + l.b);  // walk the perimeter
      const double z = l.height * u(rng);
      if (s < 2.0 * l.a) return {l.x - l.a + s, l.y - l.b, z};
      if (s < 2.0 * l.a + 2.0 * l.b) return {l.x + l.a, l.y - l.b + (s - 2.0 * l.a), z};
      if (s < 4.0 * l.a + 2.0 * l.b) return {l.x + l.a - (s - 2.0 * l.a - 2.0 * l.b), l.y + l.b, z};
      return {l.x - l.a, l.y + l.b - (s - 4.0 * l.a - 2.0 * l.b), z};
    }
    case Shape::Tree: {
      const double trunk = 2.0 * std::numbers::pi * 0.25 * l.height;
      const double crown = 4.0 * std::numbers::pi * l.a * l.a;
      if (u(rng) * (trunk + crown) < trunk) {
        const double t = two_pi * u(rng);
        return {l.x + 0.25 * std::cos(t), l.y + 0.25 * std::sin(t), l.height * u(rng)};
      }
      const double z = 2.0 * u(rng) - 1.0, t = two_pi * u(rng), r = std::sqrt(1.0 - z * z);
      return {l.x + l.a * r * std::cos(t), l.y + l.a * r * std::sin(t), l.height + l.a + l.a * z};
    }
    case Shape::Wall: {
      const double s = l.a * (2.0 * u(rng) - 1.0);
      return {l.x + s * std::cos(l.heading), l.y + s * std::sin(l.heading), l.height * u(rng)};
    }
  }
  return {};
}

// Landmark mix of one stretch of the route.
Landmark random_landmark(int style, double x, double y, double heading, std::mt19937_64& rng) {
  Uniform u(0.0, 1.0);
  const double pick = u(rng);
  switch (style) {
    case 0:  // downtown: tall boxes
      return {Shape::Box, x, y, 2.0 + 4.0 * u(rng), 2.0 + 4.0 * u(rng), 8.0 + 14.0 * u(rng), heading};
    case 1:  // park: trees
      return {Shape::Tree, x, y, 1.5 + 2.5 * u(rng), 0.0, 2.0 + 5.0 * u(rng), heading};
    case 2:  // street furniture: poles and low walls
      if (pick < 0.6) return {Shape::Pole, x, y, 0.15 + 0.2 * u(rng), 0.0, 3.0 + 7.0 * u(rng), heading};
      return {Shape::Wall, x, y, 3.0 + 8.0 * u(rng), 0.0, 0.8 + 2.0 * u(rng), heading};
    default:  // suburb: small houses and trees
      if (pick < 0.5) return {Shape::Box, x, y, 3.0 + 2.0 * u(rng), 3.0 + 2.0 * u(rng), 3.0 + 4.0 * u(rng), heading};
      return {Shape::Tree, x, y, 1.0 + 2.0 * u(rng), 0.0, 1.5 + 3.0 * u(rng), heading};
  }
}

double ground_height(double x, double y) { return 0.4 * std::sin(x / 9.0) * std::cos(y / 13.0); }

PointCloud observe_world(const std::vector<Landmark>& world, const Pose& pose, const SceneOptions& opt,
                         std::uint64_t frame_seed) {
  std::mt19937_64 rng(frame_seed);
  Uniform u(0.0, 1.0);
  Normal noise(0.0, 1.0);
  const double range = opt.sensor_range;

  std::vector<const Landmark*> visible;
  std::vector<double> weight;
  double total = 0.0;
  for (const Landmark& l : world) {
    if (std::hypot(l.x - pose.x, l.y - pose.y) <= range) {
      visible.push_back(&l);
      total += surface_area(l);
      weight.push_back(total);
    }
  }

  PointCloud cloud;
  cloud.points.reserve(opt.points_per_frame);
  const std::size_t ground_points = visible.empty() ? opt.points_per_frame : opt.points_per_frame * 2 / 5;
  for (std::size_t i = 0; i < opt.points_per_frame; ++i) {
    Point3 p;
    if (i < ground_points) {
      const double r = range * std::sqrt(u(rng)), t = 2.0 * std::numbers::pi * u(rng);
      p = {pose.x + r * std::cos(t), pose.y + r * std::sin(t), 0.0};
      p.z = ground_height(p.x, p.y);
    } else {
      const double w = u(rng) * total;
      const std::size_t k = static_cast<std::size_t>(std::upper_bound(weight.begin(), weight.end(), w) - weight.begin());
      p = sample_surface(*visible[std::min(k, visible.size() - 1)], rng);
      p.z += ground_height(p.x, p.y);
    }
    if (opt.noise > 0.0) {
      p.x += opt.noise * noise(rng);
      p.y += opt.noise * noise(rng);
      p.z += opt.noise * noise(rng);
    }
    cloud.points.push_back(p - pose.position());
  }
  return cloud;
}

// Landmarks scattered beside a route given by its pose samples.
std::vector<Landmark> build_world(const std::vector<Pose>& route, double step, std::mt19937_64& rng) {
  Uniform u(0.0, 1.0);
  std::vector<Landmark> world;
  const std::size_t segment = 6;  // poses per style stretch
  int style = 0;
  for (std::size_t i = 0; i < route.size(); ++i) {
    if (i % segment == 0) style = static_cast<int>(u(rng) * 4.0) % 4;
    const Pose& a = route[i];
    const Pose& b = route[(i + 1) % route.size()];
    double heading = std::atan2(b.y - a.y, b.x - a.x);
    if (i + 1 == route.size() && route.size() > 1) {
      heading = std::atan2(a.y - route[i - 1].y, a.x - route[i - 1].x);
    }
    const std::size_t count = 2 + static_cast<std::size_t>(u(rng) * 4.0);
    for (std::size_t c = 0; c < count; ++c) {
      const double along = step * u(rng);
      const double side = (u(rng) < 0.5 ? -1.0 : 1.0) * (5.0 + 10.0 * u(rng));
      const double x = a.x + along * std::cos(heading) - side * std::sin(heading);
      const double y = a.y + along * std::sin(heading) + side * std::cos(heading);
      world.push_back(random_landmark(style, x, y, heading, rng));
    }
  }
  return world;
}

std::vector<Landmark> blob_world(int type, std::mt19937_64& rng) {
  Uniform u(0.0, 1.0);
  std::vector<Landmark> world;
  if (type == 0) return world;  // open ground
  for (int i = 0; i < 40; ++i) {
    const double r = 4.0 + 14.0 * u(rng), t = 2.0 * std::numbers::pi * u(rng);
    const double x = r * std::cos(t), y = r * std::sin(t);
    if (type == 1) {
      world.push_back({Shape::Pole, x, y, 0.2 + 0.1 * u(rng), 0.0, 6.0 + 2.0 * u(rng), 0.0});
    } else if (i < 8) {
      world.push_back({Shape::Box, x, y, 2.5 + u(rng), 2.5 + u(rng), 16.0 + 4.0 * u(rng), 0.0});
    }
  }
  return world;
}

std::uint64_t frame_seed(std::uint64_t seed, std::size_t frame) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(frame), 0x5eedu};
  std::uint32_t w[2];
  seq.generate(w, w + 2);
  return (static_cast<std::uint64_t>(w[0]) << 32) | w[1];
}

}  // namespace

Descriptor normalized(Descriptor d) {
  double s = 0.0;
  for (float v : d) s += static_cast<double>(v) * v;
  const double inv = s > 0.0 ? 1.0 / std::sqrt(s) : 0.0;
  for (float& v : d) v = static_cast<float>(v * inv);
  return d;
}

Descriptor random_unit(std::size_t dim, std::size_t first, std::size_t count, std::mt19937_64& rng) {
  if (first + count > dim || count == 0) throw Error(ErrorCode::InvalidParams, "subspace outside descriptor");
  Normal g(0.0, 1.0);
  Descriptor d(dim, 0.0f);
  for (std::size_t i = 0; i < count; ++i) d[first + i] = static_cast<float>(g(rng));
  return normalized(std::move(d));
}

BlobSet blobs(std::size_t n_blobs, std::size_t per_blob, double sigma, double separation, std::size_t dim,
              std::uint64_t seed) {
  if (n_blobs > dim) throw Error(ErrorCode::InvalidParams, "more blobs than dimensions");
  std::mt19937_64 rng(seed);
  Normal g(0.0, sigma);
  BlobSet out;
  const double c = separation / std::numbers::sqrt2;
  for (std::size_t b = 0; b < n_blobs; ++b) {
    for (std::size_t i = 0; i < per_blob; ++i) {
      Descriptor d(dim);
      for (std::size_t k = 0; k < dim; ++k) d[k] = static_cast<float>((k == b ? c : 0.0) + g(rng));
      out.descriptors.push_back(std::move(d));
      out.labels.push_back(static_cast<std::uint32_t>(b));
    }
  }
  return out;
}

DescriptorRoute descriptor_route(const RouteOptions& o, std::uint64_t seed) {
  if (o.segment_min < 1 || o.segment_max < o.segment_min) throw Error(ErrorCode::InvalidParams, "bad segment lengths");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> seg_len(o.segment_min, o.segment_max);
  DescriptorRoute route;
  std::uint32_t seg = 0;
  Descriptor seg_vec;
  std::size_t left = 0;
  for (std::size_t i = 0; i < o.places; ++i) {
    if (left == 0) {
      if (i > 0) ++seg;
      left = seg_len(rng);
      seg_vec = random_unit(o.dim, o.subspace_first, o.subspace_count, rng);
    }
    --left;
    const Descriptor own = random_unit(o.dim, o.subspace_first, o.subspace_count, rng);
    Descriptor d(o.dim);
    for (std::size_t k = 0; k < o.dim; ++k) {
      d[k] = static_cast<float>(o.segment_weight * seg_vec[k] + o.place_weight * own[k]);
    }
    route.places.push_back(normalized(std::move(d)));
    route.segment.push_back(seg);
  }
  return route;
}

Descriptor observe(const Descriptor& place, double sigma, std::mt19937_64& rng) {
  if (sigma <= 0.0) return place;
  Normal g(0.0, sigma);
  Descriptor d = place;
  for (float& v : d) v = static_cast<float>(v + g(rng));
  return normalized(std::move(d));
}

PlaceMap make_map(const std::vector<Descriptor>& descriptors, std::uint64_t first_id, double step) {
  PlaceMap map(descriptors.empty() ? kDescriptorDim : descriptors.front().size());
  for (std::size_t i = 0; i < descriptors.size(); ++i) {
    PlaceEntry e;
    e.frame_id = first_id + i;
    e.pose = {step * static_cast<double>(i), 0.0, 0.0, e.frame_id};
    e.descriptor = descriptors[i];
    map.insert(std::move(e));
  }
  return map;
}

Scenario parse_scenario(const std::string& name) {
  if (name == "loop") return Scenario::Loop;
  if (name == "blobs") return Scenario::Blobs;
  if (name == "line") return Scenario::Line;
  throw Error(ErrorCode::InvalidParams, "unknown scenario '" + name + "' (loop, blobs, line)");
}

std::string scenario_name(Scenario s) {
  switch (s) {
    case Scenario::Loop: return "loop";
    case Scenario::Blobs: return "blobs";
    case Scenario::Line: return "line";
  }
  return "?";
}

SceneCorpus scene_corpus(Scenario scenario, const SceneOptions& opt, std::uint64_t seed) {
  if (opt.frames < 1 || !(opt.step > 0.0) || !(opt.sensor_range > 0.0) || opt.noise < 0.0 ||
      opt.points_per_frame < 1) {
    throw Error(ErrorCode::InvalidParams, "invalid synthetic scene options");
  }
  std::mt19937_64 rng(seed);
  SceneCorpus corpus;
  if (scenario == Scenario::Blobs) {
    for (std::size_t i = 0; i < opt.frames; ++i) {
      const int type = static_cast<int>(i % 3);
      std::mt19937_64 world_rng(frame_seed(seed, i) ^ 0x9e3779b97f4a7c15ull);
      const auto world = blob_world(type, world_rng);
      const Pose pose{1000.0 * static_cast<double>(i), 0.0, 0.0, i};
      std::vector<Landmark> shifted = world;
      for (Landmark& l : shifted) {
        l.x += pose.x;
        l.y += pose.y;
      }
      PointCloud f = observe_world(shifted, pose, opt, frame_seed(seed, i));
      f.frame_id = i;
      corpus.frames.push_back(std::move(f));
      corpus.poses.push_back(pose);
      corpus.labels.push_back(static_cast<std::uint32_t>(type));
    }
    return corpus;
  }

  std::vector<Pose> route;
  if (scenario == Scenario::Loop) {
    const double radius = static_cast<double>(opt.frames) * opt.step / (2.0 * std::numbers::pi);
    for (std::size_t i = 0; i < opt.frames; ++i) {
      const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(opt.frames);
      route.push_back({radius * std::cos(t), radius * std::sin(t), 0.0, i});
    }
  } else {
    for (std::size_t i = 0; i < opt.frames; ++i) route.push_back({opt.step * static_cast<double>(i), 0.0, 0.0, i});
  }
  const auto world = build_world(route, opt.step, rng);
  const std::size_t laps = scenario == Scenario::Loop ? 2 : 1;
  for (std::size_t lap = 0; lap < laps; ++lap) {
    for (std::size_t i = 0; i < route.size(); ++i) {
      const std::size_t id = lap * route.size() + i;
      Pose pose = route[i];
      pose.frame_id = id;
      PointCloud f = observe_world(world, pose, opt, frame_seed(seed, id));
      f.frame_id = id;
      corpus.frames.push_back(std::move(f));
      corpus.poses.push_back(pose);
      if (lap > 0) corpus.ground_truth.emplace_back(id, i);
    }
  }
  return corpus;
}

void write_corpus(const SceneCorpus& corpus, Scenario scenario, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string());
  for (std::size_t i = 0; i < corpus.frames.size(); ++i) {
    std::ostringstream name;
    name << std::setw(6) << std::setfill('0') << i << ".bin";
    save_kitti_bin(corpus.frames[i], dir / name.str());
  }
  std::ofstream poses(dir / "poses.csv");
  poses << std::setprecision(17) << "frame_id,x,y,z\n";
  for (const Pose& p : corpus.poses) poses << p.frame_id << ',' << p.x << ',' << p.y << ',' << p.z << '\n';
  std::ofstream gt(dir / "ground_truth.csv");
  if (scenario == Scenario::Blobs) {
    gt << "frame_id,label\n";
    for (std::size_t i = 0; i < corpus.labels.size(); ++i) gt << i << ',' << corpus.labels[i] << '\n';
  } else {
    gt << "query_frame,ref_frame\n";
    for (const auto& [q, r] : corpus.ground_truth) gt << q << ',' << r << '\n';
  }
  if (!poses || !gt) throw Error(ErrorCode::IoError, "write failed in " + dir.string());
}

}  // namespace seqlpd::synth
