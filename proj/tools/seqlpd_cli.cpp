// seqlpd: descriptor extraction, place clustering, loop detection and
// evaluation from the command line. Every failure prints one "E:<code>:<detail>"
// line on stderr and exits with status 2.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "seqlpd/cloud.hpp"
#include "seqlpd/cluster.hpp"
#include "seqlpd/config.hpp"
#include "seqlpd/error.hpp"
#include "seqlpd/eval.hpp"
#include "seqlpd/features.hpp"
#include "seqlpd/net.hpp"
#include "seqlpd/pipeline.hpp"
#include "seqlpd/placemap.hpp"
#include "seqlpd/seqmatch.hpp"
#include "seqlpd/simd/kernels.hpp"
#include "seqlpd/synth.hpp"

namespace fs = std::filesystem;
using namespace seqlpd;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value
  std::optional<std::uint64_t> seed;
};

Config build_config(const Common& c) {
  Config cfg;
  if (!c.config_path.empty()) cfg.load_file(c.config_path);
  for (const std::string& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::InvalidParams, "--set expects key=value, got " + kv);
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.seed) cfg.seed = *c.seed;
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "key = value config file");
  cmd->add_option("--set", c.overrides, "override one config key (key=value), repeatable");
  cmd->add_option("--seed", c.seed, "random seed");
}

// Frame source for describe / match / eval.
struct DescribeOptions {
  std::string weights;
  bool baseline = false;
};

struct Frames {
  std::vector<fs::path> files;
  std::vector<Pose> poses;  // empty when the directory has no poses.csv
};

Frames list_frames(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::IoError, "not a directory: " + dir.string());
  Frames f;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string name = e.path().filename().string();
    const std::string ext = e.path().extension().string();
    if (name == "poses.csv" || name == "ground_truth.csv") continue;
    if (ext == ".bin" || ext == ".csv") f.files.push_back(e.path());
  }
  std::sort(f.files.begin(), f.files.end());
  if (f.files.empty()) throw Error(ErrorCode::EmptyInput, "no .bin or .csv frames in " + dir.string());

  const fs::path poses_path = dir / "poses.csv";
  if (fs::exists(poses_path)) {
    std::ifstream in(poses_path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line.rfind("frame_id", 0) == 0) continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream ss(line);
      Pose p;
      if (!(ss >> p.frame_id >> p.x >> p.y >> p.z)) {
        throw Error(ErrorCode::FormatError, poses_path.string() + ": malformed line " + std::to_string(line_no));
      }
      f.poses.push_back(p);
    }
    if (f.poses.size() != f.files.size()) {
      throw Error(ErrorCode::LengthMismatch, std::to_string(f.files.size()) + " frames vs " +
                                                 std::to_string(f.poses.size()) + " poses");
    }
  }
  return f;
}

PointCloud load_frame(const fs::path& p) {
  return p.extension() == ".bin" ? load_kitti_bin(p) : load_csv(p);
}

class Describer {
 public:
  Describer(const DescribeOptions& opt, const Config& cfg) : cfg_(cfg), opt_(opt) {
    if (!opt.baseline && opt.weights.empty()) throw Error(ErrorCode::InvalidParams, "pass --weights <file> or --baseline");
    if (!opt.baseline) weights_ = load_weights(opt.weights);
  }

  // One descriptor per frame; with poses, per accumulated submap ending at the frame.
  PlaceMap run(const fs::path& dir) const {
    const Frames frames = list_frames(dir);
    FrameDescriber fd = opt_.baseline ? FrameDescriber(cfg_) : FrameDescriber(cfg_, weights_);
    PlaceMap map;
    for (std::size_t i = 0; i < frames.files.size(); ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      PlaceEntry entry = fd.push(load_frame(frames.files[i]),
                                 frames.poses.empty() ? std::nullopt : std::optional<Pose>(frames.poses[i]));
      const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      std::fprintf(stderr, "describe frame=%llu points=%zu ms=%.1f\n",
                   static_cast<unsigned long long>(entry.frame_id), fd.last_submap_points(), ms);
      map.insert(std::move(entry));
    }
    return map;
  }

 private:
  Config cfg_;
  DescribeOptions opt_;
  WeightSet weights_;
};

// A query source is either an LPDM file or a frame directory.
PlaceMap load_queries(const std::string& path, const DescribeOptions& opt, const Config& cfg) {
  if (fs::is_regular_file(path)) return load_map(path);
  list_frames(path);  // input errors before descriptor options
  return Describer(opt, cfg).run(path);
}

void add_describe_flags(CLI::App* cmd, DescribeOptions& opt) {
  cmd->add_option("--weights", opt.weights, "LPDW weight file");
  cmd->add_flag("--baseline", opt.baseline, "use the weight-free histogram descriptor");
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int cmd_describe(const std::string& input, const std::string& out, const DescribeOptions& opt, const Common& c) {
  const Config cfg = build_config(c);
  const PlaceMap map = Describer(opt, cfg).run(input);
  save_map(map, out);
  std::printf("entries=%zu dim=%zu simd=%s\n", map.size(), map.dim(),
              std::string(simd::isa_name(simd::active_isa())).c_str());
  return 0;
}

int cmd_cluster(const std::string& map_path, const std::string& out, const Common& c) {
  const Config cfg = build_config(c);
  if (!cfg.d_max) throw Error(ErrorCode::InvalidParams, "D is required (--D or --set D=...)");
  const PlaceMap map = load_map(map_path);
  if (map.empty()) throw Error(ErrorCode::EmptyInput, "empty map");
  const auto x = map_descriptors(map);
  const ClusterParams params = cfg.cluster(map.size());

  ElbowResult r;
  if (map.size() == 1) {
    r.clustering = kmeanspp(x, 1, params.seed, params.iters_max);
    r.k = r.elbow_k = 1;
    r.curve = {r.clustering.distortion};
    r.constraint_satisfied = max_member_distance(x, r.clustering) < params.d_max;
  } else {
    r = elbow_select(x, params);
  }
  const SuperKeyframes skf = super_keyframes(map, r.clustering);
  save_clusters(skf, static_cast<float>(params.d_max), out);

  std::printf("K=%zu elbow_K=%zu distortion=%.9g constraint=%s\n", r.k, r.elbow_k, r.clustering.distortion,
              r.constraint_satisfied ? "satisfied" : "unsatisfiable");
  for (std::size_t k = 0; k < skf.size(); ++k) {
    std::printf("cluster=%zu size=%zu keyframe=%llu\n", k, skf.clusters[k].members.size(),
                static_cast<unsigned long long>(map[skf.clusters[k].keyframe].frame_id));
  }
  return 0;
}

int cmd_match(const std::string& map_path, const std::string& clusters_path, const std::string& query_path,
              const DescribeOptions& opt, const std::string& pgm, const std::string& csv, const Common& c) {
  const Config cfg = build_config(c);
  const MatchParams params = cfg.match();
  const PlaceMap map = load_map(map_path);
  const StoredClusters clusters = load_clusters(clusters_path, map);
  const PlaceMap queries = load_queries(query_path, opt, cfg);
  const auto q = map_descriptors(queries);
  if (q.size() < params.window) {
    throw Error(ErrorCode::InsufficientHistory, std::to_string(q.size()) + " query frames, window needs " +
                                                    std::to_string(params.window));
  }
  if (!pgm.empty() || !csv.empty()) {
    const DifferenceMatrix m = difference_matrix(q, map_descriptors(map));
    if (!pgm.empty()) write_pgm(m, pgm);
    if (!csv.empty()) write_csv(m, csv);
  }
  for (std::size_t end = params.window; end <= q.size(); ++end) {
    const std::span<const Descriptor> window(q.data() + end - params.window, params.window);
    const MatchResult r = detect_loop(window, map, clusters.skf, params);
    const std::string ref = r.accepted ? std::to_string(r.ref_frame_id) : "none";
    std::printf("frame=%llu ref=%s v=%s score=%s accepted=%s cluster=%zu\n",
                static_cast<unsigned long long>(queries[end - 1].frame_id), ref.c_str(),
                fmt("%.2f", r.velocity).c_str(), fmt("%.6f", r.score).c_str(), r.accepted ? "true" : "false",
                r.cluster_id);
  }
  return 0;
}

int cmd_synth(const std::string& out, const std::string& scenario_name, double noise, std::size_t frames,
              const std::string& level, const Common& c) {
  const Config cfg = build_config(c);
  const synth::Scenario scenario = synth::parse_scenario(scenario_name);
  if (noise < 0.0) throw Error(ErrorCode::InvalidParams, "noise must be >= 0");
  if (frames < 1) throw Error(ErrorCode::InvalidParams, "frames must be >= 1");

  if (level == "cloud") {
    synth::SceneOptions opt;
    opt.frames = frames;
    opt.noise = noise;
    const auto corpus = synth::scene_corpus(scenario, opt, cfg.seed);
    if (scenario == synth::Scenario::Loop) {
      // First lap is the reference, second lap the revisit queries.
      synth::SceneCorpus laps[2];
      for (std::size_t i = 0; i < corpus.frames.size(); ++i) {
        synth::SceneCorpus& lap = laps[i < frames ? 0 : 1];
        lap.frames.push_back(corpus.frames[i]);
        lap.poses.push_back(corpus.poses[i]);
      }
      laps[1].ground_truth = corpus.ground_truth;
      synth::write_corpus(laps[0], scenario, fs::path(out) / "map");
      synth::write_corpus(laps[1], scenario, fs::path(out) / "queries");
      fs::copy_file(fs::path(out) / "queries" / "ground_truth.csv", fs::path(out) / "ground_truth.csv",
                    fs::copy_options::overwrite_existing);
      fs::remove(fs::path(out) / "queries" / "ground_truth.csv");
      fs::remove(fs::path(out) / "map" / "ground_truth.csv");
    } else {
      synth::write_corpus(corpus, scenario, out);
    }
    std::printf("scenario=%s frames=%zu revisits=%zu\n", scenario_name.c_str(), corpus.frames.size(),
                corpus.ground_truth.size());
    return 0;
  }
  if (level != "descriptor") throw Error(ErrorCode::InvalidParams, "level must be cloud or descriptor");

  // Descriptor-level corpus: map.lpdm (reference), queries.lpdm, ground_truth.csv.
  fs::create_directories(out);
  std::mt19937_64 rng(cfg.seed ^ 0xd1b54a32d192ed03ull);
  std::vector<Descriptor> ref, qry;
  std::vector<std::pair<std::size_t, std::size_t>> truth;
  if (scenario == synth::Scenario::Blobs) {
    const auto b = synth::blobs(3, frames, 0.01, 1.0, kDescriptorDim, cfg.seed);
    for (const auto& d : b.descriptors) ref.push_back(synth::normalized(d));
  } else {
    synth::RouteOptions ro;
    ro.places = frames;
    const auto route = synth::descriptor_route(ro, cfg.seed);
    ref = route.places;
    if (scenario == synth::Scenario::Loop) {
      for (std::size_t i = 0; i < ref.size(); ++i) {
        qry.push_back(synth::observe(ref[i], noise, rng));
        truth.emplace_back(ref.size() + i, i);
      }
    }
  }
  save_map(synth::make_map(ref, 0), fs::path(out) / "map.lpdm");
  if (!qry.empty()) {
    PlaceMap qmap(kDescriptorDim);
    for (std::size_t i = 0; i < qry.size(); ++i) {
      PlaceEntry e;
      e.frame_id = ref.size() + i;
      e.pose = {static_cast<double>(i), 0.0, 0.0, e.frame_id};  // revisits the reference poses
      e.descriptor = qry[i];
      qmap.insert(std::move(e));
    }
    save_map(qmap, fs::path(out) / "queries.lpdm");
  }
  std::ofstream gt(fs::path(out) / "ground_truth.csv");
  gt << "query_frame,ref_frame\n";
  for (const auto& [q, r] : truth) gt << q << ',' << r << '\n';
  std::printf("scenario=%s level=descriptor entries=%zu queries=%zu\n", scenario_name.c_str(), ref.size(), qry.size());
  return 0;
}

std::vector<Query> to_queries(const PlaceMap& m) {
  std::vector<Query> out;
  for (const PlaceEntry& e : m.entries()) out.push_back({e.descriptor, e.pose});
  return out;
}

int cmd_eval(const std::string& map_path, const std::string& query_path, const std::vector<std::size_t>& ns,
             const DescribeOptions& opt, const Common& c) {
  const Config cfg = build_config(c);
  if (!cfg.gt_radius) throw Error(ErrorCode::InvalidParams, "gt_radius is required (--gt-radius)");
  const PlaceMap db = load_map(map_path);
  const PlaceMap qmap = load_queries(query_path, opt, cfg);
  if (qmap.empty()) throw Error(ErrorCode::EmptyInput, "no queries");
  const auto queries = to_queries(qmap);
  const double radius = *cfg.gt_radius;

  std::printf("metric,value,N,gt_radius,db_size\n");
  for (std::size_t n : ns) {
    const RecallResult r = recall_at_n(queries, db, radius, n);
    std::printf("recall@%zu,%.4f,%zu,%g,%zu\n", n, r.percent, n, radius, db.size());
  }
  const RecallResult pct = recall_at_one_percent(queries, db, radius);
  std::printf("recall@1%%,%.4f,%zu,%g,%zu\n", pct.percent, pct.n, radius, db.size());

  std::vector<std::vector<Query>> runs;
  for (std::size_t i = 0; i + kRunLength <= queries.size(); i += kRunLength) {
    runs.emplace_back(queries.begin() + static_cast<std::ptrdiff_t>(i),
                      queries.begin() + static_cast<std::ptrdiff_t>(i + kRunLength));
  }
  const SeqProtocolResult sp = seq_protocol(runs, db, radius, cfg.min_successes);
  std::printf("seq_protocol,%.4f,1,%g,%zu\n", sp.percent, radius, db.size());
  return 0;
}

int cmd_weights(const std::string& out, const Common& c) {
  const Config cfg = build_config(c);
  save_weights(random_weights(cfg.net(), cfg.seed), out);
  std::printf("weights=%s seed=%llu\n", out.c_str(), static_cast<unsigned long long>(cfg.seed));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"seqlpd: point-cloud place descriptors and sequence-based loop detection"};
  app.require_subcommand(1);

  Common common;
  DescribeOptions dopt;
  std::string input, out, map_path, clusters_path, query_path, pgm, csv, scenario = "loop", level = "cloud";
  double noise = 0.0;
  std::optional<double> d_max, gt_radius;
  std::optional<std::size_t> k_max, frames_opt;
  std::vector<std::size_t> ns = {1};

  auto* describe_cmd = app.add_subcommand("describe", "extract one descriptor per frame into an LPDM map");
  describe_cmd->add_option("input", input, "frame directory")->required();
  describe_cmd->add_option("--out", out, "output LPDM map")->required();
  add_describe_flags(describe_cmd, dopt);
  add_common(describe_cmd, common);

  auto* cluster_cmd = app.add_subcommand("cluster", "cluster a map and select super keyframes");
  cluster_cmd->add_option("map", map_path, "LPDM map")->required();
  cluster_cmd->add_option("--out", out, "output LPDC file")->required();
  cluster_cmd->add_option("--D", d_max, "distance bound to cluster centers");
  cluster_cmd->add_option("--k-max", k_max, "largest K considered");
  add_common(cluster_cmd, common);

  auto* match_cmd = app.add_subcommand("match", "detect loops for every query window");
  match_cmd->add_option("map", map_path, "reference LPDM map")->required();
  match_cmd->add_option("clusters", clusters_path, "LPDC file for the map")->required();
  match_cmd->add_option("queries", query_path, "query frame directory or LPDM map")->required();
  match_cmd->add_option("--diffmat", pgm, "write the query x map difference matrix as PGM");
  match_cmd->add_option("--diffmat-csv", csv, "write the difference matrix as CSV");
  add_describe_flags(match_cmd, dopt);
  add_common(match_cmd, common);

  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic corpus with known revisits");
  synth_cmd->add_option("out", out, "output directory")->required();
  synth_cmd->add_option("--scenario", scenario, "loop, blobs or line");
  synth_cmd->add_option("--noise", noise, "noise sigma (meters for clouds, per component for descriptors)");
  synth_cmd->add_option("--frames", frames_opt, "frames per lap / pass / blob");
  synth_cmd->add_option("--level", level, "cloud (frames + poses) or descriptor (LPDM maps)");
  add_common(synth_cmd, common);

  auto* eval_cmd = app.add_subcommand("eval", "Recall@N, Recall@1% and the 5-frame sequence protocol");
  eval_cmd->add_option("map", map_path, "database LPDM map")->required();
  eval_cmd->add_option("queries", query_path, "query frame directory or LPDM map")->required();
  eval_cmd->add_option("--gt-radius", gt_radius, "true-positive pose radius (m)");
  eval_cmd->add_option("--n", ns, "N values for Recall@N")->delimiter(',');
  add_describe_flags(eval_cmd, dopt);
  add_common(eval_cmd, common);

  auto* weights_cmd = app.add_subcommand("weights", "write a randomly initialized LPDW weight file");
  weights_cmd->add_option("--out", out, "output LPDW file")->required();
  add_common(weights_cmd, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "E:InvalidParams:%s\n", e.what());
    return 2;
  }

  try {
    if (d_max) common.overrides.push_back("D=" + fmt("%.17g", *d_max));
    if (k_max) common.overrides.push_back("k_max=" + std::to_string(*k_max));
    if (gt_radius) common.overrides.push_back("gt_radius=" + fmt("%.17g", *gt_radius));
    if (*describe_cmd) return cmd_describe(input, out, dopt, common);
    if (*cluster_cmd) return cmd_cluster(map_path, out, common);
    if (*match_cmd) return cmd_match(map_path, clusters_path, query_path, dopt, pgm, csv, common);
    if (*synth_cmd) {
      const std::size_t default_frames = level == "descriptor" ? 200 : 60;
      return cmd_synth(out, scenario, noise, frames_opt.value_or(default_frames), level, common);
    }
    if (*eval_cmd) return cmd_eval(map_path, query_path, ns, dopt, common);
    if (*weights_cmd) return cmd_weights(out, common);
  } catch (const Error& e) {
    std::fprintf(stderr, "E:%s:%s\n", std::string(error_code_name(e.code())).c_str(), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "E:IoError:%s\n", e.what());
    return 2;
  }
  return 2;
}
