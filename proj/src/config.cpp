#include "seqlpd/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>

#include "seqlpd/error.hpp"

namespace seqlpd {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) {
    throw Error(ErrorCode::InvalidParams, "bad value '" + value + "' for " + key);
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw Error(ErrorCode::InvalidParams, "bad value '" + value + "' for " + key);
}

}  // namespace

void Config::set(const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  using Setter = std::function<void(const std::string&)>;
  auto size = [&](std::size_t& f) { return Setter([&f, key](const std::string& v) { f = parse_number<std::size_t>(key, v); }); };
  auto real = [&](double& f) { return Setter([&f, key](const std::string& v) { f = parse_number<double>(key, v); }); };
  const std::map<std::string, Setter> setters = {
      {"k_local", size(k_local)},
      {"k_graph", size(k_graph)},
      {"n_sub", size(n_sub)},
      {"descriptor_dim", size(descriptor_dim)},
      {"vlad_clusters", size(vlad_clusters)},
      {"alpha", real(alpha)},
      {"beta", real(beta)},
      {"p_pos", size(p_pos)},
      {"p_neg", size(p_neg)},
      {"window", size(window)},
      {"W", size(window)},
      {"v_min", real(v_min)},
      {"v_max", real(v_max)},
      {"v_step", real(v_step)},
      {"accept_ratio", real(accept_ratio)},
      {"exclusion", [this, key](const std::string& v) { exclusion = parse_number<std::size_t>(key, v); }},
      {"reverse", [this, key](const std::string& v) { reverse = parse_bool(key, v); }},
      {"D", [this, key](const std::string& v) { d_max = parse_number<double>(key, v); }},
      {"k_max", [this, key](const std::string& v) { k_max = parse_number<std::size_t>(key, v); }},
      {"K_max", [this, key](const std::string& v) { k_max = parse_number<std::size_t>(key, v); }},
      {"iters_max", size(iters_max)},
      {"gt_radius", [this, key](const std::string& v) { gt_radius = parse_number<double>(key, v); }},
      {"min_successes", size(min_successes)},
      {"trajectory_len", real(trajectory_len)},
      {"seed", [this, key](const std::string& v) { seed = parse_number<std::uint64_t>(key, v); }},
  };
  const auto it = setters.find(trim(key));
  if (it == setters.end()) throw Error(ErrorCode::InvalidParams, "unknown config key '" + key + "'");
  it->second(value);
}

void Config::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidParams, path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    }
    set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

void Config::validate() const {
  if (k_local < 2) throw Error(ErrorCode::InvalidParams, "k_local must be >= 2");
  if (n_sub < 1) throw Error(ErrorCode::InvalidParams, "n_sub must be >= 1");
  if (descriptor_dim != kDescriptorDim) throw Error(ErrorCode::InvalidParams, "descriptor_dim must be 256");
  if (p_pos < 1 || p_neg < 1) throw Error(ErrorCode::InvalidParams, "p_pos and p_neg must be >= 1");
  if (alpha < 0.0 || beta < 0.0) throw Error(ErrorCode::InvalidParams, "margins must be >= 0");
  if (!(trajectory_len > 0.0)) throw Error(ErrorCode::InvalidParams, "trajectory_len must be > 0");
  if (min_successes < 1 || min_successes > 5) throw Error(ErrorCode::InvalidParams, "min_successes must lie in [1, 5]");
  if (d_max && !(*d_max > 0.0)) throw Error(ErrorCode::InvalidParams, "D must be > 0");
  if (gt_radius && !(*gt_radius > 0.0)) throw Error(ErrorCode::InvalidParams, "gt_radius must be > 0");
  net().validate();
  match().validate();
}

NetConfig Config::net() const {
  NetConfig c;
  c.k_graph = k_graph;
  c.vlad_clusters = vlad_clusters;
  c.descriptor_dim = descriptor_dim;
  return c;
}

MatchParams Config::match() const {
  MatchParams p;
  p.window = window;
  p.v_min = v_min;
  p.v_max = v_max;
  p.v_step = v_step;
  p.accept_ratio = accept_ratio;
  p.exclusion = exclusion;
  p.reverse = reverse;
  return p;
}

ClusterParams Config::cluster(std::size_t entries) const {
  if (!d_max) throw Error(ErrorCode::InvalidParams, "D is required for clustering");
  ClusterParams p;
  p.d_max = *d_max;
  p.k_max = k_max.value_or(std::min<std::size_t>(20, entries));
  p.iters_max = iters_max;
  p.seed = seed;
  p.validate(entries);
  return p;
}

}  // namespace seqlpd
