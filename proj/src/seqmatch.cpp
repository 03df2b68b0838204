#include "seqlpd/seqmatch.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include "seqlpd/error.hpp"
#include "seqlpd/kdtree.hpp"
#include "seqlpd/parallel.hpp"
#include "seqlpd/simd/kernels.hpp"

namespace seqlpd {
namespace {

// Column of the w-th query frame back from the newest one, or -1 when out of
// bounds. Reversed trajectories run forward through the reference frames.
std::ptrdiff_t project(std::size_t ref_end, double v, std::size_t w, std::size_t cols) {
  const long step = std::lround(std::abs(v) * static_cast<double>(w));
  const auto col = v < 0 ? static_cast<std::ptrdiff_t>(ref_end) + step
                         : static_cast<std::ptrdiff_t>(ref_end) - step;
  return col >= 0 && col < static_cast<std::ptrdiff_t>(cols) ? col : -1;
}

std::optional<double> score_or_none(const DifferenceMatrix& m, std::size_t ref_end, double v, std::size_t window) {
  double sum = 0.0;
  const std::size_t last = m.rows() - 1;
  for (std::size_t w = 0; w < window; ++w) {
    const std::ptrdiff_t col = project(ref_end, v, w, m.cols());
    if (col < 0) return std::nullopt;
    sum += m(last - w, static_cast<std::size_t>(col));
  }
  return sum / static_cast<double>(window);
}

struct Candidate {
  std::size_t ref_end;
  ColumnBest best;
};

bool better(const Candidate& a, const Candidate& b) {
  if (a.best.score != b.best.score) return a.best.score < b.best.score;
  return a.ref_end < b.ref_end;
}

// Best candidate and the best one outside the exclusion zone around it.
SearchResult pick(const std::vector<Candidate>& cands, std::size_t exclusion) {
  if (cands.empty()) throw Error(ErrorCode::NoValidTrajectory, "no in-bounds trajectory");
  const Candidate* best = &cands.front();
  for (const Candidate& c : cands) {
    if (better(c, *best)) best = &c;
  }
  SearchResult r{best->ref_end, best->best.velocity, best->best.score, std::nullopt};
  for (const Candidate& c : cands) {
    const std::size_t gap = c.ref_end > best->ref_end ? c.ref_end - best->ref_end : best->ref_end - c.ref_end;
    if (gap <= exclusion) continue;
    if (!r.second_best || c.best.score < *r.second_best) r.second_best = c.best.score;
  }
  return r;
}

void check_window(const DifferenceMatrix& m, std::size_t window) {
  if (window < 1) throw Error(ErrorCode::InvalidParams, "window must be >= 1");
  if (window > m.rows()) {
    throw Error(ErrorCode::WindowTooLarge,
                "window " + std::to_string(window) + " exceeds " + std::to_string(m.rows()) + " query rows");
  }
}

std::vector<Descriptor> history_descriptors(const PlaceMap& history, std::size_t begin, std::size_t end) {
  std::vector<Descriptor> out;
  out.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) out.push_back(history[i].descriptor);
  return out;
}

MatchResult to_match(const SearchResult& s, const PlaceMap& history, const MatchParams& params,
                     std::size_t cluster_id) {
  MatchResult r;
  r.ref_end = s.ref_end;
  r.ref_frame_id = history[s.ref_end].frame_id;
  r.velocity = s.velocity;
  r.score = s.score;
  r.second_best = s.second_best;
  r.accepted = s.second_best.has_value() && s.score < params.accept_ratio * *s.second_best;
  r.cluster_id = cluster_id;
  return r;
}

void check_query(std::span<const Descriptor> query_window, const PlaceMap& history, const MatchParams& params) {
  params.validate();
  if (query_window.size() != params.window) {
    throw Error(ErrorCode::InvalidParams, "query window holds " + std::to_string(query_window.size()) +
                                              " frames, expected " + std::to_string(params.window));
  }
  if (history.empty()) throw Error(ErrorCode::InsufficientHistory, "empty reference map");
}

}  // namespace

void MatchParams::validate() const {
  if (window < 1) throw Error(ErrorCode::InvalidParams, "window must be >= 1");
  if (!(v_min > 0.0) || !(v_min <= v_max)) throw Error(ErrorCode::InvalidParams, "need 0 < v_min <= v_max");
  if (!(v_step > 0.0)) throw Error(ErrorCode::InvalidParams, "v_step must be > 0");
  if (!(accept_ratio > 0.0 && accept_ratio < 1.0)) {
    throw Error(ErrorCode::InvalidParams, "accept_ratio must lie in (0, 1)");
  }
}

std::vector<double> velocity_grid(const MatchParams& params) {
  params.validate();
  const auto steps = static_cast<std::size_t>(std::floor((params.v_max - params.v_min) / params.v_step + 1e-9));
  std::vector<double> grid;
  for (std::size_t i = 0; i <= steps; ++i) grid.push_back(params.v_min + static_cast<double>(i) * params.v_step);
  if (params.reverse) {
    const std::size_t n = grid.size();
    for (std::size_t i = 0; i < n; ++i) grid.push_back(-grid[i]);
  }
  return grid;
}

DifferenceMatrix difference_matrix(std::span<const Descriptor> query, std::span<const Descriptor> ref) {
  if (query.empty() || ref.empty()) throw Error(ErrorCode::EmptyInput, "difference matrix of an empty sequence");
  const std::size_t dim = query.front().size();
  for (const auto* seq : {&query, &ref}) {
    for (const Descriptor& d : *seq) {
      if (d.size() != dim) throw Error(ErrorCode::DimensionError, "descriptor dimension mismatch");
    }
  }
  DifferenceMatrix m(query.size(), ref.size());
  parallel_for(ref.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t b = begin; b < end; ++b) {
      for (std::size_t a = 0; a < query.size(); ++a) {
        m(a, b) = std::sqrt(static_cast<double>(simd::l2sq(query[a].data(), ref[b].data(), dim)));
      }
    }
  }, 64);
  return m;
}

std::size_t coarse_match(std::span<const float> query, const SuperKeyframes& skf) {
  if (skf.size() == 0) throw Error(ErrorCode::EmptySuperKeyframes, "no super keyframes");
  if (query.size() != skf.dim) throw Error(ErrorCode::DimensionError, "query dimension mismatch");
  std::size_t best_c = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < skf.size(); ++c) {
    const ClusterKeyframe& ck = skf.clusters[c];
    const auto local = std::lower_bound(ck.members.begin(), ck.members.end(), ck.keyframe) - ck.members.begin();
    const double d = squared_distance(query.data(), ck.tree.point(static_cast<std::size_t>(local)).data(), skf.dim);
    if (d < best) {
      best = d;
      best_c = c;
    }
  }
  return best_c;
}

double trajectory_score(const DifferenceMatrix& m, std::size_t ref_end, double v, std::size_t window) {
  check_window(m, window);
  const auto s = score_or_none(m, ref_end, v, window);
  if (!s) {
    throw Error(ErrorCode::OutOfBounds, "trajectory ending at " + std::to_string(ref_end) + " with v=" +
                                            std::to_string(v) + " leaves the matrix");
  }
  return *s;
}

std::vector<std::optional<ColumnBest>> column_scores(const DifferenceMatrix& m, const MatchParams& params) {
  check_window(m, params.window);
  const std::vector<double> grid = velocity_grid(params);
  std::vector<std::optional<ColumnBest>> out(m.cols());
  parallel_for(m.cols(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      for (double v : grid) {
        const auto s = score_or_none(m, c, v, params.window);
        if (s && (!out[c] || *s < out[c]->score)) out[c] = ColumnBest{*s, v};
      }
    }
  }, 64);
  return out;
}

SearchResult sequence_search(const DifferenceMatrix& m, const MatchParams& params) {
  const auto cols = column_scores(m, params);
  std::vector<Candidate> cands;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (cols[c]) cands.push_back({c, *cols[c]});
  }
  return pick(cands, params.exclusion_radius());
}

MatchResult detect_loop(std::span<const Descriptor> query_window, const PlaceMap& history,
                        const SuperKeyframes& skf, const MatchParams& params) {
  check_query(query_window, history, params);
  const std::size_t cluster_id = coarse_match(query_window.back(), skf);

  const std::size_t h = history.size(), w = params.window;
  std::vector<char> candidate(h, 0);
  for (std::uint32_t m : skf.clusters[cluster_id].members) {
    if (m >= h) throw Error(ErrorCode::InvalidParams, "cluster member outside the reference map");
    const std::size_t lo = m >= w ? m - w : 0;
    const std::size_t hi = std::min(h - 1, std::size_t{m} + w);
    std::fill(candidate.begin() + static_cast<std::ptrdiff_t>(lo),
              candidate.begin() + static_cast<std::ptrdiff_t>(hi) + 1, 1);
  }

  std::vector<Candidate> cands;
  bool any_run = false;
  for (std::size_t begin = 0; begin < h;) {
    if (!candidate[begin]) {
      ++begin;
      continue;
    }
    std::size_t end = begin;
    while (end < h && candidate[end]) ++end;
    if (end - begin >= w) {
      any_run = true;
      const auto ref = history_descriptors(history, begin, end);
      const auto cols = column_scores(difference_matrix(query_window, ref), params);
      for (std::size_t c = 0; c < cols.size(); ++c) {
        if (cols[c]) cands.push_back({begin + c, *cols[c]});
      }
    }
    begin = end;
  }
  if (!any_run) {
    throw Error(ErrorCode::InsufficientHistory,
                "no candidate run of " + std::to_string(w) + " frames around cluster " + std::to_string(cluster_id));
  }
  SearchResult best = pick(cands, params.exclusion_radius());
  if (!best.second_best) {
    // The cluster's runs hold no competitor outside the exclusion zone; take
    // the ratio-test competitor from the whole map instead.
    const auto all = column_scores(difference_matrix(query_window, history_descriptors(history, 0, h)), params);
    for (std::size_t c = 0; c < all.size(); ++c) {
      const std::size_t gap = c > best.ref_end ? c - best.ref_end : best.ref_end - c;
      if (!all[c] || gap <= params.exclusion_radius()) continue;
      if (!best.second_best || all[c]->score < *best.second_best) best.second_best = all[c]->score;
    }
  }
  return to_match(best, history, params, cluster_id);
}

MatchResult full_search(std::span<const Descriptor> query_window, const PlaceMap& history,
                        const MatchParams& params) {
  check_query(query_window, history, params);
  const auto ref = history_descriptors(history, 0, history.size());
  return to_match(sequence_search(difference_matrix(query_window, ref), params), history, params, 0);
}

int pgm_level(double value) {
  return static_cast<int>(std::lround(255.0 * std::clamp(value, 0.0, 2.0) / 2.0));
}

void write_pgm(const DifferenceMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << "P2\n" << m.cols() << ' ' << m.rows() << "\n255\n";
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out << (c ? " " : "") << pgm_level(m(r, c));
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

void write_csv(const DifferenceMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << std::setprecision(17);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out << (c ? "," : "") << m(r, c);
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

}  // namespace seqlpd
