#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "seqlpd/cluster.hpp"
#include "seqlpd/net.hpp"
#include "seqlpd/placemap.hpp"

namespace seqlpd {

// rows = query frames (oldest first), cols = reference frames.
class DifferenceMatrix {
 public:
  DifferenceMatrix() = default;
  DifferenceMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

struct MatchParams {
  std::size_t window = 10;
  double v_min = 0.8;  // reference frames per query frame
  double v_max = 1.2;
  double v_step = 0.1;
  double accept_ratio = 0.8;
  std::optional<std::size_t> exclusion;  // defaults to 2 * window
  bool reverse = false;                  // also search trajectories running backwards in the map

  std::size_t exclusion_radius() const { return exclusion.value_or(2 * window); }
  void validate() const;
};

// {v_min, v_min + v_step, ...} up to v_max inclusive.
std::vector<double> velocity_grid(const MatchParams& params);

struct SearchResult {
  std::size_t ref_end = 0;
  double velocity = 0.0;  // negative for reversed trajectories
  double score = 0.0;
  std::optional<double> second_best;
};

struct MatchResult {
  std::size_t ref_end = 0;  // entry index in the reference map
  std::uint64_t ref_frame_id = 0;
  double velocity = 0.0;
  double score = 0.0;
  std::optional<double> second_best;
  bool accepted = false;
  std::size_t cluster_id = 0;
};

DifferenceMatrix difference_matrix(std::span<const Descriptor> query, std::span<const Descriptor> ref);

std::size_t coarse_match(std::span<const float> query, const SuperKeyframes& skf);

// Mean of M[R-1-w][ref_end - round(v*w)] over w < W.
double trajectory_score(const DifferenceMatrix& m, std::size_t ref_end, double v, std::size_t window);

// Per reference column: the best score over the velocity grid, or nullopt
// when no trajectory ending there stays in bounds.
struct ColumnBest {
  double score;
  double velocity;
};
std::vector<std::optional<ColumnBest>> column_scores(const DifferenceMatrix& m, const MatchParams& params);

SearchResult sequence_search(const DifferenceMatrix& m, const MatchParams& params);

// Coarse cluster lookup on the newest query descriptor, then sequence search
// over the map frames within +-W of every member of that cluster. When those
// frames hold no trajectory outside the exclusion zone, the second best used
// by the ratio test comes from the whole map.
MatchResult detect_loop(std::span<const Descriptor> query_window, const PlaceMap& history,
                        const SuperKeyframes& skf, const MatchParams& params);

// Exhaustive fine matching against every frame of `history`.
MatchResult full_search(std::span<const Descriptor> query_window, const PlaceMap& history,
                        const MatchParams& params);

// Grayscale "P2" image, distance 0 black and 2 white: darker is more similar.
void write_pgm(const DifferenceMatrix& m, const std::filesystem::path& path);
int pgm_level(double value);
void write_csv(const DifferenceMatrix& m, const std::filesystem::path& path);

}  // namespace seqlpd
