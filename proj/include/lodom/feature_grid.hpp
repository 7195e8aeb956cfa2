#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lodom/geometry.hpp"
#include "lodom/lidar_model.hpp"
#include "lodom/sweep_buffer.hpp"

namespace lodom {

class ThreadPool;

enum class CellState : std::uint8_t { kInvalid = 0, kCandidate, kMatched };

/// Per-cell planarity statistics. smoothness is the mean ratio deviation of
/// the cell's ranges against its middle pixel; range_variance the population
/// variance of the valid ranges; stats the 3-D Gaussian of the unprojected
/// pixels in the sweep frame.
struct Cell {
  float smoothness = 0.0f;
  float range_variance = 0.0f;
  Gaussian3 stats;
  CellState state = CellState::kInvalid;
};

struct CellScore {
  double smoothness = 0.0;
  double range_variance = 0.0;
  int valid = 0;
};

/// Smoothness and range variance of one cell pixel block (row-major,
/// cell_rows x cell_cols, 0 = invalid). Returns nullopt when the middle
/// pixel is invalid or fewer than half the pixels are valid.
std::optional<CellScore> score_cell(const float* pixels, int cell_rows,
                                    int cell_cols);

/// Mean/covariance of the unprojected valid pixels of a cell, in the sweep
/// frame. `row0`/`col0` locate the cell's top-left pixel in the sweep.
Gaussian3 compute_cell_stats(const SweepBuffer& sweep, const LidarModel& model,
                             int row0, int col0, int cell_rows, int cell_cols);

/// Coarse grid over the sweep; cell size must tile the sweep exactly.
class FeatureGrid {
 public:
  FeatureGrid() = default;
  FeatureGrid(int sweep_rows, int sweep_cols, int cell_rows, int cell_cols);

  int rows() const { return grid_rows_; }
  int cols() const { return grid_cols_; }
  int cell_rows() const { return cell_rows_; }
  int cell_cols() const { return cell_cols_; }

  Cell& at(int gr, int gc) { return cells_[static_cast<std::size_t>(gr) * grid_cols_ + gc]; }
  const Cell& at(int gr, int gc) const {
    return cells_[static_cast<std::size_t>(gr) * grid_cols_ + gc];
  }
  bool scored(int gr, int gc) const {
    return scored_[static_cast<std::size_t>(gr) * grid_cols_ + gc] != 0;
  }

  /// Scores every cell whose columns lie inside [start_col, start_col+width)
  /// of the sweep (revolution coordinates, may wrap). The span must cover
  /// whole cell columns. Parallel over cells when a pool is given; results
  /// are identical for any worker count.
  void score_span(const SweepBuffer& sweep, const LidarModel& model,
                  int start_col, int width, ThreadPool* pool = nullptr);

  /// Applies the smoothness/variance thresholds (and optional 1-D
  /// non-minimum suppression along grid rows) to every scored cell, marking
  /// survivors kCandidate. Returns the candidate count.
  int filter(float max_smooth, float max_var, bool nms);

  int candidate_count() const;

 private:
  void score_cell_at(const SweepBuffer& sweep, const LidarModel& model, int gr,
                     int gc);

  int cell_rows_ = 0, cell_cols_ = 0;
  int grid_rows_ = 0, grid_cols_ = 0;
  std::vector<Cell> cells_;
  std::vector<std::uint8_t> scored_;
};

}  // namespace lodom
