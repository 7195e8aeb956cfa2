#include "lodom/feature_grid.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

#include "lodom/kernels.hpp"
#include "lodom/thread_pool.hpp"

namespace lodom {

namespace {

// Combines per-row kernel calls in row order so results do not depend on
// how cells are distributed over workers.
struct CellMoments {
  kernels::RangeMoments range;
  kernels::PointSums points;
};

}  // namespace

std::optional<CellScore> score_cell(const float* pixels, int cell_rows,
                                    int cell_cols) {
  const int area = cell_rows * cell_cols;
  const float rm =
      pixels[static_cast<std::size_t>(cell_rows / 2) * cell_cols + cell_cols / 2];
  if (!(rm > 0.0f)) return std::nullopt;

  kernels::RangeMoments m;
  for (int r = 0; r < cell_rows; ++r) {
    const kernels::RangeMoments row = kernels::range_moments(
        pixels + static_cast<std::size_t>(r) * cell_cols, cell_cols, rm);
    m.valid += row.valid;
    m.dev += row.dev;
    m.sum += row.sum;
    m.sum2 += row.sum2;
  }
  if (2 * m.valid < area) return std::nullopt;

  CellScore score;
  score.valid = m.valid;
  const double n = m.valid;
  score.smoothness = std::abs(m.dev) / n;
  const double mean = m.sum / n;
  score.range_variance = m.sum2 / n - mean * mean;
  if (score.range_variance < 0.0) score.range_variance = 0.0;
  return score;
}

Gaussian3 compute_cell_stats(const SweepBuffer& sweep, const LidarModel& model,
                             int row0, int col0, int cell_rows,
                             int cell_cols) {
  const auto& cc = model.col_cos();
  const auto& cs = model.col_sin();
  const auto& rc = model.row_cos();
  const auto& rs = model.row_sin();

  kernels::PointSums sums;
  for (int r = 0; r < cell_rows; ++r) {
    const int sr = row0 + r;
    const kernels::PointSums row =
        kernels::point_sums(sweep.row(sr) + col0, cell_cols, cc.data() + col0,
                            cs.data() + col0, rc[sr], rs[sr]);
    sums.count += row.count;
    sums.x += row.x;
    sums.y += row.y;
    sums.z += row.z;
  }

  Gaussian3 g;
  g.weight = sums.count;
  if (sums.count == 0) return g;
  const double n = sums.count;
  g.mean = Eigen::Vector3d(sums.x / n, sums.y / n, sums.z / n);

  kernels::ScatterSums scatter;
  for (int r = 0; r < cell_rows; ++r) {
    const int sr = row0 + r;
    const kernels::ScatterSums row = kernels::scatter_sums(
        sweep.row(sr) + col0, cell_cols, cc.data() + col0, cs.data() + col0,
        rc[sr], rs[sr], g.mean.x(), g.mean.y(), g.mean.z());
    for (int k = 0; k < 6; ++k) scatter.m[k] += row.m[k];
  }
  g.covariance << scatter.m[0], scatter.m[1], scatter.m[2],  //
      scatter.m[1], scatter.m[3], scatter.m[4],              //
      scatter.m[2], scatter.m[4], scatter.m[5];
  g.covariance /= n;
  return g;
}

FeatureGrid::FeatureGrid(int sweep_rows, int sweep_cols, int cell_rows,
                         int cell_cols)
    : cell_rows_(cell_rows), cell_cols_(cell_cols) {
  if (cell_rows < 1 || cell_cols < 1 || sweep_rows % cell_rows != 0 ||
      sweep_cols % cell_cols != 0) {
    throw std::invalid_argument("FeatureGrid: cell size must tile the sweep");
  }
  grid_rows_ = sweep_rows / cell_rows;
  grid_cols_ = sweep_cols / cell_cols;
  cells_.assign(static_cast<std::size_t>(grid_rows_) * grid_cols_, Cell{});
  scored_.assign(cells_.size(), 0);
}

void FeatureGrid::score_cell_at(const SweepBuffer& sweep,
                                const LidarModel& model, int gr, int gc) {
  const int row0 = gr * cell_rows_;
  const int col0 = gc * cell_cols_;
  const int area = cell_rows_ * cell_cols_;
  const std::size_t idx = static_cast<std::size_t>(gr) * grid_cols_ + gc;
  Cell& cell = cells_[idx];

  const float rm = sweep.range(row0 + cell_rows_ / 2, col0 + cell_cols_ / 2);
  if (!(rm > 0.0f)) {
    cell.state = CellState::kInvalid;
    scored_[idx] = 0;
    return;
  }

  kernels::RangeMoments m;
  for (int r = 0; r < cell_rows_; ++r) {
    const kernels::RangeMoments row =
        kernels::range_moments(sweep.row(row0 + r) + col0, cell_cols_, rm);
    m.valid += row.valid;
    m.dev += row.dev;
    m.sum += row.sum;
    m.sum2 += row.sum2;
  }
  if (2 * m.valid < area) {
    cell.state = CellState::kInvalid;
    scored_[idx] = 0;
    return;
  }

  const double n = m.valid;
  cell.smoothness = static_cast<float>(std::abs(m.dev) / n);
  const double mean = m.sum / n;
  float var = static_cast<float>(m.sum2 / n - mean * mean);
  cell.range_variance = var < 0.0f ? 0.0f : var;
  cell.stats = compute_cell_stats(sweep, model, row0, col0, cell_rows_,
                                  cell_cols_);
  cell.state = CellState::kInvalid;  // filter() decides candidacy
  scored_[idx] = 1;
}

void FeatureGrid::score_span(const SweepBuffer& sweep, const LidarModel& model,
                             int start_col, int width, ThreadPool* pool) {
  assert(start_col % cell_cols_ == 0);
  assert(width % cell_cols_ == 0);
  const int gc_begin = start_col / cell_cols_;
  const int gc_count = width / cell_cols_;
  const int total = grid_rows_ * gc_count;

  auto score_one = [&](int k) {
    const int gr = k / gc_count;
    const int gc = (gc_begin + k % gc_count) % grid_cols_;
    score_cell_at(sweep, model, gr, gc);
  };

  if (pool != nullptr && pool->workers() > 1) {
    pool->parallel_chunks(0, total, 16, [&](int, int b, int e) {
      for (int k = b; k < e; ++k) score_one(k);
    });
  } else {
    for (int k = 0; k < total; ++k) score_one(k);
  }
}

int FeatureGrid::filter(float max_smooth, float max_var, bool nms) {
  int candidates = 0;
  for (int gr = 0; gr < grid_rows_; ++gr) {
    bool left_survived = false;
    for (int gc = 0; gc < grid_cols_; ++gc) {
      const std::size_t idx = static_cast<std::size_t>(gr) * grid_cols_ + gc;
      Cell& cell = cells_[idx];
      bool pass = scored_[idx] != 0 && cell.smoothness <= max_smooth &&
                  cell.range_variance <= max_var;
      if (pass && nms) {
        // Survivors suppress their right neighbor on ties (lower column
        // wins); a scored right neighbor suppresses only when strictly
        // smoother.
        if (left_survived && at(gr, gc - 1).smoothness <= cell.smoothness) {
          pass = false;
        } else if (gc + 1 < grid_cols_ && scored_[idx + 1] != 0 &&
                   cells_[idx + 1].smoothness < cell.smoothness) {
          pass = false;
        }
      }
      cell.state = pass ? CellState::kCandidate : CellState::kInvalid;
      left_survived = pass;
      if (pass) ++candidates;
    }
  }
  return candidates;
}

int FeatureGrid::candidate_count() const {
  int n = 0;
  for (const Cell& c : cells_) {
    if (c.state != CellState::kInvalid) ++n;
  }
  return n;
}

}  // namespace lodom
