#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "lodom/geometry.hpp"

namespace lodom {

struct Projection {
  int row = 0;
  int col = 0;
  double range = 0.0;
};

/// Ideal spinning-lidar projection model, shared by sweeps and panoramas.
///
/// Columns are centered on azimuth c * (2*pi/cols), so column 0 looks down
/// +x. Rows cover elevation from elevation_offset + fov/2 (row 0) down to
/// elevation_offset - fov/2, with bin centers at half offsets; for an even
/// row count the horizon falls on the boundary between rows/2 - 1 and
/// rows/2, and boundary elevations land in the lower row.
class LidarModel {
 public:
  LidarModel() = default;
  LidarModel(int rows, int cols, double vertical_fov, double sweep_period,
             double elevation_offset = 0.0, double min_range = 0.5)
      : rows_(rows),
        cols_(cols),
        vertical_fov_(vertical_fov),
        elevation_offset_(elevation_offset),
        sweep_period_(sweep_period),
        min_range_(min_range) {
    if (rows < 2 || cols < 8 || sweep_period <= 0.0 || vertical_fov <= 0.0) {
      throw std::invalid_argument("LidarModel: invalid geometry");
    }
    firing_interval_ = sweep_period / cols;
    elev_top_ = elevation_offset + 0.5 * vertical_fov;
    elev_step_ = vertical_fov / rows;
    azim_step_ = 2.0 * M_PI / cols;
    row_sin_.resize(rows);
    row_cos_.resize(rows);
    for (int r = 0; r < rows; ++r) {
      const double e = elev_top_ - (r + 0.5) * elev_step_;
      row_sin_[r] = std::sin(e);
      row_cos_[r] = std::cos(e);
    }
    col_sin_.resize(cols);
    col_cos_.resize(cols);
    for (int c = 0; c < cols; ++c) {
      const double a = c * azim_step_;
      col_sin_[c] = std::sin(a);
      col_cos_[c] = std::cos(a);
    }
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double vertical_fov() const { return vertical_fov_; }
  double elevation_offset() const { return elevation_offset_; }
  double sweep_period() const { return sweep_period_; }
  double firing_interval() const { return firing_interval_; }
  double min_range() const { return min_range_; }
  double azim_step() const { return azim_step_; }
  double elev_step() const { return elev_step_; }

  const std::vector<double>& row_sin() const { return row_sin_; }
  const std::vector<double>& row_cos() const { return row_cos_; }
  const std::vector<double>& col_sin() const { return col_sin_; }
  const std::vector<double>& col_cos() const { return col_cos_; }

  /// Spherical projection. Total over finite nonzero points: either an
  /// in-bounds pixel or nullopt (range below min_range, or elevation
  /// outside the vertical fov). Azimuth wraps, so it never rejects.
  std::optional<Projection> project(const Eigen::Vector3d& p) const {
    const double range = p.norm();
    if (!std::isfinite(range) || range < min_range_) return std::nullopt;
    const double elev = std::asin(p.z() / range);
    const int row =
        static_cast<int>(std::floor((elev_top_ - elev) / elev_step_));
    if (row < 0 || row >= rows_) return std::nullopt;
    double azim = std::atan2(p.y(), p.x());
    if (azim < 0.0) azim += 2.0 * M_PI;
    int col = static_cast<int>(std::floor(azim / azim_step_ + 0.5));
    if (col >= cols_) col -= cols_;
    return Projection{row, col, range};
  }

  /// Unit direction of the bin center of pixel (row, col).
  Eigen::Vector3d beam_dir(int row, int col) const {
    return {row_cos_[row] * col_cos_[col], row_cos_[row] * col_sin_[col],
            row_sin_[row]};
  }

  /// Inverse of project at bin centers. Caller must pass an in-bounds pixel.
  Eigen::Vector3d unproject(int row, int col, double range) const {
    return range * beam_dir(row, col);
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  double vertical_fov_ = 0.0;
  double elevation_offset_ = 0.0;
  double sweep_period_ = 0.0;
  double min_range_ = 0.5;
  double firing_interval_ = 0.0;
  double elev_top_ = 0.0;
  double elev_step_ = 0.0;
  double azim_step_ = 0.0;
  std::vector<double> row_sin_, row_cos_, col_sin_, col_cos_;
};

}  // namespace lodom
