#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lodom/geometry.hpp"
#include "lodom/lidar_model.hpp"
#include "lodom/sweep_buffer.hpp"

namespace lodom {

class ThreadPool;

/// View of a column span of range data plus the sensor pose (in the pano
/// frame) for every column, the unit of depth fusion.
struct RangeSpan {
  int start_col = 0;  // revolution coordinates in the sweep
  int width = 0;
  int rows = 0;
  const float* ranges = nullptr;  // row-major with row stride `stride`
  std::size_t stride = 0;
  // When > 0 the storage is circular over this many columns and span
  // column c lives at (start_col + c) % storage_cols; otherwise at c.
  int storage_cols = 0;
};

/// Preallocated scratch for the forward-warp passes; reusing it across
/// blocks keeps the steady state allocation-free.
struct WarpScratch {
  std::vector<std::int32_t> target;  // packed row * cols + col, -1 = miss
  std::vector<float> depth;
  std::vector<std::uint8_t> count;
  std::vector<int> row_offset;  // counting-sort offsets, pano rows + 1
  std::vector<std::int32_t> order;
};

/// Fixed-size spherical depth map anchored at a pose, with the counter-based
/// similarity filter as its fusion rule. depth 0 = empty pixel.
class DepthPano {
 public:
  DepthPano() = default;
  DepthPano(const LidarModel& model, int k_max, float fuse_tol);

  const LidarModel& model() const { return model_; }
  int rows() const { return model_.rows(); }
  int cols() const { return model_.cols(); }
  int k_max() const { return k_max_; }
  float fuse_tol() const { return fuse_tol_; }

  const Pose& pose() const { return pose_; }
  void set_pose(const Pose& p) { pose_ = p; }

  float depth(int r, int c) const {
    return depth_[static_cast<std::size_t>(r) * cols() + c];
  }
  std::uint8_t count(int r, int c) const {
    return count_[static_cast<std::size_t>(r) * cols() + c];
  }
  bool empty_pixel(int r, int c) const { return !(depth(r, c) > 0.0f); }
  const float* depth_row(int r) const {
    return depth_.data() + static_cast<std::size_t>(r) * cols();
  }

  void clear();

  /// Counter-based fusion of one observation into a (depth, count) pair.
  /// An exhausted pixel (count 0) takes the next observation as a fresh
  /// one; agreement within tol*d updates the weighted average; anything
  /// else decrements the counter.
  static std::pair<float, std::uint8_t> fuse_rule(float d, std::uint8_t k,
                                                  float d_new, float tol,
                                                  int k_max);

  void fuse_pixel(int r, int c, float d_new);

  /// Direct (depth, counter) write, for snapshot loading and tests.
  void set_pixel(int r, int c, float d, std::uint8_t k) {
    const std::size_t i = static_cast<std::size_t>(r) * cols() + c;
    depth_[i] = d;
    count_[i] = k;
  }

  /// Projects every valid pixel of `span` through its column pose into the
  /// pano and fuses it. col_poses[i] is the sensor pose in the pano frame
  /// for span column i; sweep_model supplies the span's projection
  /// geometry. Returns the number of pixels that landed in bounds.
  /// Output is independent of the worker count.
  int fuse_span(const RangeSpan& span, const std::vector<Pose>& col_poses,
                const LidarModel& sweep_model, ThreadPool* pool = nullptr,
                WarpScratch* scratch = nullptr);

  /// Gaussian of the unprojected valid pixels in a window centered at
  /// (r, c); rows clamp at the image border, columns wrap. Returns nullopt
  /// unless more than half of the examined pixels are valid.
  std::optional<Gaussian3> window_stats(int r, int c, int win_rows,
                                        int win_cols) const;

  /// Forward-warps this pano into `out` anchored at new_pose (odometry
  /// frame). Collisions keep the nearer surface; counters travel with their
  /// depth. Holes are expected. Deterministic for any worker count.
  void render_into(DepthPano& out, const Pose& new_pose,
                   ThreadPool* pool = nullptr,
                   WarpScratch* scratch = nullptr) const;

  /// Fraction of non-empty pixels, for diagnostics.
  double fill_ratio() const;

 private:
  LidarModel model_;
  Pose pose_;
  int k_max_ = 16;
  float fuse_tol_ = 0.05f;
  std::vector<float> depth_;
  std::vector<std::uint8_t> count_;
};

/// Pano snapshot file contents ("LPAN" format, little-endian, 16-bit depth
/// ticks plus 8-bit counters).
struct PanoSnapshot {
  std::uint16_t version = 1;
  std::uint16_t rows = 0;
  std::uint16_t cols = 0;
  float meters_per_tick = 1.0f / 512.0f;
  Pose pose;
  std::vector<std::uint16_t> depth_ticks;
  std::vector<std::uint8_t> counters;
};

void save_snapshot(const DepthPano& pano, const std::string& path,
                   float meters_per_tick = 1.0f / 512.0f);
PanoSnapshot load_snapshot(const std::string& path);
DepthPano pano_from_snapshot(const PanoSnapshot& snap, const LidarModel& model,
                             int k_max, float fuse_tol);

}  // namespace lodom
