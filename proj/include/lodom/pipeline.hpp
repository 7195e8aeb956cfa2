#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "lodom/depth_pano.hpp"
#include "lodom/feature_grid.hpp"
#include "lodom/gicp.hpp"
#include "lodom/lidar_model.hpp"
#include "lodom/sweep_buffer.hpp"
#include "lodom/thread_pool.hpp"
#include "lodom/trajectory.hpp"

namespace lodom {

struct LidarParams {
  int rows = 64;
  int cols = 1024;
  double vertical_fov = 45.0 * M_PI / 180.0;
  double elevation_offset = 0.0;
  double sweep_period = 0.1;
  double min_range = 0.5;
};

struct PanoParams {
  int rows = 256;
  int cols = 1024;
  double vertical_fov = 90.0 * M_PI / 180.0;
  int k_max = 16;
  double fuse_tol = 0.05;
};

struct GridParams {
  int cell_rows = 2;
  int cell_cols = 16;
  double max_smooth = 0.01;
  double max_var = 0.1;  // m^2
  bool nms = true;
};

struct OdomConfig {
  LidarParams lidar;
  PanoParams pano;
  GridParams grid;
  IcpParams icp;
  double q_threshold = 0.9;
  int divisor = 8;
  int workers = 2;
  std::string kernels = "auto";  // auto | scalar | avx2

  /// Returns human-readable violations, each naming the offending key;
  /// empty when the configuration is valid.
  std::vector<std::string> validate() const;

  LidarModel lidar_model() const {
    return LidarModel(lidar.rows, lidar.cols, lidar.vertical_fov,
                      lidar.sweep_period, lidar.elevation_offset,
                      lidar.min_range);
  }
  LidarModel pano_model() const {
    return LidarModel(pano.rows, pano.cols, pano.vertical_fov,
                      lidar.sweep_period, 0.0, lidar.min_range);
  }
  int block_width() const { return lidar.cols / divisor; }
};

struct StageTiming {
  double feature_us = 0.0;
  double associate_us = 0.0;
  double solve_us = 0.0;
  double fuse_us = 0.0;
  double total_us = 0.0;
};

struct OdomOutput {
  std::uint64_t block_index = 0;
  double time = 0.0;  // block end boundary
  Pose pose;          // sensor pose in the odometry frame at `time`
  SolveReport report;
  StageTiming timing;
  double q = 1.0;
  bool solved = false;
  bool relocated = false;  // a pano swap was applied before this block
  bool gap = false;        // missing columns were zero-filled
};

/// Ratio of final matches to candidates; 0 when there were no candidates
/// (which flags the frame and forces the relocation check).
double match_quality(const SolveReport& report);

/// Streaming odometry pipeline: push a block, score its cells, predict,
/// align the full buffer against the pano, correct, fuse the ejected span,
/// and relocate the pano when the match quality drops.
class Pipeline {
 public:
  explicit Pipeline(const OdomConfig& cfg);
  ~Pipeline();

  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;

  const OdomConfig& config() const { return cfg_; }

  /// Out-of-order samples are rejected (returns false).
  bool add_imu(const ImuSample& s);

  /// Blocks must arrive in acquisition order; a gap against the buffer head
  /// is zero-filled and flagged. Width must be a multiple of the grid cell
  /// width.
  OdomOutput process_block(const ColumnBlock& block);

  /// Schedules a background re-render of the pano at the current pose.
  /// Returns false when a render is already in flight (the request is
  /// coalesced, never queued). The swap happens at the next block boundary.
  bool request_relocation();
  bool render_in_flight() const { return render_in_flight_; }

  const DepthPano& pano() const { return *front_; }
  const SweepBuffer& sweep() const { return sweep_; }
  const LocalTrajectory& trajectory() const { return traj_; }
  const FeatureGrid& grid() const { return grid_; }
  Pose pano_pose_odom() const { return front_->pose(); }
  int relocation_count() const { return relocations_; }
  int coalesced_relocations() const { return coalesced_; }
  bool pano_initialized() const { return pano_init_; }

  /// Latest sensor pose in the odometry frame.
  Pose current_pose_odom() const;

 private:
  void maybe_swap_pano(OdomOutput* out);
  void fuse_ejected(const SweepBuffer::Ejected& ejected,
                    std::int64_t first_raw_abs);
  void fuse_full_buffer();
  std::int64_t fence_of_raw_col_abs(std::int64_t raw_abs) const {
    return raw_abs / cfg_.grid.cell_cols;
  }

  OdomConfig cfg_;
  LidarModel sweep_model_;
  LidarModel pano_model_;
  SweepBuffer sweep_;
  FeatureGrid grid_;
  LocalTrajectory traj_;
  std::unique_ptr<DepthPano> front_;
  std::unique_ptr<DepthPano> back_;
  std::unique_ptr<ThreadPool> pool_;
  WarpScratch scratch_;
  std::vector<Pose> col_poses_;
  std::vector<std::int64_t> fences_by_gc_;

  std::uint64_t blocks_ = 0;
  std::int64_t raw_cols_abs_ = 0;  // total raw columns pushed
  std::int64_t grid_cols_abs_ = 0; // total grid columns pushed
  bool traj_init_ = false;
  bool pano_init_ = false;

  // Background pano rendering (double buffer)
  std::thread render_thread_;
  bool render_in_flight_ = false;
  Pose render_rel_pose_;  // new pano frame in the old pano frame
  int relocations_ = 0;
  int coalesced_ = 0;
};

}  // namespace lodom
