#include "lodom/pipeline.hpp"

#include <cassert>
#include <chrono>
#include <cmath>

#include "lodom/kernels.hpp"

namespace lodom {

namespace {

using Clock = std::chrono::steady_clock;

double us_since(const Clock::time_point& t0) {
  return std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
}

}  // namespace

std::vector<std::string> OdomConfig::validate() const {
  std::vector<std::string> errors;
  auto check = [&errors](bool ok, const std::string& msg) {
    if (!ok) errors.push_back(msg);
  };
  check(lidar.rows >= 2, "lidar.rows: must be >= 2");
  check(lidar.cols >= 8, "lidar.cols: must be >= 8");
  check(lidar.sweep_period > 0.0, "lidar.sweep_period: must be > 0");
  check(lidar.vertical_fov > 0.0 && lidar.vertical_fov <= M_PI,
        "lidar.vertical_fov_deg: must be in (0, 180]");
  check(lidar.min_range > 0.0, "lidar.min_range: must be > 0");
  check(pano.rows >= 2, "pano.rows: must be >= 2");
  check(pano.cols >= 8, "pano.cols: must be >= 8");
  check(pano.vertical_fov > 0.0 && pano.vertical_fov <= M_PI,
        "pano.vertical_fov_deg: must be in (0, 180]");
  check(pano.k_max >= 1 && pano.k_max <= 255,
        "pano.k_max: must be in [1, 255]");
  check(pano.fuse_tol > 0.0 && pano.fuse_tol < 1.0,
        "pano.fuse_tol: must be in (0, 1)");
  check(grid.cell_rows >= 1 && lidar.rows % grid.cell_rows == 0,
        "grid.cell_rows: must divide lidar.rows");
  check(grid.cell_cols >= 1 && lidar.cols % grid.cell_cols == 0,
        "grid.cell_cols: must divide lidar.cols");
  check(grid.max_smooth >= 0.0, "grid.max_smooth: must be >= 0");
  check(grid.max_var >= 0.0, "grid.max_var: must be >= 0");
  check(divisor == 1 || divisor == 2 || divisor == 4 || divisor == 8,
        "odom.divisor: must be one of {1,2,4,8}");
  if (divisor >= 1) {
    check(lidar.cols % divisor == 0, "odom.divisor: must divide lidar.cols");
    if (grid.cell_cols >= 1 && lidar.cols % divisor == 0) {
      check((lidar.cols / divisor) % grid.cell_cols == 0,
            "odom.divisor: block width must be a multiple of grid.cell_cols");
    }
  }
  check(q_threshold > 0.0 && q_threshold <= 1.0,
        "odom.q_threshold: must be in (0, 1]");
  check(workers >= 1 && workers <= 64, "odom.workers: must be in [1, 64]");
  check(icp.assoc_tol > 0.0, "icp.assoc_tol: must be > 0");
  check(icp.huber_delta > 0.0, "icp.huber_delta: must be > 0");
  check(icp.cov_eps > 0.0, "icp.cov_eps: must be > 0");
  check(icp.max_outer >= 1, "icp.max_outer: must be >= 1");
  check(icp.max_inner >= 1, "icp.max_inner: must be >= 1");
  check(icp.lm_lambda >= 0.0, "icp.lm_lambda: must be >= 0");
  check(icp.step_tol > 0.0, "icp.step_tol: must be > 0");
  check(icp.min_matches >= 3, "icp.min_matches: must be >= 3");
  check(kernels == "auto" || kernels == "scalar" || kernels == "avx2",
        "odom.kernels: must be auto, scalar or avx2");
  return errors;
}

double match_quality(const SolveReport& report) {
  if (report.candidate_count <= 0) return 0.0;
  return static_cast<double>(report.match_count) / report.candidate_count;
}

Pipeline::Pipeline(const OdomConfig& cfg)
    : cfg_(cfg),
      sweep_model_(cfg.lidar_model()),
      pano_model_(cfg.pano_model()),
      sweep_(cfg.lidar.rows, cfg.lidar.cols, sweep_model_.firing_interval()),
      grid_(cfg.lidar.rows, cfg.lidar.cols, cfg.grid.cell_rows,
            cfg.grid.cell_cols),
      traj_(cfg.grid.cell_cols * sweep_model_.firing_interval()) {
  const auto errors = cfg.validate();
  if (!errors.empty()) {
    throw std::invalid_argument("invalid config: " + errors.front());
  }
  if (cfg_.kernels == "scalar") {
    kernels::force(kernels::Backend::kScalar);
  } else if (cfg_.kernels == "avx2") {
    if (!kernels::force(kernels::Backend::kAvx2)) {
      throw std::invalid_argument(
          "odom.kernels: avx2 not supported on this machine");
    }
  }
  // Auto window: the grid cell footprint scaled to pano resolution.
  if (cfg_.icp.win_rows <= 0) {
    cfg_.icp.win_rows =
        std::max(3, cfg_.grid.cell_rows * cfg_.pano.rows / cfg_.lidar.rows);
  }
  if (cfg_.icp.win_cols <= 0) {
    cfg_.icp.win_cols =
        std::max(3, cfg_.grid.cell_cols * cfg_.pano.cols / cfg_.lidar.cols);
  }
  front_ = std::make_unique<DepthPano>(pano_model_, cfg_.pano.k_max,
                                       static_cast<float>(cfg_.pano.fuse_tol));
  back_ = std::make_unique<DepthPano>(pano_model_, cfg_.pano.k_max,
                                      static_cast<float>(cfg_.pano.fuse_tol));
  pool_ = std::make_unique<ThreadPool>(cfg_.workers);
  fences_by_gc_.assign(grid_.cols(), 0);
  col_poses_.reserve(cfg_.lidar.cols);
}

Pipeline::~Pipeline() {
  if (render_thread_.joinable()) render_thread_.join();
}

bool Pipeline::add_imu(const ImuSample& s) { return traj_.add_imu(s); }

Pose Pipeline::current_pose_odom() const {
  if (!traj_init_) return front_->pose();
  return compose(front_->pose(), traj_.back().pose());
}

bool Pipeline::request_relocation() {
  if (render_in_flight_) {
    ++coalesced_;
    return false;
  }
  render_rel_pose_ = traj_.back().pose();
  const Pose new_pose_odom = compose(front_->pose(), render_rel_pose_);
  // The front pano is not written again until the swap at the next block
  // boundary, so the background thread reads a stable snapshot.
  render_in_flight_ = true;
  render_thread_ = std::thread([this, new_pose_odom] {
    front_->render_into(*back_, new_pose_odom, nullptr, nullptr);
  });
  return true;
}

void Pipeline::maybe_swap_pano(OdomOutput* out) {
  if (!render_in_flight_) return;
  render_thread_.join();
  render_in_flight_ = false;
  std::swap(front_, back_);
  traj_.rebase(render_rel_pose_);
  ++relocations_;
  out->relocated = true;
  // The warped pano has holes; re-fusing the current buffer fills the area
  // the sensor actually observes.
  if (sweep_.warm()) fuse_full_buffer();
}

void Pipeline::fuse_ejected(const SweepBuffer::Ejected& ejected,
                            std::int64_t first_raw_abs) {
  if (ejected.empty()) return;
  RangeSpan span;
  span.start_col = ejected.start_col;
  span.width = ejected.width;
  span.rows = ejected.rows;
  span.ranges = ejected.ranges.data();
  span.stride = ejected.width;
  col_poses_.resize(ejected.width);
  for (int c = 0; c < ejected.width; ++c) {
    col_poses_[c] =
        traj_.at_fence(fence_of_raw_col_abs(first_raw_abs + c)).pose();
  }
  front_->fuse_span(span, col_poses_, sweep_model_, pool_.get(), &scratch_);
}

void Pipeline::fuse_full_buffer() {
  RangeSpan span;
  span.start_col = sweep_.expected_col();  // oldest stored column
  span.width = sweep_.cols();
  span.rows = sweep_.rows();
  span.ranges = sweep_.row(0);
  span.stride = sweep_.cols();
  span.storage_cols = sweep_.cols();
  const std::int64_t first_raw_abs = raw_cols_abs_ - sweep_.cols();
  col_poses_.resize(span.width);
  for (int c = 0; c < span.width; ++c) {
    col_poses_[c] =
        traj_.at_fence(fence_of_raw_col_abs(first_raw_abs + c)).pose();
  }
  front_->fuse_span(span, col_poses_, sweep_model_, pool_.get(), &scratch_);
}

OdomOutput Pipeline::process_block(const ColumnBlock& block) {
  const auto t_total = Clock::now();
  OdomOutput out;
  out.block_index = blocks_;

  assert(block.rows == cfg_.lidar.rows);
  assert(block.width % cfg_.grid.cell_cols == 0);

  if (!traj_init_) {
    NavState start;
    start.time = block.t_start;
    traj_.reset(start, 0);
    traj_init_ = true;
  }

  // A finished background render swaps in at the block boundary.
  maybe_swap_pano(&out);

  const auto t_feature = Clock::now();

  // Zero-fill dropped columns, then push the real block.
  SweepBuffer::Ejected ejected;
  SweepBuffer::PushResult push = sweep_.push(block, ejected);
  int span_start = block.start_col;
  int span_width = block.width;
  SweepBuffer::Ejected gap_ejected;
  std::int64_t gap_eject_first_raw = 0;
  if (push.status == SweepBuffer::PushStatus::kGap) {
    const int gap_width =
        (block.start_col - push.expected_col + sweep_.cols()) % sweep_.cols();
    if (gap_width % cfg_.grid.cell_cols != 0) {
      throw std::runtime_error("gap width not aligned to grid cells");
    }
    ColumnBlock zero;
    zero.start_col = push.expected_col;
    zero.width = gap_width;
    zero.rows = block.rows;
    zero.t_start = block.t_start - gap_width * sweep_model_.firing_interval();
    zero.ranges.assign(static_cast<std::size_t>(block.rows) * gap_width, 0.0f);
    gap_eject_first_raw =
        std::max<std::int64_t>(raw_cols_abs_, sweep_.cols()) - sweep_.cols();
    sweep_.push(zero, gap_ejected);
    push = sweep_.push(block, ejected);
    assert(push.status == SweepBuffer::PushStatus::kOk);
    span_start = zero.start_col;
    span_width = gap_width + block.width;
    out.gap = true;
    raw_cols_abs_ += gap_width;
  }
  // First overwritten column of this block sits one revolution back.
  const std::int64_t eject_first_raw =
      std::max<std::int64_t>(raw_cols_abs_, sweep_.cols()) - sweep_.cols();
  raw_cols_abs_ += block.width;

  // Score the cells covered by the new span.
  grid_.score_span(sweep_, sweep_model_, span_start, span_width, pool_.get());
  out.timing.feature_us = us_since(t_feature);

  // Predict fence states across the new span.
  grid_cols_abs_ += span_width / cfg_.grid.cell_cols;
  traj_.extend_to(grid_cols_abs_);

  // Projective ICP against the full buffer.
  const auto t_solve = Clock::now();
  if (pano_init_) {
    const int candidates =
        grid_.filter(static_cast<float>(cfg_.grid.max_smooth),
                     static_cast<float>(cfg_.grid.max_var), cfg_.grid.nms);
    const std::int64_t g = grid_.cols();
    for (int gc = 0; gc < g; ++gc) {
      fences_by_gc_[gc] =
          grid_cols_abs_ - 1 - ((grid_cols_abs_ - 1 - gc) % g);
    }
    out.report = solve(grid_, fences_by_gc_, traj_, *front_, cfg_.icp,
                       cfg_.lidar.sweep_period, candidates, pool_.get());
    out.solved = out.report.ok();
    out.q = match_quality(out.report);
    out.timing.associate_us = out.report.associate_seconds * 1e6;
    out.timing.solve_us = us_since(t_solve) - out.timing.associate_us;
  }

  // Fuse the ejected span with the corrected states.
  const auto t_fuse = Clock::now();
  if (!gap_ejected.empty()) fuse_ejected(gap_ejected, gap_eject_first_raw);
  fuse_ejected(ejected, eject_first_raw);
  if (!pano_init_ && sweep_.warm()) {
    // Cold start: the first full revolution becomes the initial pano,
    // anchored at the odometry origin.
    fuse_full_buffer();
    pano_init_ = true;
  }
  out.timing.fuse_us = us_since(t_fuse);

  traj_.prune_to(grid_cols_abs_ - grid_.cols());

  out.time = traj_.back().time;
  out.pose = compose(front_->pose(), traj_.back().pose());

  // Relocation decision; an in-flight render coalesces further requests.
  if (pano_init_ && out.solved && out.q < cfg_.q_threshold) {
    request_relocation();
  }

  ++blocks_;
  out.timing.total_us = us_since(t_total);
  return out;
}

}  // namespace lodom
