#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "lodom/geometry.hpp"

namespace lodom {

struct ImuSample {
  double time = 0.0;
  Eigen::Vector3d accel = Eigen::Vector3d::Zero();  // specific force, body
  Eigen::Vector3d gyro = Eigen::Vector3d::Zero();   // body angular rate
};

/// Position/velocity/orientation at one grid-column time, expressed in the
/// current pano frame.
struct NavState {
  double time = 0.0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();

  Pose pose() const { return Pose{rotation, position}; }
};

inline constexpr double kGravity = 9.80665;

/// Piecewise-discrete trajectory: one NavState per grid-column fence,
/// addressed by absolute fence index (fence f sits at the start of absolute
/// grid column f). Prediction propagates with IMU samples when available
/// and constant velocity / constant rotation rate otherwise; corrections
/// ride on the whole window.
class LocalTrajectory {
 public:
  LocalTrajectory() = default;
  explicit LocalTrajectory(double state_dt) : state_dt_(state_dt) {}

  double state_dt() const { return state_dt_; }
  bool empty() const { return states_.empty(); }
  std::size_t size() const { return states_.size(); }
  std::int64_t first_fence() const { return first_fence_; }
  std::int64_t last_fence() const {
    return first_fence_ + static_cast<std::int64_t>(states_.size()) - 1;
  }
  const NavState& front() const { return states_.front(); }
  const NavState& back() const { return states_.back(); }
  const NavState& at_fence(std::int64_t f) const {
    return states_[static_cast<std::size_t>(f - first_fence_)];
  }

  void reset(const NavState& start, std::int64_t fence);

  /// Enqueues an IMU sample; out-of-order samples are rejected.
  bool add_imu(const ImuSample& s);
  std::size_t imu_queue_size() const { return imu_.size(); }

  /// Predicts fence states up to `fence` (inclusive), starting from the
  /// current last state. Uses queued IMU samples covering the span when
  /// present, otherwise extrapolates at constant velocity and constant
  /// rotation rate.
  void extend_to(std::int64_t fence);

  /// Error-state update: every state is moved by the left-multiplied
  /// correction, velocities pick up the rotated value plus dp/dt_span.
  void apply_correction(const Pose& delta, double dt_span);

  /// Re-expresses all states in a new frame given by its pose in the
  /// current one (pano relocation).
  void rebase(const Pose& new_frame_in_old);

  /// Drops fences below `first_keep` and IMU samples older than the window.
  void prune_to(std::int64_t first_keep);

 private:
  double fence_time(std::int64_t f) const {
    return base_time_ + static_cast<double>(f) * state_dt_;
  }
  Eigen::Vector3d cv_rate() const;

  double state_dt_ = 0.0;
  double base_time_ = 0.0;  // time of fence 0
  std::int64_t first_fence_ = 0;
  std::vector<NavState> states_;
  std::deque<ImuSample> imu_;
};

}  // namespace lodom
