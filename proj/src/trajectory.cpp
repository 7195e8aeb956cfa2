#include "lodom/trajectory.hpp"

#include <cassert>

namespace lodom {

namespace {
const Eigen::Vector3d kGravityWorld(0.0, 0.0, -kGravity);
}

void LocalTrajectory::reset(const NavState& start, std::int64_t fence) {
  states_.clear();
  states_.push_back(start);
  first_fence_ = fence;
  base_time_ = start.time - static_cast<double>(fence) * state_dt_;
  imu_.clear();
}

bool LocalTrajectory::add_imu(const ImuSample& s) {
  if (!imu_.empty() && !(s.time > imu_.back().time)) return false;
  imu_.push_back(s);
  return true;
}

Eigen::Vector3d LocalTrajectory::cv_rate() const {
  if (states_.size() < 2) return Eigen::Vector3d::Zero();
  const NavState& a = states_[states_.size() - 2];
  const NavState& b = states_.back();
  return log_so3(a.rotation.conjugate() * b.rotation) / state_dt_;
}

void LocalTrajectory::extend_to(std::int64_t fence) {
  assert(!states_.empty());
  const std::int64_t last = last_fence();
  if (fence <= last) return;

  const NavState start = states_.back();
  const bool have_imu = !imu_.empty() && imu_.back().time > start.time;

  if (!have_imu) {
    // Constant velocity, constant rotation rate from the previous span; the
    // closed form keeps each state an exact function of the start state.
    const Eigen::Vector3d rate = cv_rate();
    for (std::int64_t f = last + 1; f <= fence; ++f) {
      NavState s;
      const double dt = static_cast<double>(f - last) * state_dt_;
      s.time = start.time + dt;
      s.position = start.position + start.velocity * dt;
      s.velocity = start.velocity;
      s.rotation = (start.rotation * exp_so3(rate * dt)).normalized();
      states_.push_back(s);
    }
    return;
  }

  // Euler integration of the queued samples, zero-order hold between
  // samples, coasting before the first one.
  NavState cur = start;
  std::size_t idx = 0;
  while (idx < imu_.size() && imu_[idx].time <= cur.time) ++idx;
  // idx now points at the first sample strictly after cur.time; the active
  // sample is idx-1 when it exists.
  for (std::int64_t f = last + 1; f <= fence; ++f) {
    const double t_target = fence_time(f);
    while (cur.time < t_target) {
      const double t_next =
          idx < imu_.size() ? std::min(imu_[idx].time, t_target) : t_target;
      const double dt = t_next - cur.time;
      if (dt > 0.0) {
        if (idx == 0) {
          cur.position += cur.velocity * dt;
        } else {
          const ImuSample& s = imu_[idx - 1];
          const Eigen::Vector3d a_world =
              cur.rotation * s.accel + kGravityWorld;
          cur.position += cur.velocity * dt + 0.5 * dt * dt * a_world;
          cur.velocity += a_world * dt;
          cur.rotation = (cur.rotation * exp_so3(s.gyro * dt)).normalized();
        }
      }
      cur.time = t_next;
      if (idx < imu_.size() && imu_[idx].time <= cur.time) ++idx;
    }
    cur.time = t_target;
    states_.push_back(cur);
  }
}

void LocalTrajectory::apply_correction(const Pose& delta, double dt_span) {
  if (delta.rotation.w() == 1.0 && delta.rotation.x() == 0.0 &&
      delta.rotation.y() == 0.0 && delta.rotation.z() == 0.0 &&
      delta.translation.x() == 0.0 && delta.translation.y() == 0.0 &&
      delta.translation.z() == 0.0) {
    return;  // identity correction leaves the trajectory bit-identical
  }
  assert(dt_span > 0.0);
  const Eigen::Vector3d dv = delta.translation / dt_span;
  for (NavState& s : states_) {
    s.rotation = (delta.rotation * s.rotation).normalized();
    s.position = delta.rotation * s.position + delta.translation;
    s.velocity = delta.rotation * s.velocity + dv;
  }
}

void LocalTrajectory::rebase(const Pose& new_frame_in_old) {
  const Pose inv = inverse(new_frame_in_old);
  for (NavState& s : states_) {
    s.rotation = (inv.rotation * s.rotation).normalized();
    s.position = inv.transform(s.position);
    s.velocity = inv.rotation * s.velocity;
  }
}

void LocalTrajectory::prune_to(std::int64_t first_keep) {
  if (first_keep <= first_fence_) return;
  const std::int64_t last = last_fence();
  assert(first_keep <= last);
  const auto drop = static_cast<std::ptrdiff_t>(first_keep - first_fence_);
  states_.erase(states_.begin(), states_.begin() + drop);
  first_fence_ = first_keep;
  const double horizon = states_.front().time;
  while (!imu_.empty() && imu_.front().time < horizon - state_dt_) {
    imu_.pop_front();
  }
  (void)last;
}

}  // namespace lodom
