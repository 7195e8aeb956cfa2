#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "lodom/geometry.hpp"
#include "lodom/lidar_model.hpp"
#include "lodom/sweep_buffer.hpp"
#include "lodom/trajectory.hpp"

namespace lodom::sim {

struct Box {
  Eigen::Vector3f lo, hi;
};

struct Plane {
  Eigen::Vector3f normal;  // unit
  float d = 0.0f;          // n . x = d
};

/// Analytic world: axis-aligned boxes (watertight, hit from inside or out)
/// and infinite planes.
struct Scene {
  std::vector<Box> boxes;
  std::vector<Plane> planes;

  int primitive_count() const {
    return static_cast<int>(boxes.size() + planes.size());
  }
};

struct TrajectorySpec {
  enum class Kind { kStatic, kLine, kCircle, kFigure8, kWaypoints };
  Kind kind = Kind::kStatic;
  double speed = 1.0;  // nominal cruise speed, m/s
  double dwell = 2.0;  // stationary hold at both ends, s
  double ramp = 1.0;   // smoothstep speed ramp, s
  int laps = 1;

  Eigen::Vector3d start = Eigen::Vector3d::Zero();  // static/line start,
                                                    // circle/figure8 center
  double yaw0 = 0.0;
  double length = 10.0;                          // line
  Eigen::Vector3d dir = Eigen::Vector3d(1, 0, 0);  // line direction
  double radius = 5.0;                           // circle
  double fig_a = 7.0, fig_b = 4.0;               // figure8 half extents
  std::vector<Eigen::Vector3d> waypoints;        // closed loop
};

struct TrajectorySample {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Eigen::Vector3d accel = Eigen::Vector3d::Zero();
  double yaw = 0.0;
  double yaw_rate = 0.0;

  Pose pose() const {
    Pose p;
    p.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()));
    p.translation = position;
    return p;
  }
};

/// Closed-form rigid trajectory with smoothstep speed ramps; positions,
/// velocities, accelerations and yaw rates are exact, and loop kinds end
/// exactly where they started (the trailing dwell pins the pose).
class AnalyticTrajectory {
 public:
  explicit AnalyticTrajectory(const TrajectorySpec& spec);

  double duration() const { return duration_; }
  double path_length() const { return path_length_; }
  TrajectorySample sample(double t) const;
  Pose pose(double t) const { return sample(t).pose(); }

  /// Exact body-frame IMU measurement at time t (specific force + rate).
  ImuSample imu(double t) const;

 private:
  struct PathEval {
    Eigen::Vector3d p, d1, d2;  // value and derivatives w.r.t. u
  };
  PathEval eval_path(double u) const;
  void profile(double t_motion, double* w, double* wdot, double* W) const;

  TrajectorySpec spec_;
  double u_end_ = 0.0;
  double path_length_ = 0.0;
  double cruise_ = 0.0;    // cruise seconds
  double motion_ = 0.0;    // ramp + cruise + ramp
  double duration_ = 0.0;  // dwell + motion + dwell
  double w_total_ = 0.0;   // integral of the speed profile
  // waypoint spline coefficients (periodic cubic, per axis)
  std::vector<Eigen::Vector3d> wp_;
  std::vector<Eigen::Vector3d> wp_m_;  // second derivatives at knots
};

/// Casts one block of columns, each column from its own pose (rolling
/// shutter). No hit or out of [min_range, max_range] yields 0. Gaussian
/// range noise is added per valid pixel when sigma > 0.
ColumnBlock raycast_block(const Scene& scene, const LidarModel& model,
                          int start_col_rev, int width, double t_start,
                          const std::vector<Pose>& col_poses,
                          double noise_sigma, std::mt19937_64* rng);

/// IMU samples over [t0, t1) at a fixed rate, exact for analytic kinds.
std::vector<ImuSample> synth_imu(const AnalyticTrajectory& traj, double t0,
                                 double t1, double rate_hz);

// --- Wire formats -----------------------------------------------------

inline constexpr float kTicksPerMeter = 512.0f;

struct FramingError {
  std::uint64_t byte_offset = 0;
  std::string what;
};

/// Per-packet framing: "LPKT", version u16, cols_in_packet u16,
/// start_col u16, t_start f64, rows u16, payload rows x cols u16 range
/// ticks (512 ticks/m, 0 invalid). Little-endian.
class PacketWriter {
 public:
  explicit PacketWriter(std::ostream& os) : os_(os) {}
  void write(const ColumnBlock& block);

 private:
  std::ostream& os_;
};

class PacketReader {
 public:
  explicit PacketReader(std::istream& is) : is_(is) {}
  /// Next packet, nullopt at clean EOF. Throws FramingError on corruption.
  std::optional<ColumnBlock> read();

 private:
  std::istream& is_;
  std::uint64_t offset_ = 0;
};

/// "LIMU" magic then repeated {t f64, accel 3xf32, gyro 3xf32}.
void write_imu_file(const std::string& path, const std::vector<ImuSample>& samples);
std::vector<ImuSample> read_imu_file(const std::string& path);

struct TimedPose {
  double time = 0.0;
  Pose pose;
};

/// TUM text format: t x y z qx qy qz qw.
void write_tum(const std::string& path, const std::vector<TimedPose>& poses);
std::vector<TimedPose> read_tum(const std::string& path);

// --- Scene / dataset registry -----------------------------------------

struct Dataset {
  std::string name;
  Scene scene;
  TrajectorySpec trajectory;
  bool loop = false;  // trajectory returns to its start
};

/// Built-in named datasets ("static-room", "room5", "warehouse50",
/// "corridor", "loop-small", "loop-medium", "loop-large", "square-loop",
/// "forest"). Throws std::invalid_argument for unknown names.
Dataset make_dataset(const std::string& name);
std::vector<std::string> dataset_names();

/// Streams a dataset as packets + IMU + ground truth. Packets arrive in
/// acquisition order, grouped packet_cols columns at a time; ground truth
/// is sampled at packet boundaries. The callbacks may be null.
struct StreamConfig {
  double duration = 0.0;  // 0 = the trajectory's natural duration
  double noise_sigma = 0.01;
  double imu_rate_hz = 400.0;
  bool imu_enabled = true;
  int packet_cols = 16;
  std::uint64_t seed = 0;
};

void stream_dataset(const Dataset& dataset, const LidarModel& model,
                    const StreamConfig& cfg,
                    const std::function<void(const ColumnBlock&)>& on_block,
                    const std::function<void(const ImuSample&)>& on_imu,
                    const std::function<void(const TimedPose&)>& on_gt);

}  // namespace lodom::sim
