#include "lodom/sim.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "lodom/kernels.hpp"

namespace lodom::sim {

namespace {

const Eigen::Vector3d kGravityWorld(0.0, 0.0, -kGravity);

double wrap_u(double u, double period) {
  if (period <= 0.0) return u;
  double w = std::fmod(u, period);
  if (w < 0.0) w += period;
  return w;
}

/// Standard normal via Box-Muller on the raw 64-bit stream; avoids the
/// implementation-defined std::normal_distribution so streams are stable
/// across standard libraries.
double gauss(std::mt19937_64& rng) {
  const double u1 =
      (static_cast<double>(rng() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  const double u2 =
      (static_cast<double>(rng() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace

AnalyticTrajectory::AnalyticTrajectory(const TrajectorySpec& spec)
    : spec_(spec) {
  using Kind = TrajectorySpec::Kind;
  double lap_u = 0.0;     // path-parameter length of one lap
  double lap_len = 0.0;   // meters per lap

  switch (spec_.kind) {
    case Kind::kStatic:
      u_end_ = 0.0;
      path_length_ = 0.0;
      break;
    case Kind::kLine:
      lap_u = spec_.length;
      lap_len = spec_.length;
      u_end_ = spec_.length;
      path_length_ = spec_.length;
      break;
    case Kind::kCircle:
      lap_u = 2.0 * M_PI;
      lap_len = 2.0 * M_PI * spec_.radius;
      u_end_ = lap_u * spec_.laps;
      path_length_ = lap_len * spec_.laps;
      break;
    case Kind::kFigure8:
    case Kind::kWaypoints: {
      if (spec_.kind == Kind::kWaypoints) {
        wp_ = spec_.waypoints;
        if (wp_.size() < 3) {
          throw std::invalid_argument("waypoints: need at least 3 points");
        }
        // Periodic natural cubic spline: M[i-1] + 4 M[i] + M[i+1] =
        // 6 (p[i+1] - 2 p[i] + p[i-1]), indices mod n, unit knot spacing.
        const int n = static_cast<int>(wp_.size());
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
        Eigen::MatrixXd rhs(n, 3);
        for (int i = 0; i < n; ++i) {
          a(i, (i + n - 1) % n) += 1.0;
          a(i, i) += 4.0;
          a(i, (i + 1) % n) += 1.0;
          rhs.row(i) = 6.0 * (wp_[(i + 1) % n] - 2.0 * wp_[i] + wp_[(i + n - 1) % n]).transpose();
        }
        const Eigen::MatrixXd m = a.partialPivLu().solve(rhs);
        wp_m_.resize(n);
        for (int i = 0; i < n; ++i) wp_m_[i] = m.row(i).transpose();
        lap_u = n;
      } else {
        lap_u = 2.0 * M_PI;
      }
      u_end_ = lap_u * spec_.laps;
      // Simpson quadrature of |P'| over one lap.
      const int steps = 4096;
      const double h = lap_u / steps;
      double L = 0.0;
      for (int i = 0; i <= steps; ++i) {
        const double w = (i == 0 || i == steps) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        L += w * eval_path(i * h).d1.norm();
      }
      lap_len = L * h / 3.0;
      path_length_ = lap_len * spec_.laps;
      break;
    }
  }

  if (spec_.kind == Kind::kStatic) {
    cruise_ = 0.0;
    motion_ = 0.0;
    w_total_ = 0.0;
    duration_ = 2.0 * spec_.dwell;
    if (duration_ <= 0.0) duration_ = 1.0;
    return;
  }

  const double speed = std::max(1e-6, spec_.speed);
  double ramp = spec_.ramp;
  if (path_length_ / speed < 2.0 * ramp) ramp = 0.5 * path_length_ / speed;
  spec_.ramp = ramp;
  cruise_ = path_length_ / speed - ramp;
  motion_ = cruise_ + 2.0 * ramp;
  w_total_ = (cruise_ + ramp) * speed;  // meters of progress
  duration_ = 2.0 * spec_.dwell + motion_;
}

AnalyticTrajectory::PathEval AnalyticTrajectory::eval_path(double u) const {
  using Kind = TrajectorySpec::Kind;
  PathEval e;
  switch (spec_.kind) {
    case Kind::kStatic:
      e.p = spec_.start;
      e.d1 = Eigen::Vector3d(std::cos(spec_.yaw0), std::sin(spec_.yaw0), 0);
      e.d2.setZero();
      break;
    case Kind::kLine:
      e.p = spec_.start + spec_.dir * u;
      e.d1 = spec_.dir;
      e.d2.setZero();
      break;
    case Kind::kCircle: {
      const double uw = wrap_u(u, 2.0 * M_PI);
      const double c = std::cos(uw), s = std::sin(uw);
      const double r = spec_.radius;
      e.p = spec_.start + Eigen::Vector3d(r * c, r * s, 0);
      e.d1 = Eigen::Vector3d(-r * s, r * c, 0);
      e.d2 = Eigen::Vector3d(-r * c, -r * s, 0);
      break;
    }
    case Kind::kFigure8: {
      const double uw = wrap_u(u, 2.0 * M_PI);
      const double a = spec_.fig_a, b = spec_.fig_b;
      const double s = std::sin(uw), c = std::cos(uw);
      const double s2 = std::sin(2 * uw), c2 = std::cos(2 * uw);
      e.p = spec_.start + Eigen::Vector3d(a * s, 0.5 * b * s2, 0);
      e.d1 = Eigen::Vector3d(a * c, b * c2, 0);
      e.d2 = Eigen::Vector3d(-a * s, -2.0 * b * s2, 0);
      break;
    }
    case Kind::kWaypoints: {
      const int n = static_cast<int>(wp_.size());
      const double uw = wrap_u(u, n);
      int i = static_cast<int>(uw);
      if (i >= n) i = n - 1;
      const double s = uw - i;
      const int j = (i + 1) % n;
      const double s1 = 1.0 - s;
      e.p = wp_[i] * s1 + wp_[j] * s +
            wp_m_[i] * ((s1 * s1 * s1 - s1) / 6.0) +
            wp_m_[j] * ((s * s * s - s) / 6.0);
      e.d1 = wp_[j] - wp_[i] + wp_m_[i] * ((1.0 - 3.0 * s1 * s1) / 6.0) +
             wp_m_[j] * ((3.0 * s * s - 1.0) / 6.0);
      e.d2 = wp_m_[i] * s1 + wp_m_[j] * s;
      break;
    }
  }
  return e;
}

void AnalyticTrajectory::profile(double tm, double* w, double* wdot,
                                 double* W) const {
  const double r = spec_.ramp;
  const double speed = std::max(1e-6, spec_.speed);
  if (tm <= 0.0 || motion_ <= 0.0) {
    *w = 0.0;
    *wdot = 0.0;
    *W = 0.0;
    return;
  }
  if (tm >= motion_) {
    *w = 0.0;
    *wdot = 0.0;
    *W = w_total_;
    return;
  }
  if (r > 0.0 && tm < r) {
    const double u = tm / r;
    *w = speed * (3 * u * u - 2 * u * u * u);
    *wdot = speed * (6 * u - 6 * u * u) / r;
    *W = speed * r * (u * u * u - 0.5 * u * u * u * u);
    return;
  }
  if (tm < r + cruise_) {
    *w = speed;
    *wdot = 0.0;
    *W = speed * (0.5 * r + (tm - r));
    return;
  }
  const double u = (tm - r - cruise_) / r;
  *w = speed * (1.0 - (3 * u * u - 2 * u * u * u));
  *wdot = -speed * (6 * u - 6 * u * u) / r;
  *W = speed * (0.5 * r + cruise_ + r * (u - u * u * u + 0.5 * u * u * u * u));
}

TrajectorySample AnalyticTrajectory::sample(double t) const {
  using Kind = TrajectorySpec::Kind;
  TrajectorySample out;
  if (spec_.kind == Kind::kStatic) {
    out.position = spec_.start;
    out.yaw = spec_.yaw0;
    return out;
  }

  const bool loop = spec_.kind == Kind::kCircle ||
                    spec_.kind == Kind::kFigure8 ||
                    spec_.kind == Kind::kWaypoints;
  const double tm = t - spec_.dwell;
  double u;
  double udot = 0.0, uddot = 0.0;
  if (tm >= motion_ && loop) {
    // The trailing dwell pins the pose to the exact start of the loop.
    u = 0.0;
  } else {
    double w, wdot, W;
    profile(tm, &w, &wdot, &W);
    u = u_end_ * W / w_total_;
    udot = u_end_ * w / w_total_;
    uddot = u_end_ * wdot / w_total_;
  }

  const PathEval e = eval_path(u);
  out.position = e.p;
  out.velocity = e.d1 * udot;
  out.accel = e.d2 * (udot * udot) + e.d1 * uddot;
  out.yaw = std::atan2(e.d1.y(), e.d1.x());
  const double n2 = e.d1.x() * e.d1.x() + e.d1.y() * e.d1.y();
  out.yaw_rate =
      n2 > 0.0 ? (e.d1.x() * e.d2.y() - e.d1.y() * e.d2.x()) / n2 * udot : 0.0;
  return out;
}

ImuSample AnalyticTrajectory::imu(double t) const {
  const TrajectorySample s = sample(t);
  ImuSample m;
  m.time = t;
  const Eigen::Quaterniond q(Eigen::AngleAxisd(s.yaw, Eigen::Vector3d::UnitZ()));
  m.accel = q.conjugate() * (s.accel - kGravityWorld);
  m.gyro = Eigen::Vector3d(0, 0, s.yaw_rate);
  return m;
}

ColumnBlock raycast_block(const Scene& scene, const LidarModel& model,
                          int start_col_rev, int width, double t_start,
                          const std::vector<Pose>& col_poses,
                          double noise_sigma, std::mt19937_64* rng) {
  assert(static_cast<int>(col_poses.size()) == width);
  const int rows = model.rows();
  ColumnBlock block;
  block.start_col = start_col_rev;
  block.width = width;
  block.rows = rows;
  block.t_start = t_start;
  block.ranges.assign(static_cast<std::size_t>(rows) * width, 0.0f);

  const float t_min = static_cast<float>(model.min_range());
  const float max_range = 65535.0f / kTicksPerMeter;

  std::vector<float> dx(rows), dy(rows), dz(rows), t(rows);
  std::vector<std::int32_t> hit(rows);

  for (int c = 0; c < width; ++c) {
    const Pose& pose = col_poses[c];
    const int rev_col = (start_col_rev + c) % model.cols();
    const Eigen::Matrix3d r = pose.rotation.toRotationMatrix();
    for (int i = 0; i < rows; ++i) {
      const Eigen::Vector3d d = r * model.beam_dir(i, rev_col);
      dx[i] = static_cast<float>(d.x());
      dy[i] = static_cast<float>(d.y());
      dz[i] = static_cast<float>(d.z());
      t[i] = std::numeric_limits<float>::infinity();
      hit[i] = -1;
    }
    const float origin[3] = {static_cast<float>(pose.translation.x()),
                             static_cast<float>(pose.translation.y()),
                             static_cast<float>(pose.translation.z())};
    std::int32_t id = 0;
    for (const Box& box : scene.boxes) {
      const float lo[3] = {box.lo.x(), box.lo.y(), box.lo.z()};
      const float hi[3] = {box.hi.x(), box.hi.y(), box.hi.z()};
      kernels::ray_box(origin, dx.data(), dy.data(), dz.data(), rows, lo, hi,
                       t_min, id++, t.data(), hit.data());
    }
    for (const Plane& plane : scene.planes) {
      const float nrm[3] = {plane.normal.x(), plane.normal.y(), plane.normal.z()};
      kernels::ray_plane(origin, dx.data(), dy.data(), dz.data(), rows, nrm,
                         plane.d, t_min, id++, t.data(), hit.data());
    }
    for (int i = 0; i < rows; ++i) {
      if (hit[i] < 0 || !(t[i] <= max_range)) continue;
      float range = t[i];
      if (noise_sigma > 0.0 && rng != nullptr) {
        range += static_cast<float>(noise_sigma * gauss(*rng));
        range = std::clamp(range, t_min, max_range);
      }
      block.at(i, c) = range;
    }
  }
  return block;
}

std::vector<ImuSample> synth_imu(const AnalyticTrajectory& traj, double t0,
                                 double t1, double rate_hz) {
  std::vector<ImuSample> out;
  const double dt = 1.0 / rate_hz;
  for (std::int64_t k = static_cast<std::int64_t>(std::ceil(t0 * rate_hz));; ++k) {
    const double t = k * dt;
    if (t >= t1) break;
    out.push_back(traj.imu(t));
  }
  return out;
}

// --- Wire formats -------------------------------------------------------

namespace {

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

}  // namespace

void PacketWriter::write(const ColumnBlock& block) {
  os_.write("LPKT", 4);
  put<std::uint16_t>(os_, 1);
  put<std::uint16_t>(os_, static_cast<std::uint16_t>(block.width));
  put<std::uint16_t>(os_, static_cast<std::uint16_t>(block.start_col));
  put<double>(os_, block.t_start);
  put<std::uint16_t>(os_, static_cast<std::uint16_t>(block.rows));
  std::vector<std::uint16_t> ticks(block.ranges.size());
  kernels::meters_to_ticks(block.ranges.data(), ticks.data(),
                           block.ranges.size(), kTicksPerMeter);
  os_.write(reinterpret_cast<const char*>(ticks.data()),
            static_cast<std::streamsize>(ticks.size() * sizeof(std::uint16_t)));
}

std::optional<ColumnBlock> PacketReader::read() {
  char magic[4];
  is_.read(magic, 4);
  if (is_.gcount() == 0 && is_.eof()) return std::nullopt;
  if (is_.gcount() != 4 || std::memcmp(magic, "LPKT", 4) != 0) {
    throw FramingError{offset_, "bad packet magic"};
  }
  std::uint16_t version = 0, width = 0, start_col = 0, rows = 0;
  double t_start = 0.0;
  auto get = [&](auto& v) {
    is_.read(reinterpret_cast<char*>(&v), sizeof(v));
    return is_.gcount() == static_cast<std::streamsize>(sizeof(v));
  };
  if (!get(version) || !get(width) || !get(start_col) || !get(t_start) ||
      !get(rows)) {
    throw FramingError{offset_, "truncated packet header"};
  }
  if (version != 1 || width == 0 || rows == 0) {
    throw FramingError{offset_, "bad packet header"};
  }
  ColumnBlock block;
  block.start_col = start_col;
  block.width = width;
  block.rows = rows;
  block.t_start = t_start;
  const std::size_t n = static_cast<std::size_t>(rows) * width;
  std::vector<std::uint16_t> ticks(n);
  is_.read(reinterpret_cast<char*>(ticks.data()),
           static_cast<std::streamsize>(n * sizeof(std::uint16_t)));
  if (is_.gcount() != static_cast<std::streamsize>(n * sizeof(std::uint16_t))) {
    throw FramingError{offset_, "truncated packet payload"};
  }
  block.ranges.resize(n);
  kernels::ticks_to_meters(ticks.data(), block.ranges.data(), n,
                           1.0f / kTicksPerMeter);
  offset_ += 4 + 2 + 2 + 2 + 8 + 2 + n * sizeof(std::uint16_t);
  return block;
}

void write_imu_file(const std::string& path,
                    const std::vector<ImuSample>& samples) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os.write("LIMU", 4);
  for (const ImuSample& s : samples) {
    put<double>(os, s.time);
    for (int i = 0; i < 3; ++i) put<float>(os, static_cast<float>(s.accel[i]));
    for (int i = 0; i < 3; ++i) put<float>(os, static_cast<float>(s.gyro[i]));
  }
}

std::vector<ImuSample> read_imu_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  if (is.gcount() != 4 || std::memcmp(magic, "LIMU", 4) != 0) {
    throw std::runtime_error("not an IMU stream: " + path);
  }
  std::vector<ImuSample> out;
  for (;;) {
    double t;
    float a[3], g[3];
    is.read(reinterpret_cast<char*>(&t), sizeof(t));
    if (is.gcount() == 0 && is.eof()) break;
    is.read(reinterpret_cast<char*>(a), sizeof(a));
    is.read(reinterpret_cast<char*>(g), sizeof(g));
    if (!is) throw std::runtime_error("truncated IMU stream: " + path);
    ImuSample s;
    s.time = t;
    s.accel = Eigen::Vector3d(a[0], a[1], a[2]);
    s.gyro = Eigen::Vector3d(g[0], g[1], g[2]);
    out.push_back(s);
  }
  return out;
}

void write_tum(const std::string& path, const std::vector<TimedPose>& poses) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << std::setprecision(9) << std::fixed;
  for (const TimedPose& tp : poses) {
    const auto& q = tp.pose.rotation;
    const auto& p = tp.pose.translation;
    os << tp.time << ' ' << p.x() << ' ' << p.y() << ' ' << p.z() << ' '
       << q.x() << ' ' << q.y() << ' ' << q.z() << ' ' << q.w() << '\n';
  }
}

std::vector<TimedPose> read_tum(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  std::vector<TimedPose> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    TimedPose tp;
    double qx, qy, qz, qw;
    if (!(ss >> tp.time >> tp.pose.translation.x() >>
          tp.pose.translation.y() >> tp.pose.translation.z() >> qx >> qy >>
          qz >> qw)) {
      throw std::runtime_error("bad TUM line in " + path + ": " + line);
    }
    tp.pose.rotation = Eigen::Quaterniond(qw, qx, qy, qz).normalized();
    out.push_back(tp);
  }
  return out;
}

// --- Datasets ------------------------------------------------------------

namespace {

Box make_box(double cx, double cy, double z0, double z1, double sx, double sy) {
  Box b;
  b.lo = Eigen::Vector3f(static_cast<float>(cx - sx / 2),
                         static_cast<float>(cy - sy / 2),
                         static_cast<float>(z0));
  b.hi = Eigen::Vector3f(static_cast<float>(cx + sx / 2),
                         static_cast<float>(cy + sy / 2),
                         static_cast<float>(z1));
  return b;
}

Box shell(double half_x, double half_y, double z0, double z1) {
  Box b;
  b.lo = Eigen::Vector3f(static_cast<float>(-half_x), static_cast<float>(-half_y),
                         static_cast<float>(z0));
  b.hi = Eigen::Vector3f(static_cast<float>(half_x), static_cast<float>(half_y),
                         static_cast<float>(z1));
  return b;
}

// 20x20 m box world shared by the loop scenes; clutter keeps clear of the
// annulus the trajectories sweep.
Scene box20_world() {
  Scene s;
  s.boxes.push_back(shell(10, 10, -1.5, 3.5));
  // center cluster (inside every loop)
  s.boxes.push_back(make_box(0.0, 0.0, -1.5, 1.5, 1.2, 1.2));
  s.boxes.push_back(make_box(1.5, -0.8, -1.5, 0.5, 0.8, 0.8));
  s.boxes.push_back(make_box(-1.2, 1.4, -1.5, 1.0, 0.6, 1.4));
  // wall-side crates and pillars (outside the loops)
  s.boxes.push_back(make_box(9.0, 4.0, -1.5, 2.5, 0.8, 1.6));
  s.boxes.push_back(make_box(-8.8, -3.0, -1.5, 2.0, 1.0, 1.0));
  s.boxes.push_back(make_box(4.5, 9.2, -1.5, 1.8, 1.4, 0.8));
  s.boxes.push_back(make_box(-3.5, -9.1, -1.5, 2.2, 1.2, 1.0));
  s.boxes.push_back(make_box(-9.2, 7.5, -1.5, 3.0, 0.5, 0.5));
  s.boxes.push_back(make_box(8.7, -8.6, -1.5, 2.8, 0.7, 0.7));
  return s;
}

}  // namespace

Dataset make_dataset(const std::string& name) {
  Dataset d;
  d.name = name;
  TrajectorySpec& t = d.trajectory;

  if (name == "static-room") {
    d.scene.boxes.push_back(shell(5, 5, -1.5, 2.5));
    d.scene.boxes.push_back(make_box(3.0, 3.0, -1.5, 2.5, 0.5, 0.5));
    d.scene.boxes.push_back(make_box(-3.0, 3.0, -1.5, 2.5, 0.5, 0.5));
    d.scene.boxes.push_back(make_box(3.0, -3.0, -1.5, 2.5, 0.5, 0.5));
    d.scene.boxes.push_back(make_box(-3.0, -3.0, -1.5, 2.5, 0.5, 0.5));
    t.kind = TrajectorySpec::Kind::kStatic;
    t.dwell = 5.0;
  } else if (name == "room5") {
    d.scene.boxes.push_back(shell(2.5, 2.5, -1.2, 1.8));
    d.scene.boxes.push_back(make_box(1.6, 1.4, -1.2, 0.2, 0.6, 0.6));
    d.scene.boxes.push_back(make_box(-1.5, -1.2, -1.2, 0.6, 0.8, 0.5));
    t.kind = TrajectorySpec::Kind::kStatic;
    t.dwell = 5.0;
  } else if (name == "warehouse50") {
    d.scene.boxes.push_back(shell(25, 25, -1.5, 8.5));
    const double crates[][4] = {
        {12, 6, 3.0, 2.2},   {-15, 9, 2.4, 3.0},  {18, -14, 4.0, 2.0},
        {-9, -18, 2.0, 2.0}, {5, 20, 3.0, 2.6},   {-21, -4, 2.2, 4.0},
        {20, 15, 2.8, 2.8},  {-14, 19, 2.0, 2.4}, {9, -8, 1.6, 1.6},
        {-5, 12, 2.4, 1.8},  {15, 1, 1.8, 3.2},   {-19, -14, 3.4, 2.2},
    };
    for (const auto& c : crates) {
      d.scene.boxes.push_back(make_box(c[0], c[1], -1.5, 1.5, c[2], c[3]));
    }
    t.kind = TrajectorySpec::Kind::kStatic;
    t.dwell = 5.0;
  } else if (name == "corridor") {
    d.scene.boxes.push_back(make_box(15.0, 0.0, -1.5, 2.0, 38.0, 5.0));
    for (int i = 0; i < 7; ++i) {
      const double x = -2.0 + i * 5.5;
      d.scene.boxes.push_back(make_box(x, 2.1, -1.5, 1.2, 0.4, 0.5));
      d.scene.boxes.push_back(make_box(x + 2.2, -2.1, -1.5, 0.8, 0.5, 0.4));
    }
    t.kind = TrajectorySpec::Kind::kLine;
    t.start = Eigen::Vector3d(-1.0, 0, 0);
    t.dir = Eigen::Vector3d(1, 0, 0);
    t.length = 30.0;
    t.speed = 1.0;
  } else if (name == "loop-small") {
    d.scene = box20_world();
    d.loop = true;
    t.kind = TrajectorySpec::Kind::kCircle;
    t.radius = 5.0;
    t.laps = 2;
    t.speed = 1.0;
  } else if (name == "loop-medium") {
    d.scene = box20_world();
    d.loop = true;
    t.kind = TrajectorySpec::Kind::kFigure8;
    t.fig_a = 7.0;
    t.fig_b = 7.0;
    t.laps = 4;
    t.speed = 1.0;
  } else if (name == "loop-large") {
    d.scene = box20_world();
    d.loop = true;
    t.kind = TrajectorySpec::Kind::kCircle;
    t.radius = 7.9;
    t.laps = 5;
    t.speed = 1.0;
  } else if (name == "square-loop") {
    d.scene = box20_world();
    d.loop = true;
    t.kind = TrajectorySpec::Kind::kWaypoints;
    t.waypoints = {
        {6, 0, 0},  {6, 6, 0},  {0, 6, 0},  {-6, 6, 0},
        {-6, 0, 0}, {-6, -6, 0}, {0, -6, 0}, {6, -6, 0},
    };
    t.laps = 2;
    t.speed = 1.0;
  } else if (name == "forest") {
    Plane ground;
    ground.normal = Eigen::Vector3f(0, 0, 1);
    ground.d = -1.5f;
    d.scene.planes.push_back(ground);
    // Deterministic trunk field in an annulus around the loop.
    std::uint64_t state = 0x9e3779b97f4a7c15ull;
    auto next = [&state]() {
      state ^= state << 13;
      state ^= state >> 7;
      state ^= state << 17;
      return static_cast<double>(state >> 11) / 9007199254740992.0;
    };
    int placed = 0;
    while (placed < 48) {
      const double x = (next() * 2.0 - 1.0) * 15.0;
      const double y = (next() * 2.0 - 1.0) * 15.0;
      const double r = std::hypot(x, y);
      if (r < 7.5 && r > 4.5) continue;  // keep the path clear
      if (r < 1.0) continue;
      d.scene.boxes.push_back(make_box(x, y, -1.5, 2.5 + 2.0 * next(), 0.25, 0.25));
      ++placed;
    }
    d.loop = true;
    t.kind = TrajectorySpec::Kind::kCircle;
    t.radius = 6.0;
    t.laps = 2;
    t.speed = 1.0;
  } else {
    throw std::invalid_argument("unknown dataset: " + name);
  }
  return d;
}

std::vector<std::string> dataset_names() {
  return {"static-room", "room5",      "warehouse50", "corridor",
          "loop-small",  "loop-medium", "loop-large",  "square-loop",
          "forest"};
}

void stream_dataset(const Dataset& dataset, const LidarModel& model,
                    const StreamConfig& cfg,
                    const std::function<void(const ColumnBlock&)>& on_block,
                    const std::function<void(const ImuSample&)>& on_imu,
                    const std::function<void(const TimedPose&)>& on_gt) {
  AnalyticTrajectory traj(dataset.trajectory);
  const double duration = cfg.duration > 0.0 ? cfg.duration : traj.duration();
  const double dt = model.firing_interval();
  const int pkt_cols = cfg.packet_cols;
  const std::int64_t packets =
      static_cast<std::int64_t>(duration / (pkt_cols * dt));
  std::mt19937_64 rng(cfg.seed);

  std::vector<ImuSample> imu;
  if (cfg.imu_enabled && on_imu) {
    imu = synth_imu(traj, 0.0, packets * pkt_cols * dt, cfg.imu_rate_hz);
  }
  std::size_t imu_idx = 0;

  std::vector<Pose> col_poses(pkt_cols);
  for (std::int64_t p = 0; p < packets; ++p) {
    const std::int64_t col0 = p * pkt_cols;
    const double t0 = static_cast<double>(col0) * dt;
    if (on_gt) on_gt(TimedPose{t0, traj.pose(t0)});
    const double t_end = static_cast<double>(col0 + pkt_cols) * dt;
    while (on_imu && imu_idx < imu.size() && imu[imu_idx].time < t_end) {
      on_imu(imu[imu_idx++]);
    }
    for (int c = 0; c < pkt_cols; ++c) {
      col_poses[c] = traj.pose(static_cast<double>(col0 + c) * dt);
    }
    const int start_rev = static_cast<int>(col0 % model.cols());
    ColumnBlock block =
        raycast_block(dataset.scene, model, start_rev, pkt_cols, t0, col_poses,
                      cfg.noise_sigma, &rng);
    if (on_block) on_block(block);
  }
  if (on_gt) {
    const double t_end = static_cast<double>(packets * pkt_cols) * dt;
    on_gt(TimedPose{t_end, traj.pose(t_end)});
  }
}

}  // namespace lodom::sim
