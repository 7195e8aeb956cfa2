#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace lodom {

/// Rigid transform. Frame convention across the whole project is
/// right-handed, z-up, x-forward at azimuth zero. Quaternions serialize
/// scalar-last (x, y, z, w).
struct Pose {
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Pose Identity() { return {}; }

  Eigen::Vector3d transform(const Eigen::Vector3d& p) const {
    return rotation * p + translation;
  }
  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const {
    return transform(p);
  }
};

inline Pose compose(const Pose& a, const Pose& b) {
  Pose out;
  out.rotation = (a.rotation * b.rotation).normalized();
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

inline Pose inverse(const Pose& p) {
  Pose out;
  out.rotation = p.rotation.conjugate();
  out.translation = -(out.rotation * p.translation);
  return out;
}

inline Eigen::Vector3d transform(const Pose& p, const Eigen::Vector3d& pt) {
  return p.transform(pt);
}

/// Rotation angle in radians between two unit quaternions.
inline double rotation_angle(const Eigen::Quaterniond& a,
                             const Eigen::Quaterniond& b) {
  const Eigen::Quaterniond d = a.conjugate() * b;
  const double v = Eigen::Vector3d(d.x(), d.y(), d.z()).norm();
  return 2.0 * std::atan2(v, std::abs(d.w()));
}

inline double rotation_angle(const Pose& a, const Pose& b) {
  return rotation_angle(a.rotation, b.rotation);
}

/// so(3) exponential, rotation vector -> quaternion.
inline Eigen::Quaterniond exp_so3(const Eigen::Vector3d& w) {
  const double theta = w.norm();
  if (theta < 1e-12) {
    Eigen::Quaterniond q(1.0, 0.5 * w.x(), 0.5 * w.y(), 0.5 * w.z());
    return q.normalized();
  }
  const double half = 0.5 * theta;
  const double s = std::sin(half) / theta;
  return Eigen::Quaterniond(std::cos(half), s * w.x(), s * w.y(), s * w.z());
}

/// Inverse of exp_so3.
inline Eigen::Vector3d log_so3(const Eigen::Quaterniond& q_in) {
  Eigen::Quaterniond q = q_in.normalized();
  if (q.w() < 0) q.coeffs() = -q.coeffs();
  const Eigen::Vector3d v(q.x(), q.y(), q.z());
  const double n = v.norm();
  if (n < 1e-12) return 2.0 * v;
  const double theta = 2.0 * std::atan2(n, q.w());
  return (theta / n) * v;
}

inline Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

/// Sample statistics of a 3-D point set: mean, covariance (scatter / weight)
/// and the number of contributing pixels.
struct Gaussian3 {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
  int weight = 0;

  /// Transform the distribution by a rigid pose.
  Gaussian3 transformed(const Pose& p) const {
    Gaussian3 out;
    const Eigen::Matrix3d r = p.rotation.toRotationMatrix();
    out.mean = p.transform(mean);
    out.covariance = r * covariance * r.transpose();
    out.weight = weight;
    return out;
  }
};

/// Moment-matched merge of two point-set Gaussians; equals the Gaussian of
/// the union of the underlying pixel sets up to floating-point rounding.
inline Gaussian3 merge(const Gaussian3& a, const Gaussian3& b) {
  if (a.weight == 0) return b;
  if (b.weight == 0) return a;
  Gaussian3 out;
  const double wa = a.weight;
  const double wb = b.weight;
  const double w = wa + wb;
  out.weight = a.weight + b.weight;
  out.mean = (wa * a.mean + wb * b.mean) / w;
  const Eigen::Vector3d d = a.mean - b.mean;
  out.covariance = (wa * a.covariance + wb * b.covariance +
                    (wa * wb / w) * (d * d.transpose())) /
                   w;
  return out;
}

}  // namespace lodom
