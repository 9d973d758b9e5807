#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <span>
#include <stdexcept>
#include <vector>

namespace gelslam {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Thrown by se3_log when the rotation angle is within 1e-6 of pi.
struct AngleNearPi : std::runtime_error {
  AngleNearPi() : std::runtime_error("se3_log: rotation angle too close to pi") {}
};

/// Thrown by rigid2d_fit when all source points coincide.
struct DegeneratePointSet : std::runtime_error {
  DegeneratePointSet() : std::runtime_error("rigid2d_fit: degenerate point set") {}
};

/// Rigid transform in 3D. Rotation is a 3x3 orthonormal matrix,
/// translation is in millimeters.
struct TransformSE3 {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static TransformSE3 identity() { return {}; }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

  TransformSE3 compose(const TransformSE3& other) const {
    return {rotation * other.rotation, rotation * other.translation + translation};
  }

  TransformSE3 inverse() const {
    Mat3 rt = rotation.transpose();
    return {rt, -(rt * translation)};
  }

  TransformSE3 operator*(const TransformSE3& other) const { return compose(other); }

  double rotation_angle() const {
    double c = (rotation.trace() - 1.0) * 0.5;
    return std::acos(std::clamp(c, -1.0, 1.0));
  }
};

/// Element of se(3): rotational part in radians, translational part in mm.
struct Twist6 {
  Vec3 rot = Vec3::Zero();
  Vec3 trans = Vec3::Zero();

  Vec6 vector() const {
    Vec6 v;
    v << rot, trans;
    return v;
  }
  static Twist6 from_vector(const Vec6& v) { return {v.head<3>(), v.tail<3>()}; }
  double norm() const { return vector().norm(); }
};

/// Planar rigid transform: rotation angle in radians, translation in pixels.
struct Rigid2D {
  double angle = 0.0;
  Vec2 translation = Vec2::Zero();

  Vec2 apply(const Vec2& p) const {
    double c = std::cos(angle), s = std::sin(angle);
    return {c * p.x() - s * p.y() + translation.x(),
            s * p.x() + c * p.y() + translation.y()};
  }

  Rigid2D inverse() const {
    double c = std::cos(angle), s = std::sin(angle);
    Vec2 t{-c * translation.x() - s * translation.y(),
           s * translation.x() - c * translation.y()};
    return {-angle, t};
  }
};

Mat3 skew(const Vec3& w);

Mat3 so3_exp(const Vec3& w);
Vec3 so3_log(const Mat3& R);

TransformSE3 se3_exp(const Twist6& xi);
Twist6 se3_log(const TransformSE3& T);

/// Least-squares rigid 2D alignment (Umeyama with scale fixed to 1);
/// minimizes sum ||dst_k - R src_k - t||^2.
Rigid2D rigid2d_fit(std::span<const Vec2> src, std::span<const Vec2> dst);

}  // namespace gelslam
