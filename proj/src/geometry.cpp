#include "gelslam/geometry.hpp"

#include <cmath>

namespace gelslam {

Mat3 skew(const Vec3& w) {
  Mat3 m;
  m << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  return m;
}

Mat3 so3_exp(const Vec3& w) {
  double theta = w.norm();
  Mat3 W = skew(w);
  if (theta < 1e-10) {
    return Mat3::Identity() + W + 0.5 * W * W;
  }
  double a = std::sin(theta) / theta;
  double b = (1.0 - std::cos(theta)) / (theta * theta);
  return Mat3::Identity() + a * W + b * W * W;
}

Vec3 so3_log(const Mat3& R) {
  double c = std::clamp((R.trace() - 1.0) * 0.5, -1.0, 1.0);
  double theta = std::acos(c);
  if (theta < 1e-10) {
    // first-order: vee(R - R^T)/2
    return Vec3{R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1)} * 0.5;
  }
  if (theta > M_PI - 1e-6) {
    throw AngleNearPi{};
  }
  Vec3 v{R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1)};
  return v * (theta / (2.0 * std::sin(theta)));
}

// Left Jacobian of SO(3).
static Mat3 so3_left_jacobian(const Vec3& w) {
  double theta = w.norm();
  Mat3 W = skew(w);
  if (theta < 1e-6) {
    return Mat3::Identity() + 0.5 * W + (1.0 / 6.0) * W * W;
  }
  double t2 = theta * theta;
  double a = (1.0 - std::cos(theta)) / t2;
  double b = (theta - std::sin(theta)) / (t2 * theta);
  return Mat3::Identity() + a * W + b * W * W;
}

static Mat3 so3_left_jacobian_inv(const Vec3& w) {
  double theta = w.norm();
  Mat3 W = skew(w);
  if (theta < 1e-6) {
    return Mat3::Identity() - 0.5 * W + (1.0 / 12.0) * W * W;
  }
  double half = 0.5 * theta;
  double cot = half / std::tan(half);
  return Mat3::Identity() - 0.5 * W + ((1.0 - cot) / (theta * theta)) * W * W;
}

TransformSE3 se3_exp(const Twist6& xi) {
  TransformSE3 T;
  T.rotation = so3_exp(xi.rot);
  T.translation = so3_left_jacobian(xi.rot) * xi.trans;
  return T;
}

Twist6 se3_log(const TransformSE3& T) {
  Twist6 xi;
  xi.rot = so3_log(T.rotation);
  xi.trans = so3_left_jacobian_inv(xi.rot) * T.translation;
  return xi;
}

Rigid2D rigid2d_fit(std::span<const Vec2> src, std::span<const Vec2> dst) {
  if (src.size() < 2 || src.size() != dst.size()) {
    throw DegeneratePointSet{};
  }
  Vec2 cs = Vec2::Zero(), cd = Vec2::Zero();
  for (size_t k = 0; k < src.size(); ++k) {
    cs += src[k];
    cd += dst[k];
  }
  cs /= double(src.size());
  cd /= double(src.size());

  double sxx = 0, sxy = 0, spread = 0;
  for (size_t k = 0; k < src.size(); ++k) {
    Vec2 a = src[k] - cs;
    Vec2 b = dst[k] - cd;
    sxx += a.dot(b);
    sxy += a.x() * b.y() - a.y() * b.x();
    spread += a.squaredNorm();
  }
  if (spread < 1e-18) {
    throw DegeneratePointSet{};
  }
  Rigid2D out;
  out.angle = std::atan2(sxy, sxx);
  double c = std::cos(out.angle), s = std::sin(out.angle);
  out.translation = cd - Vec2{c * cs.x() - s * cs.y(), s * cs.x() + c * cs.y()};
  return out;
}

}  // namespace gelslam
