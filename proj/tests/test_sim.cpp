#include <doctest.h>

#include <cmath>
#include <random>

#include "gelslam/sim.hpp"
#include "gelslam/surface_maps.hpp"

using namespace gelslam;

namespace {

// Pose looking straight down at the top of a sphere centered at the origin,
// pressing to the given depth, sensor axes aligned with object axes.
TransformSE3 top_press_pose(const SensorSpec& spec, double sphere_radius_mm,
                            double depth_mm) {
  TransformSE3 S;
  Vec3 c((spec.width - 1) * 0.5 * spec.pitch_mm, (spec.height - 1) * 0.5 * spec.pitch_mm,
         0.0);
  S.translation = Vec3(0, 0, sphere_radius_mm - depth_mm) - c;
  return S;
}

}  // namespace

TEST_CASE("shade/unshade round trip on the normal cone") {
  PhotometricModel photo;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    // random stored normal with n_z < 0, within ~60 deg of vertical
    Vec3 n(0.8 * u(rng), 0.8 * u(rng), -1.0);
    n.normalize();
    Vec3 rgb = photo.shade(n);
    CHECK(rgb.minCoeff() >= 0.0);
    CHECK(rgb.maxCoeff() <= 1.0);
    // the inverse is only exact where no channel clips: the Lambert term
    // floors at the ambient level and the total saturates at 1
    if (rgb.minCoeff() <= photo.ambient + 1e-9 || rgb.maxCoeff() > 1.0 - 1e-9) continue;
    Vec3 back = photo.unshade(rgb);
    CHECK((back.normalized() - n).norm() < 1e-6);
  }
}

TEST_CASE("photometric map is injective on the normal cone (sampled)") {
  PhotometricModel photo;
  std::vector<std::pair<Vec3, Vec3>> samples;
  for (double gu = -1.0; gu <= 1.0; gu += 0.25)
    for (double gv = -1.0; gv <= 1.0; gv += 0.25) {
      Vec3 n = Vec3(gu, gv, -1.0).normalized();
      samples.push_back({n, photo.shade(n)});
    }
  for (size_t i = 0; i < samples.size(); ++i)
    for (size_t j = i + 1; j < samples.size(); ++j) {
      double dn = (samples[i].first - samples[j].first).norm();
      double dc = (samples[i].second - samples[j].second).norm();
      if (dn > 1e-6) CHECK(dc > 1e-6);
    }
}

TEST_CASE("render_frame: object far away gives empty mask, flat normals") {
  SensorSpec spec;
  auto obj = SyntheticObject::sphere(10.0);
  TransformSE3 far_pose = top_press_pose(spec, 10.0, -5.0);  // 5 mm above the gel
  RenderOptions opts;
  opts.normal_noise_deg = 0.0;
  RenderedFrame f = render_frame(obj, far_pose, spec, PhotometricModel{}, opts);
  CHECK(count_nonzero(f.gt_mask) == 0);
  for (const Vec3& n : f.normal.data()) CHECK((n - Vec3(0, 0, -1)).norm() < 1e-9);
}

TEST_CASE("render_frame: contact disc radius matches chord formula within 5%") {
  SensorSpec spec;
  double R = 10.0;
  auto obj = SyntheticObject::sphere(R);
  RenderOptions opts;
  opts.normal_noise_deg = 0.0;
  for (double depth : {0.2, 0.5, 1.0, 1.5, 2.0}) {
    RenderedFrame f =
        render_frame(obj, top_press_pose(spec, R, depth), spec, PhotometricModel{}, opts);
    double analytic_mm = std::sqrt(2.0 * R * depth - depth * depth);
    double area_px = count_nonzero(f.gt_mask);
    double r_mm = std::sqrt(area_px / M_PI) * spec.pitch_mm;
    CHECK(r_mm == doctest::Approx(analytic_mm).epsilon(0.05));
  }
}

TEST_CASE("render_frame: RGB inverted by the ideal inverse recovers normals") {
  SensorSpec spec;
  auto obj = SyntheticObject::sphere(10.0);
  RenderOptions opts;
  opts.normal_noise_deg = 0.0;
  PhotometricModel photo;
  RenderedFrame f = render_frame(obj, top_press_pose(spec, 10.0, 1.0), spec, photo, opts);
  double sum_deg = 0.0;
  int n = 0;
  for (int v = 0; v < spec.height; ++v)
    for (int u = 0; u < spec.width; ++u) {
      if (!f.gt_mask.at(u, v)) continue;
      Vec3 rec = photo.unshade(f.rgb.at(u, v)).normalized();
      double c = std::clamp(rec.dot(f.normal.at(u, v)), -1.0, 1.0);
      sum_deg += std::acos(c) * 180.0 / M_PI;
      ++n;
    }
  REQUIRE(n > 1000);
  CHECK(sum_deg / n < 1.0);
}

TEST_CASE("render_frame: ground-truth height round trips through Poisson") {
  SensorSpec spec;
  auto obj = SyntheticObject::sphere(10.0);
  RenderOptions opts;
  opts.normal_noise_deg = 0.0;
  RenderedFrame f =
      render_frame(obj, top_press_pose(spec, 10.0, 1.0), spec, PhotometricModel{}, opts);
  // differentiate gt height, re-integrate, compare inside the mask
  GradientMap g{ImageF(spec.width, spec.height, 0.0), ImageF(spec.width, spec.height, 0.0)};
  for (int v = 1; v < spec.height - 1; ++v)
    for (int u = 1; u < spec.width - 1; ++u) {
      g.gu.at(u, v) = 0.5 * (f.gt_height.at(u + 1, v) - f.gt_height.at(u - 1, v));
      g.gv.at(u, v) = 0.5 * (f.gt_height.at(u, v + 1) - f.gt_height.at(u, v - 1));
    }
  HeightMap h = integrate_height(g, f.gt_mask);
  double sq = 0.0;
  int n = 0;
  for (int v = 0; v < spec.height; ++v)
    for (int u = 0; u < spec.width; ++u) {
      if (!f.gt_mask.at(u, v)) continue;
      double e = h.at(u, v) - f.gt_height.at(u, v);
      sq += e * e;
      ++n;
    }
  CHECK(std::sqrt(sq / n) < 0.05);
}

TEST_CASE("render determinism under a fixed seed") {
  SensorSpec spec;
  auto obj = SyntheticObject::bumpy_sphere(8.0, 0.1, 1.2);
  RenderOptions opts;
  opts.noise_seed = 77;
  TransformSE3 pose = contact_pose(obj, spec, Vec3(0.2, -0.1, 1.0), 1.0, 0.1, 0.0, 0.0);
  RenderedFrame a = render_frame(obj, pose, spec, PhotometricModel{}, opts);
  RenderedFrame b = render_frame(obj, pose, spec, PhotometricModel{}, opts);
  for (size_t i = 0; i < a.normal.size(); ++i)
    CHECK((a.normal.data()[i] - b.normal.data()[i]).norm() == 0.0);

  RenderOptions opts2 = opts;
  opts2.noise_seed = 78;
  RenderedFrame c = render_frame(obj, pose, spec, PhotometricModel{}, opts2);
  double diff = 0.0;
  for (size_t i = 0; i < a.normal.size(); ++i)
    diff += (a.normal.data()[i] - c.normal.data()[i]).norm();
  CHECK(diff > 0.0);
}

TEST_CASE("synthetic objects: SDF sanity and surface_point") {
  for (auto obj : {SyntheticObject::sphere(8.0), SyntheticObject::bumpy_sphere(8.0, 0.1, 1.2),
                   SyntheticObject::superellipsoid(8.0, 6.0, 5.0, 4.0),
                   SyntheticObject::cube(10.0)}) {
    CHECK(obj.sdf(Vec3::Zero()) < 0.0);
    CHECK(obj.sdf(Vec3(0, 0, obj.bound_radius() * 2.0)) > 0.0);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 20; ++i) {
      Vec3 dir(u(rng), u(rng), u(rng));
      if (dir.norm() < 1e-3) continue;
      Vec3 p, n;
      obj.surface_point(dir, &p, &n);
      CHECK(std::abs(obj.sdf(p)) < 1e-6);
      CHECK(n.norm() == doctest::Approx(1.0).epsilon(1e-6));
      // outward normal: positive SDF just outside
      CHECK(obj.sdf(p + 0.01 * n) > 0.0);
      CHECK(obj.sdf(p - 0.01 * n) < 0.0);
    }
  }
}

TEST_CASE("trajectories: overlap and timing invariants") {
  SensorSpec spec;
  auto obj = SyntheticObject::bumpy_sphere(8.0, 0.1, 1.2);
  auto traj = make_orbit(obj, spec, 60, 0.35, 1.0, 3);
  REQUIRE(traj.size() == 60);
  int overlapping = 0;
  for (size_t i = 1; i < traj.size(); ++i) {
    CHECK(traj[i].timestamp > traj[i - 1].timestamp);
    CHECK(traj[i].timestamp - traj[i - 1].timestamp ==
          doctest::Approx(1.0 / spec.frame_rate_hz));
    // consecutive sensor origins closer than the sensing diagonal -> overlap
    TransformSE3 rel = traj[i].pose.inverse() * traj[i - 1].pose;
    if (rel.translation.norm() < 5.0) ++overlapping;
  }
  CHECK(overlapping >= int(0.95 * (traj.size() - 1)));

  // orbit closes: last pose near the first
  TransformSE3 loop = traj.front().pose.inverse() * traj.back().pose;
  CHECK(loop.translation.norm() < 1.0);
  CHECK(loop.rotation_angle() * 180.0 / M_PI < 10.0);
}

TEST_CASE("synthesize_sequence: single frame gives identity ground truth") {
  SensorSpec spec;
  auto obj = SyntheticObject::bumpy_sphere(8.0, 0.1, 1.2);
  auto traj = make_orbit(obj, spec, 60, 0.35, 1.0, 3);
  traj.resize(1);
  auto frames = synthesize_sequence_vec(obj, traj, spec, PhotometricModel{}, {});
  REQUIRE(frames.size() == 1);
  CHECK((frames[0].gt_pose.rotation - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(frames[0].gt_pose.translation.norm() < 1e-12);
}

TEST_CASE("synthesize_sequence: pure-translation trajectory passes through") {
  SensorSpec spec;
  auto obj = SyntheticObject::sphere(10.0);
  ScanTrajectory traj;
  for (int k = 0; k < 5; ++k) {
    TimedPose tp;
    tp.timestamp = k / spec.frame_rate_hz;
    tp.pose = top_press_pose(spec, 10.0, 1.0);
    tp.pose.translation += Vec3(0.1 * k, 0.0, 0.0);  // slide 0.1 mm/frame in x
    traj.push_back(tp);
  }
  auto frames = synthesize_sequence_vec(obj, traj, spec, PhotometricModel{}, {});
  for (int k = 0; k < 5; ++k) {
    CHECK((frames[k].gt_pose.rotation - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((frames[k].gt_pose.translation - Vec3(0.1 * k, 0, 0)).norm() < 1e-12);
  }
}

TEST_CASE("synthesize_sequence: determinism is bit-exact") {
  SensorSpec spec;
  auto obj = SyntheticObject::bumpy_sphere(8.0, 0.1, 1.2);
  auto traj = make_orbit(obj, spec, 60, 0.35, 1.0, 3);
  traj.resize(3);
  SynthesisOptions opts;
  opts.render.noise_seed = 5;
  auto a = synthesize_sequence_vec(obj, traj, spec, PhotometricModel{}, opts);
  auto b = synthesize_sequence_vec(obj, traj, spec, PhotometricModel{}, opts);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t p = 0; p < a[i].normal.size(); ++p)
      CHECK((a[i].normal.data()[p] - b[i].normal.data()[p]).norm() == 0.0);
}

TEST_CASE("photometric path vs direct path agree within 2 degrees") {
  SensorSpec spec;
  spec.width = 160;
  spec.height = 120;
  spec.pitch_mm = 0.125;
  PhotometricModel photo;
  // quick net training at reduced size
  auto images = generate_ball_press_dataset(spec, photo, 6.31, 12, 3);
  auto samples = calibration_samples(images, spec, 4);
  CalibrationNet net(11);
  TrainParams tp;
  tp.epochs = 80;
  train_calibration(net, samples, tp);

  auto obj = SyntheticObject::bumpy_sphere(8.0, 0.1, 1.2);
  auto traj = make_orbit(obj, spec, 60, 0.35, 1.0, 3);
  traj.resize(2);
  SynthesisOptions direct;
  direct.render.noise_seed = 9;
  auto plain = synthesize_sequence_vec(obj, traj, spec, photo, direct);
  SynthesisOptions viargb = direct;
  viargb.use_photometric = true;
  viargb.net = &net;
  auto thru = synthesize_sequence_vec(obj, traj, spec, photo, viargb);

  for (size_t i = 0; i < plain.size(); ++i) {
    double sum = 0.0;
    int n = 0;
    for (size_t p = 0; p < plain[i].normal.size(); ++p) {
      double c = std::clamp(
          plain[i].normal.data()[p].dot(thru[i].normal.data()[p]), -1.0, 1.0);
      sum += std::acos(c) * 180.0 / M_PI;
      ++n;
    }
    CHECK(sum / n < 2.0);
  }
}
