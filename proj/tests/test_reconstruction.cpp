#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "gelslam/reconstruction.hpp"
#include "gelslam/sim.hpp"

using namespace gelslam;

namespace {

SensorSpec small_spec() {
  SensorSpec s;
  s.width = 160;
  s.height = 120;
  s.pitch_mm = 0.125;
  return s;
}

SensorSpec tiny_spec() {
  SensorSpec s;
  s.width = 80;
  s.height = 60;
  s.pitch_mm = 0.25;
  return s;
}

std::shared_ptr<Frame> make_frame(const SyntheticObject& obj,
                                  const TransformSE3& pose, const SensorSpec& spec,
                                  int id) {
  RenderedFrame r = render_frame(obj, pose, spec, PhotometricModel{}, RenderOptions{});
  return std::make_shared<Frame>(frame_from_normals(id, id * 0.04, r.normal));
}

// Evenly spread directions over the unit sphere.
std::vector<Vec3> fibonacci_dirs(int n) {
  std::vector<Vec3> dirs;
  const double ga = M_PI * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    double z = 1.0 - 2.0 * (i + 0.5) / n;
    double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    dirs.emplace_back(r * std::cos(ga * i), r * std::sin(ga * i), z);
  }
  return dirs;
}

// Full-coverage scan of a centered object with ground-truth poses.
std::vector<FusionInput> scan_object(const SyntheticObject& obj,
                                     const SensorSpec& spec,
                                     const std::vector<Vec3>& dirs) {
  std::vector<FusionInput> inputs;
  int id = 0;
  for (const Vec3& d : dirs) {
    TransformSE3 S = contact_pose(obj, spec, d, 1.0, 0.0, 0.0, 0.0);
    auto f = make_frame(obj, S, spec, id);
    if (count_nonzero(f->mask) < 50) continue;
    inputs.push_back({id, f, S});
    ++id;
  }
  return inputs;
}

double mesh_volume(const TriMesh& m) {
  double v = 0.0;
  for (const auto& f : m.faces)
    v += m.vertices[f[0]].dot(m.vertices[f[1]].cross(m.vertices[f[2]])) / 6.0;
  return v;
}

}  // namespace

TEST_CASE("fusion weights: range, monotonicity, boundary suppression") {
  FusionParams params;
  double prev = 0.0;
  for (double d = 0.0; d <= 30.0; d += 0.25) {
    double w = fusion_weight(d, params);
    CHECK(w > 0.0);
    CHECK(w <= 1.0);
    CHECK(w >= prev);
    prev = w;
  }
  // points backed only by near-boundary observations stay suppressed
  CHECK(fusion_weight(2.0, params) < 0.15);
  CHECK(fusion_weight(params.boundary_d0_px, params) == doctest::Approx(0.5));
}

TEST_CASE("fuse_fast with no inputs throws") {
  CHECK_THROWS_AS(fuse_fast({}, 0.125), NoPoses);
}

TEST_CASE("single keyframe: patch equals its own lifted height map") {
  SensorSpec spec = small_spec();
  auto obj = SyntheticObject::sphere(8.0);
  TransformSE3 S = contact_pose(obj, spec, Vec3(0.2, 0.1, 1.0), 1.0, 0.3, 0.0, 0.0);
  auto f = make_frame(obj, S, spec, 0);
  FusedSurface fused = fuse_fast({{0, f, S}}, spec.pitch_mm);
  REQUIRE(fused.patches.size() == 1);
  const SurfacePatch& patch = fused.patches[0];
  int checked = 0;
  for (int v = 0; v < spec.height; ++v)
    for (int u = 0; u < spec.width; ++u) {
      if (!patch.valid.at(u, v)) continue;
      CHECK_FALSE(f->mask.at(u, v) == 0);
      Vec3 expect = S.apply(Vec3(u * spec.pitch_mm, v * spec.pitch_mm,
                                 f->height.at(u, v) * spec.pitch_mm));
      CHECK((patch.points.at(u, v) - expect).norm() < 1e-9);
      ++checked;
    }
  CHECK(checked > 500);
  for (const auto& prov : fused.provenance) CHECK(prov == std::vector<int>{0});
  // merged-mesh invariants: finite vertices, no stretched edges
  for (const Vec3& p : fused.mesh.vertices) CHECK(p.allFinite());
  for (const auto& face : fused.mesh.faces)
    for (int e = 0; e < 3; ++e)
      CHECK((fused.mesh.vertices[face[e]] - fused.mesh.vertices[face[(e + 1) % 3]])
                .norm() <= 3.0 * spec.pitch_mm + 1e-9);
}

TEST_CASE("fusing a patch with itself reproduces the same points") {
  SensorSpec spec = tiny_spec();
  auto obj = SyntheticObject::sphere(8.0);
  TransformSE3 S = contact_pose(obj, spec, Vec3(0, 0, 1.0), 1.0, 0.0, 0.0, 0.0);
  auto f = make_frame(obj, S, spec, 0);
  FusedSurface one = fuse_fast({{0, f, S}}, spec.pitch_mm);
  FusedSurface two = fuse_fast({{0, f, S}, {1, f, S}}, spec.pitch_mm);
  for (int v = 0; v < spec.height; ++v)
    for (int u = 0; u < spec.width; ++u) {
      if (!one.patches[0].valid.at(u, v)) continue;
      REQUIRE(two.patches[0].valid.at(u, v) != 0);
      CHECK((one.patches[0].points.at(u, v) - two.patches[0].points.at(u, v)).norm() <
            1e-9);
    }
}

TEST_CASE("two noisy overlapping patches average the depth noise down") {
  SensorSpec spec = small_spec();
  auto obj = SyntheticObject::sphere(8.0);
  TransformSE3 S1 = contact_pose(obj, spec, Vec3(0.06, 0, 1.0), 1.0, 0.0, 0.0, 0.0);
  TransformSE3 S2 = contact_pose(obj, spec, Vec3(-0.06, 0, 1.0), 1.0, 0.0, 0.0, 0.0);
  auto f1 = make_frame(obj, S1, spec, 0);
  auto f2 = make_frame(obj, S2, spec, 1);

  // independent 0.05 mm depth noise on each frame
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0.0, 0.05 / spec.pitch_mm);
  for (auto* f : {f1.get(), f2.get()})
    for (int v = 0; v < spec.height; ++v)
      for (int u = 0; u < spec.width; ++u)
        if (f->mask.at(u, v)) f->height.at(u, v) += g(rng);

  FusedSurface single = fuse_fast({{0, f1, S1}}, spec.pitch_mm);
  FusedSurface both = fuse_fast({{0, f1, S1}, {1, f2, S2}}, spec.pitch_mm);

  auto rms_radial = [](const FusedSurface& fs, bool overlap_only) {
    double acc = 0.0;
    int n = 0;
    for (size_t i = 0; i < fs.points.size(); ++i) {
      if (overlap_only && fs.provenance[i].size() < 2) continue;
      double e = fs.points[i].norm() - 8.0;
      acc += e * e;
      ++n;
    }
    REQUIRE(n > 500);
    return std::sqrt(acc / n);
  };
  double rms_single = rms_radial(single, false);
  double rms_fused = rms_radial(both, true);
  CHECK(rms_fused < rms_single / std::sqrt(2.0) * 1.2);
}

TEST_CASE("full sphere scan remeshes watertight with accurate radius") {
  SensorSpec spec = tiny_spec();
  auto obj = SyntheticObject::sphere(8.0);
  auto inputs = scan_object(obj, spec, fibonacci_dirs(80));
  REQUIRE(inputs.size() > 60);
  FusedSurface fused = fuse_fast(inputs, spec.pitch_mm);

  RemeshParams rp;
  rp.voxel_mm = 0.3;
  WatertightMesh wt = remesh_watertight(fused, rp);
  CHECK_FALSE(wt.open_scan);
  CHECK(is_watertight(wt.mesh));
  REQUIRE(wt.mesh.vertices.size() > 500);
  double mean_err = 0.0;
  for (const Vec3& v : wt.mesh.vertices) mean_err += std::abs(v.norm() - 8.0);
  mean_err /= wt.mesh.vertices.size();
  CHECK(mean_err < 0.1);
}

TEST_CASE("hemispherical partial scan reports an open isosurface") {
  SensorSpec spec = tiny_spec();
  auto obj = SyntheticObject::sphere(8.0);
  std::vector<Vec3> upper;
  for (const Vec3& d : fibonacci_dirs(60))
    if (d.z() > 0.5) upper.push_back(d);
  auto inputs = scan_object(obj, spec, upper);
  REQUIRE(inputs.size() > 5);
  FusedSurface fused = fuse_fast(inputs, spec.pitch_mm);
  RemeshParams rp;
  rp.voxel_mm = 0.3;
  WatertightMesh wt = remesh_watertight(fused, rp);
  CHECK(wt.open_scan);
}

TEST_CASE("cube reconstruction recovers the analytic volume within 5%") {
  // analytic oriented point sampling of a 10 mm cube, no sensor involved
  FusedSurface fused;
  const double h = 5.0, step = 0.25;
  for (int axis = 0; axis < 3; ++axis)
    for (int sign = -1; sign <= 1; sign += 2)
      for (double a = -h + step / 2; a < h; a += step)
        for (double b = -h + step / 2; b < h; b += step) {
          Vec3 p = Vec3::Zero(), n = Vec3::Zero();
          p[axis] = sign * h;
          n[axis] = sign;
          p[(axis + 1) % 3] = a;
          p[(axis + 2) % 3] = b;
          fused.points.push_back(p);
          fused.normals.push_back(n);
        }
  RemeshParams rp;
  rp.voxel_mm = 0.3;
  WatertightMesh wt = remesh_watertight(fused, rp);
  CHECK(is_watertight(wt.mesh));
  CHECK(std::abs(mesh_volume(wt.mesh) - 1000.0) < 50.0);
}

TEST_CASE("chamfer distance: self-zero, analytic offset, exact symmetry") {
  auto sdf_sphere = [](double r) {
    return [r](const Vec3& p) { return p.norm() - r; };
  };
  TriMesh a = marching_cubes(sdf_sphere(10.0), Vec3::Constant(-11), Vec3::Constant(11), 0.25);
  TriMesh b = marching_cubes(sdf_sphere(10.1), Vec3::Constant(-11), Vec3::Constant(11), 0.25);
  CHECK(chamfer_distance(a, a, 20000) < 1e-3);
  double cd = chamfer_distance(a, b, 20000);
  CHECK(cd == doctest::Approx(0.1).epsilon(0.10));
  CHECK(chamfer_distance(a, b, 20000) == chamfer_distance(b, a, 20000));
}

TEST_CASE("NCD: identity is one, bump amplitude degrades it monotonically") {
  SensorSpec spec = tiny_spec();
  const double r = 5.0;
  auto smooth = SyntheticObject::sphere(r);
  auto mesh_of = [&](const SyntheticObject& o) {
    double bnd = r + 0.5;
    return marching_cubes([&o](const Vec3& p) { return o.sdf(p); },
                          Vec3::Constant(-bnd), Vec3::Constant(bnd), 0.1);
  };
  TriMesh base = mesh_of(smooth);
  NcdParams np;
  np.n_contacts = 30;
  CHECK(normal_cosine_distance(base, base, spec, np) == doctest::Approx(1.0).epsilon(1e-6));

  double prev = 1.0;
  for (double amp : {0.02, 0.05, 0.1}) {
    TriMesh bumpy = mesh_of(SyntheticObject::bumpy_sphere(r, amp, 1.0));
    double ncd = normal_cosine_distance(base, bumpy, spec, np);
    CHECK(ncd < prev);
    prev = ncd;
  }
  CHECK(prev < 1.0);
}

TEST_CASE("align_meshes recovers a small offset of identical meshes") {
  auto cube = SyntheticObject::cube(8.0);
  TriMesh a = marching_cubes([&cube](const Vec3& p) { return cube.sdf(p); },
                             Vec3::Constant(-5), Vec3::Constant(5), 0.25);
  Vec3 offset(0.6, -0.5, 0.4);
  TriMesh b = a;
  for (Vec3& v : b.vertices) v += offset;
  TransformSE3 T = align_meshes(a, b);
  CHECK((T.translation - offset).norm() < 1e-3);
  CHECK(T.rotation_angle() < 1e-3);

  // sphere: rotation unobservable, translation still recovered
  auto s = SyntheticObject::sphere(5.0);
  TriMesh sa = marching_cubes([&s](const Vec3& p) { return s.sdf(p); },
                              Vec3::Constant(-6), Vec3::Constant(6), 0.25);
  TriMesh sb = sa;
  for (Vec3& v : sb.vertices) v += offset;
  TransformSE3 Ts = align_meshes(sa, sb);
  CHECK((Ts.translation - offset).norm() < 1e-3);
}
