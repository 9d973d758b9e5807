#include "gelslam/reconstruction.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <random>
#include <set>

#include "gelslam/loop_closure.hpp"

namespace gelslam {

double fusion_weight(double boundary_dist_px, const FusionParams& params) {
  return 1.0 /
         (1.0 + std::exp(-(boundary_dist_px - params.boundary_d0_px) /
                         params.boundary_s_px));
}

namespace {

Vec3 lift(const Frame& f, const TransformSE3& pose, double pitch, double u, double v) {
  double h = f.height.sample(u, v);
  return pose.apply(Vec3(u * pitch, v * pitch, h * pitch));
}

}  // namespace

FusedSurface fuse_fast(const std::vector<FusionInput>& inputs, double pitch_mm,
                       const FusionParams& params) {
  if (inputs.empty()) throw NoPoses();
  size_t n = inputs.size();

  // per-keyframe boundary weights and footprints for overlap discovery
  std::vector<ImageF> weights(n);
  std::vector<std::set<long long>> cells(n);
  for (size_t k = 0; k < n; ++k) {
    ImageF d = distance_to_boundary(inputs[k].frame->mask);
    weights[k] = ImageF(d.width(), d.height(), 0.0);
    for (int v = 0; v < d.height(); ++v)
      for (int u = 0; u < d.width(); ++u)
        if (inputs[k].frame->mask.at(u, v))
          weights[k].at(u, v) = fusion_weight(d.at(u, v), params);
    cells[k] = footprint_cells(*inputs[k].frame, inputs[k].pose, pitch_mm, 0.25);
  }
  std::vector<std::vector<size_t>> overlap(n);
  for (size_t a = 0; a < n; ++a)
    for (size_t b = 0; b < n; ++b) {
      if (a == b) continue;
      const auto& small = cells[a].size() < cells[b].size() ? cells[a] : cells[b];
      const auto& big = cells[a].size() < cells[b].size() ? cells[b] : cells[a];
      for (long long c : small)
        if (big.count(c)) {
          overlap[a].push_back(b);
          break;
        }
    }

  FusedSurface out;
  for (size_t k = 0; k < n; ++k) {
    const Frame& f = *inputs[k].frame;
    const TransformSE3& pose = inputs[k].pose;
    int W = f.mask.width(), H = f.mask.height();

    SurfacePatch patch;
    patch.keyframe_id = inputs[k].keyframe_id;
    patch.points = Image<Vec3>(W, H, Vec3::Zero());
    patch.normals = Image<Vec3>(W, H, Vec3::Zero());
    patch.valid = MaskImage(W, H, 0);
    patch.weight = weights[k];

    for (int v = 0; v < H; ++v) {
      for (int u = 0; u < W; ++u) {
        if (!f.mask.at(u, v)) continue;
        double w0 = weights[k].at(u, v);
        Vec3 p0 = lift(f, pose, pitch_mm, u, v);
        Vec3 n0 = pose.rotation * (-f.normal.at(u, v));  // outward
        Vec3 acc_p = w0 * p0, acc_n = w0 * n0;
        double acc_w = w0;
        std::vector<int> contrib{inputs[k].keyframe_id};

        for (size_t m : overlap[k]) {
          const Frame& g = *inputs[m].frame;
          Vec3 q = inputs[m].pose.inverse().apply(p0);
          double gu = q.x() / pitch_mm, gv = q.y() / pitch_mm;
          if (gu < 1 || gv < 1 || gu > g.mask.width() - 2.0 ||
              gv > g.mask.height() - 2.0)
            continue;
          if (!g.mask.at(int(std::lround(gu)), int(std::lround(gv)))) continue;
          double wm = weights[m].sample(gu, gv);
          if (wm <= 0) continue;
          acc_p += wm * lift(g, inputs[m].pose, pitch_mm, gu, gv);
          acc_n += wm * (inputs[m].pose.rotation * -g.normal.sample(gu, gv));
          acc_w += wm;
          contrib.push_back(inputs[m].keyframe_id);
        }
        patch.points.at(u, v) = acc_p / acc_w;
        Vec3 nn = acc_n.norm() > 1e-12 ? Vec3(acc_n.normalized()) : n0;
        patch.normals.at(u, v) = nn;
        patch.valid.at(u, v) = 1;
        out.points.push_back(patch.points.at(u, v));
        out.normals.push_back(nn);
        out.provenance.push_back(std::move(contrib));
      }
    }

    // grid triangulation; skip quads with stretched edges
    double max_edge = params.max_edge_factor * pitch_mm;
    int base = int(out.mesh.vertices.size());
    Image<int> vid(W, H, -1);
    for (int v = 0; v < H; ++v)
      for (int u = 0; u < W; ++u)
        if (patch.valid.at(u, v)) {
          vid.at(u, v) = int(out.mesh.vertices.size());
          out.mesh.vertices.push_back(patch.points.at(u, v));
        }
    (void)base;
    auto edge_ok = [&](int u0, int v0, int u1, int v1) {
      return (patch.points.at(u0, v0) - patch.points.at(u1, v1)).norm() <= max_edge;
    };
    for (int v = 0; v + 1 < H; ++v) {
      for (int u = 0; u + 1 < W; ++u) {
        bool a = patch.valid.at(u, v), b = patch.valid.at(u + 1, v);
        bool c = patch.valid.at(u, v + 1), d = patch.valid.at(u + 1, v + 1);
        if (a && b && c && edge_ok(u, v, u + 1, v) && edge_ok(u, v, u, v + 1) &&
            edge_ok(u + 1, v, u, v + 1))
          out.mesh.faces.push_back({vid.at(u, v), vid.at(u + 1, v), vid.at(u, v + 1)});
        if (b && d && c && edge_ok(u + 1, v, u + 1, v + 1) &&
            edge_ok(u + 1, v + 1, u, v + 1) && edge_ok(u + 1, v, u, v + 1))
          out.mesh.faces.push_back(
              {vid.at(u + 1, v), vid.at(u + 1, v + 1), vid.at(u, v + 1)});
      }
    }
    out.patches.push_back(std::move(patch));
  }
  return out;
}

// --- watertight remesh ------------------------------------------------------

WatertightMesh remesh_watertight(const FusedSurface& fused,
                                 const RemeshParams& params) {
  WatertightMesh out;
  out.voxel_mm = params.voxel_mm;
  if (fused.points.empty()) {
    out.open_scan = true;
    return out;
  }
  const double vox = params.voxel_mm;

  Vec3 lo = fused.points[0], hi = fused.points[0];
  for (const auto& p : fused.points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  lo -= Vec3::Constant(4 * vox);
  hi += Vec3::Constant(4 * vox);

  // lattice matching what marching_cubes will sample
  int nx = std::max(2, int(std::ceil((hi.x() - lo.x()) / vox)) + 1);
  int ny = std::max(2, int(std::ceil((hi.y() - lo.y()) / vox)) + 1);
  int nz = std::max(2, int(std::ceil((hi.z() - lo.z()) / vox)) + 1);
  auto idx = [&](int x, int y, int z) { return (size_t(z) * ny + y) * nx + x; };

  // bucket points by lattice cell for local knn gathering
  std::map<size_t, std::vector<int>> buckets;
  for (size_t i = 0; i < fused.points.size(); ++i) {
    const Vec3& p = fused.points[i];
    int x = std::clamp(int((p.x() - lo.x()) / vox), 0, nx - 1);
    int y = std::clamp(int((p.y() - lo.y()) / vox), 0, ny - 1);
    int z = std::clamp(int((p.z() - lo.z()) / vox), 0, nz - 1);
    buckets[idx(x, y, z)].push_back(int(i));
  }

  // coarse unsigned distance in voxel units: 0 at occupied cells, chamfer
  // elsewhere (two-pass 3-4-5 kernel)
  const double kInf = 1e9;
  std::vector<double> dist(size_t(nx) * ny * nz, kInf);
  for (const auto& [c, pts] : buckets) dist[c] = 0.0;
  const int off[13][3] = {{-1, 0, 0},  {0, -1, 0},  {0, 0, -1}, {-1, -1, 0},
                          {-1, 1, 0},  {-1, 0, -1}, {-1, 0, 1}, {0, -1, -1},
                          {0, -1, 1},  {-1, -1, -1}, {-1, -1, 1}, {-1, 1, -1},
                          {-1, 1, 1}};
  const double w3[13] = {3, 3, 3, 4, 4, 4, 4, 4, 4, 5, 5, 5, 5};
  auto pass = [&](int dir) {
    for (int z = dir > 0 ? 0 : nz - 1; z >= 0 && z < nz; z += dir)
      for (int y = dir > 0 ? 0 : ny - 1; y >= 0 && y < ny; y += dir)
        for (int x = dir > 0 ? 0 : nx - 1; x >= 0 && x < nx; x += dir) {
          double& d = dist[idx(x, y, z)];
          for (int k = 0; k < 13; ++k) {
            int xx = x + dir * off[k][0], yy = y + dir * off[k][1],
                zz = z + dir * off[k][2];
            if (xx < 0 || yy < 0 || zz < 0 || xx >= nx || yy >= ny || zz >= nz)
              continue;
            d = std::min(d, dist[idx(xx, yy, zz)] + w3[k] / 3.0);
          }
        }
  };
  pass(1);
  pass(-1);

  // outside flood fill through far-from-surface vertices
  const double band = 3.0;  // voxels
  std::vector<uint8_t> outside(dist.size(), 0);
  std::queue<std::array<int, 3>> q;
  auto push = [&](int x, int y, int z) {
    size_t i = idx(x, y, z);
    if (!outside[i] && dist[i] >= band) {
      outside[i] = 1;
      q.push({x, y, z});
    }
  };
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x)
        if (x == 0 || y == 0 || z == 0 || x == nx - 1 || y == ny - 1 || z == nz - 1)
          push(x, y, z);
  while (!q.empty()) {
    auto [x, y, z] = q.front();
    q.pop();
    if (x > 0) push(x - 1, y, z);
    if (x < nx - 1) push(x + 1, y, z);
    if (y > 0) push(x, y - 1, z);
    if (y < ny - 1) push(x, y + 1, z);
    if (z > 0) push(x, y, z - 1);
    if (z < nz - 1) push(x, y, z + 1);
  }

  // signed values: near the surface, weighted point-to-plane over knn;
  // far away, +/- chamfer distance with the flood-fill sign
  std::vector<double> sdf(dist.size());
  auto knn_signed = [&](const Vec3& p, int cx, int cy, int cz) {
    struct Cand {
      double d2;
      int i;
    };
    std::vector<Cand> cands;
    for (int r = 0; r <= 6; ++r) {
      for (int z = cz - r; z <= cz + r; ++z)
        for (int y = cy - r; y <= cy + r; ++y)
          for (int x = cx - r; x <= cx + r; ++x) {
            if (x < 0 || y < 0 || z < 0 || x >= nx || y >= ny || z >= nz) continue;
            if (std::max({std::abs(x - cx), std::abs(y - cy), std::abs(z - cz)}) != r)
              continue;
            auto it = buckets.find(idx(x, y, z));
            if (it == buckets.end()) continue;
            for (int i : it->second)
              cands.push_back({(fused.points[i] - p).squaredNorm(), i});
          }
      if (int(cands.size()) >= params.knn) {
        std::nth_element(cands.begin(), cands.begin() + params.knn - 1, cands.end(),
                         [](const Cand& a, const Cand& b) { return a.d2 < b.d2; });
        double dk = std::sqrt(cands[params.knn - 1].d2);
        if (dk <= r * vox || r == 6) break;
      }
    }
    if (cands.empty()) return kInf;
    int k = std::min<int>(params.knn, int(cands.size()));
    std::partial_sort(cands.begin(), cands.begin() + k, cands.end(),
                      [](const Cand& a, const Cand& b) {
                        return a.d2 < b.d2 || (a.d2 == b.d2 && a.i < b.i);
                      });
    double num = 0, den = 0;
    for (int j = 0; j < k; ++j) {
      int i = cands[j].i;
      double w = 1.0 / (std::sqrt(cands[j].d2) + 1e-9);
      num += w * (p - fused.points[i]).dot(fused.normals[i]);
      den += w;
    }
    return num / den;
  };

  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) {
        size_t i = idx(x, y, z);
        if (dist[i] < band) {
          Vec3 p(lo.x() + x * vox, lo.y() + y * vox, lo.z() + z * vox);
          sdf[i] = knn_signed(p, x, y, z);
        } else {
          sdf[i] = (outside[i] ? 1.0 : -1.0) * dist[i] * vox;
        }
      }

  auto lookup = [&](const Vec3& p) {
    double fx = (p.x() - lo.x()) / vox, fy = (p.y() - lo.y()) / vox,
           fz = (p.z() - lo.z()) / vox;
    int x0 = std::clamp(int(std::floor(fx)), 0, nx - 2);
    int y0 = std::clamp(int(std::floor(fy)), 0, ny - 2);
    int z0 = std::clamp(int(std::floor(fz)), 0, nz - 2);
    double tx = std::clamp(fx - x0, 0.0, 1.0), ty = std::clamp(fy - y0, 0.0, 1.0),
           tz = std::clamp(fz - z0, 0.0, 1.0);
    double c00 = sdf[idx(x0, y0, z0)] * (1 - tx) + sdf[idx(x0 + 1, y0, z0)] * tx;
    double c10 = sdf[idx(x0, y0 + 1, z0)] * (1 - tx) + sdf[idx(x0 + 1, y0 + 1, z0)] * tx;
    double c01 = sdf[idx(x0, y0, z0 + 1)] * (1 - tx) + sdf[idx(x0 + 1, y0, z0 + 1)] * tx;
    double c11 =
        sdf[idx(x0, y0 + 1, z0 + 1)] * (1 - tx) + sdf[idx(x0 + 1, y0 + 1, z0 + 1)] * tx;
    return (c00 * (1 - ty) + c10 * ty) * (1 - tz) + (c01 * (1 - ty) + c11 * ty) * tz;
  };

  TriMesh mc = marching_cubes(lookup, lo, hi, vox);
  out.mesh = largest_component(mc);
  // A partial scan does not leave a hole: the isosurface wraps around the
  // point shell as a thin closed crust. Flag it by the enclosed volume per
  // unit surface, which is on the order of the voxel size for a crust but
  // comparable to the object scale for a genuinely closed scan.
  double volume = 0.0;
  for (const auto& f : out.mesh.faces)
    volume += out.mesh.vertices[f[0]].dot(
                  out.mesh.vertices[f[1]].cross(out.mesh.vertices[f[2]])) /
              6.0;
  double area = out.mesh.surface_area();
  bool crust = area > 0.0 && std::abs(volume) < 3.0 * vox * area;
  out.open_scan = !is_watertight(out.mesh) || crust;
  return out;
}

// --- metrics ----------------------------------------------------------------

double chamfer_distance(const TriMesh& a, const TriMesh& b, int samples,
                        unsigned seed) {
  MeshDistanceField fa(a), fb(b);
  auto sa = sample_surface(a, samples, seed);
  auto sb = sample_surface(b, samples, seed);
  double da = 0, db = 0;
  for (const auto& p : sa) da += fb.distance(p);
  for (const auto& p : sb) db += fa.distance(p);
  return 0.5 * (da / samples + db / samples);
}

namespace {

struct ContactRender {
  NormalMap normal;
  MaskImage mask;
};

// Simulated contact normal map: per-pixel raycast toward the surface along
// the sensor's viewing axis.
ContactRender render_mesh_contact(const MeshDistanceField& field,
                                  const TransformSE3& pose, int W, int H,
                                  double pitch, double z_top_mm) {
  ContactRender out;
  out.normal = NormalMap(W, H, Vec3(0, 0, -1));
  out.mask = MaskImage(W, H, 0);
  HeightMap height(W, H, 0.0);
  Vec3 dir = pose.rotation * Vec3(0, 0, -1);
  for (int v = 0; v < H; ++v) {
    for (int u = 0; u < W; ++u) {
      Vec3 o = pose.apply(Vec3(u * pitch, v * pitch, z_top_mm));
      auto t = field.raycast(o, dir);
      if (!t) continue;
      double z = z_top_mm - *t;
      if (z > 0) height.at(u, v) = z / pitch;
    }
  }
  for (int v = 1; v < H - 1; ++v)
    for (int u = 1; u < W - 1; ++u) {
      if (height.at(u, v) <= 0.4) continue;
      double gu = 0.5 * (height.at(u + 1, v) - height.at(u - 1, v));
      double gv = 0.5 * (height.at(u, v + 1) - height.at(u, v - 1));
      Vec3 n(gu, gv, -1.0);
      out.normal.at(u, v) = n.normalized();
      out.mask.at(u, v) = 1;
    }
  return out;
}

// area-weighted surface samples that also report the face hit
std::vector<std::pair<Vec3, int>> sample_with_faces(const TriMesh& mesh, int n,
                                                    unsigned seed) {
  std::vector<double> cum(mesh.faces.size());
  double total = 0;
  for (size_t f = 0; f < mesh.faces.size(); ++f) {
    total += mesh.face_area(int(f));
    cum[f] = total;
  }
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<std::pair<Vec3, int>> out;
  for (int i = 0; i < n; ++i) {
    double r = uni(rng) * total;
    size_t f = std::min(size_t(std::lower_bound(cum.begin(), cum.end(), r) -
                               cum.begin()),
                        mesh.faces.size() - 1);
    double a = uni(rng), b = uni(rng);
    if (a + b > 1) {
      a = 1 - a;
      b = 1 - b;
    }
    const auto& t = mesh.faces[f];
    out.push_back({mesh.vertices[t[0]] + a * (mesh.vertices[t[1]] - mesh.vertices[t[0]]) +
                       b * (mesh.vertices[t[2]] - mesh.vertices[t[0]]),
                   int(f)});
  }
  return out;
}

// sensor pose pressing along the outward normal at a surface point
TransformSE3 touch_pose(const Vec3& point, const Vec3& outward, double depth_mm,
                        int W, int H, double pitch) {
  Vec3 z = outward.normalized();
  Vec3 ref = std::abs(z.z()) < 0.9 ? Vec3(0, 0, 1) : Vec3(1, 0, 0);
  Vec3 x = ref.cross(z).normalized();
  Vec3 y = z.cross(x);
  TransformSE3 T;
  T.rotation.col(0) = x;
  T.rotation.col(1) = y;
  T.rotation.col(2) = z;
  Vec3 center(0.5 * (W - 1) * pitch, 0.5 * (H - 1) * pitch, 0.0);
  T.translation = point - depth_mm * z - T.rotation * center;
  return T;
}

}  // namespace

double normal_cosine_distance(const TriMesh& a, const TriMesh& b,
                              const SensorSpec& spec, const NcdParams& params) {
  MeshDistanceField fa(a), fb(b);
  int W = std::max(8, int(spec.width * params.render_scale));
  int H = std::max(8, int(spec.height * params.render_scale));
  double pitch = spec.pitch_mm / params.render_scale;
  double z_top = params.press_depth_mm + 2.0;

  auto contacts = sample_with_faces(a, params.n_contacts, params.seed);
  double sum = 0;
  long count = 0;
  for (const auto& [p, f] : contacts) {
    TransformSE3 pose =
        touch_pose(p, a.face_normal(f), params.press_depth_mm, W, H, pitch);
    ContactRender ra = render_mesh_contact(fa, pose, W, H, pitch, z_top);
    ContactRender rb = render_mesh_contact(fb, pose, W, H, pitch, z_top);
    for (int v = 0; v < H; ++v)
      for (int u = 0; u < W; ++u)
        if (ra.mask.at(u, v) && rb.mask.at(u, v)) {
          sum += ra.normal.at(u, v).dot(rb.normal.at(u, v));
          ++count;
        }
  }
  return count > 0 ? sum / count : 0.0;
}

// --- alignment --------------------------------------------------------------

namespace {

// Point-to-plane ICP from a given starting transform; returns the refined
// transform and its mean-distance score via `out_score`.
TransformSE3 icp_refine(const std::vector<Vec3>& samples,
                        const MeshDistanceField& fb, const TransformSE3& init,
                        double init_score, double& out_score) {
  auto score = [&](const TransformSE3& T) {
    double s = 0;
    for (const auto& p : samples) s += fb.distance(T.apply(p));
    return s / double(samples.size());
  };
  TransformSE3 T = init;
  double prev = init_score;
  for (int iter = 0; iter < 50; ++iter) {
    Mat6 JtJ = Mat6::Zero();
    Vec6 Jtr = Vec6::Zero();
    for (const auto& p : samples) {
      Vec3 q = T.apply(p);
      auto [c, f] = fb.closest(q);
      if (f < 0) continue;
      Vec3 nrm = fb.mesh().face_normal(f);
      double r = nrm.dot(q - c);
      Vec6 J;
      J.head<3>() = q.cross(nrm);
      J.tail<3>() = nrm;
      JtJ.noalias() += J * J.transpose();
      Jtr.noalias() += J * r;
    }
    Vec6 delta = JtJ.ldlt().solve(-Jtr);
    T = se3_exp(Twist6::from_vector(delta)) * T;
    double s = score(T);
    if (std::abs(prev - s) < 1e-8 * std::max(prev, 1e-12)) {
      prev = s;
      break;
    }
    prev = s;
  }
  out_score = prev;
  return T;
}

}  // namespace

TransformSE3 align_meshes(const TriMesh& a, const TriMesh& b,
                          const TransformSE3& init) {
  MeshDistanceField fb(b);
  auto samples = sample_surface(a, 2000, 11);
  double init_score = 0;
  for (const auto& p : samples) init_score += fb.distance(init.apply(p));
  init_score /= double(samples.size());
  double final_score = 0;
  TransformSE3 T = icp_refine(samples, fb, init, init_score, final_score);
  if (final_score > init_score * (1.0 + 1e-6) + 1e-9) throw Diverged();
  return final_score <= init_score ? T : init;
}

TransformSE3 align_meshes(const TriMesh& a, const TriMesh& b) {
  MeshDistanceField fb(b);
  auto samples = sample_surface(a, 2000, 11);
  auto sb = sample_surface(b, 2000, 11);

  auto moments = [](const std::vector<Vec3>& pts) {
    Vec3 mean = Vec3::Zero();
    for (const auto& p : pts) mean += p;
    mean /= double(pts.size());
    Mat3 cov = Mat3::Zero();
    for (const auto& p : pts) cov += (p - mean) * (p - mean).transpose();
    cov /= double(pts.size());
    return std::make_pair(mean, cov);
  };
  auto [ma, ca] = moments(samples);
  auto [mb, cb] = moments(sb);
  Eigen::SelfAdjointEigenSolver<Mat3> ea(ca), eb(cb);

  auto score = [&](const TransformSE3& T) {
    double s = 0;
    for (const auto& p : samples) s += fb.distance(T.apply(p));
    return s / double(samples.size());
  };

  // principal-axes init, trying the sign combinations with det +1
  TransformSE3 best;
  best.translation = mb - ma;
  double best_score = score(best);
  for (int sx : {-1, 1})
    for (int sy : {-1, 1}) {
      Mat3 S = Vec3(sx, sy, 1).asDiagonal();
      Mat3 R = eb.eigenvectors() * S * ea.eigenvectors().transpose();
      if (R.determinant() < 0) R = eb.eigenvectors() * (S * -1.0) *
                                   ea.eigenvectors().transpose();
      TransformSE3 T{R, mb - R * ma};
      double s = score(T);
      if (s < best_score) {
        best_score = s;
        best = T;
      }
    }
  double init_score = best_score;

  double prev = best_score;
  TransformSE3 T = icp_refine(samples, fb, best, best_score, prev);
  if (prev > init_score * (1.0 + 1e-6) + 1e-9) throw Diverged();
  return prev <= best_score ? T : best;
}

}  // namespace gelslam
