#pragma once

#include <memory>
#include <stdexcept>
#include <vector>

#include "gelslam/mesh.hpp"
#include "gelslam/surface_maps.hpp"

namespace gelslam {

struct NoPoses : std::runtime_error {
  NoPoses() : std::runtime_error("fusion called with no posed keyframes") {}
};

struct Diverged : std::runtime_error {
  Diverged() : std::runtime_error("mesh alignment diverged") {}
};

struct FusionInput {
  int keyframe_id = 0;
  std::shared_ptr<const Frame> frame;
  TransformSE3 pose;  // sensor -> object
};

struct FusionParams {
  double boundary_d0_px = 6.0;  // sigmoid midpoint
  double boundary_s_px = 2.0;   // sigmoid slope
  double max_edge_factor = 3.0; // drop grid edges longer than factor * pitch
};

/// One coverage keyframe's averaged point grid.
struct SurfacePatch {
  int keyframe_id = 0;
  Image<Vec3> points;    // object frame, mm
  Image<Vec3> normals;   // outward, unit
  MaskImage valid;
  ImageF weight;         // own sigmoid boundary weight
};

struct FusedSurface {
  TriMesh mesh;  // merged, possibly open
  std::vector<SurfacePatch> patches;
  std::vector<Vec3> points;   // fused oriented point cloud
  std::vector<Vec3> normals;  // outward, unit
  std::vector<std::vector<int>> provenance;  // contributing keyframe ids per point
};

/// Sigmoid boundary down-weighting: w(d) = 1 / (1 + exp(-(d - d0)/s)).
double fusion_weight(double boundary_dist_px, const FusionParams& params = {});

/// Reprojection-weighted averaging of the coverage keyframe grids.
FusedSurface fuse_fast(const std::vector<FusionInput>& inputs, double pitch_mm,
                       const FusionParams& params = {});

struct WatertightMesh {
  TriMesh mesh;
  double voxel_mm = 0.2;
  bool open_scan = false;  // isosurface was not closed
};

struct RemeshParams {
  double voxel_mm = 0.2;
  int knn = 12;
};

/// Signed-distance grid from the fused oriented points, zero isosurface via
/// marching cubes, largest component kept.
WatertightMesh remesh_watertight(const FusedSurface& fused,
                                 const RemeshParams& params = {});

/// Symmetric mean point-to-nearest-surface distance, area-weighted samples.
double chamfer_distance(const TriMesh& a, const TriMesh& b, int samples = 100000,
                        unsigned seed = 1);

struct NcdParams {
  int n_contacts = 100;
  double press_depth_mm = 0.5;
  double render_scale = 0.5;  // resolution factor for the simulated contacts
  unsigned seed = 3;
};

/// Mean per-pixel cosine similarity of simulated contact normal maps taken at
/// matched surface locations on both meshes; 1.0 for identical surfaces.
double normal_cosine_distance(const TriMesh& a, const TriMesh& b,
                              const SensorSpec& spec, const NcdParams& params = {});

/// Transform mapping mesh a onto mesh b: centroid/principal-axes init, then
/// point-to-plane ICP. Throws Diverged if alignment worsens the fit.
TransformSE3 align_meshes(const TriMesh& a, const TriMesh& b);

/// Same refinement from a caller-supplied initial transform (e.g. a known
/// scan anchor pose). ICP has a narrow basin on finely textured surfaces:
/// the blind principal-axes init cannot recover texture phase on
/// near-symmetric shapes, while a coarse initial guess lets the refinement
/// lock on.
TransformSE3 align_meshes(const TriMesh& a, const TriMesh& b,
                          const TransformSE3& init);

}  // namespace gelslam
