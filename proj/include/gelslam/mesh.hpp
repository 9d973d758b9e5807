#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gelslam/geometry.hpp"

namespace gelslam {

struct TriMesh {
  std::vector<Vec3> vertices;           // mm
  std::vector<std::array<int, 3>> faces;

  bool empty() const { return faces.empty(); }
  Vec3 face_normal(int f) const;  // unit, counterclockwise orientation
  double face_area(int f) const;
  double surface_area() const;
  Vec3 centroid() const;  // area-weighted
};

/// True iff every edge is shared by exactly two faces with opposite winding.
bool is_watertight(const TriMesh& mesh);

/// Keeps only the faces of the largest vertex-connected component.
TriMesh largest_component(const TriMesh& mesh);

/// Merges vertices closer than eps and drops degenerate faces.
TriMesh weld_vertices(const TriMesh& mesh, double eps = 1e-9);

/// Zero isosurface of sdf (negative inside) sampled on a regular grid of
/// spacing voxel_mm over [lo, hi]. Output triangles face outward.
TriMesh marching_cubes(const std::function<double(const Vec3&)>& sdf, Vec3 lo,
                       Vec3 hi, double voxel_mm);

void save_ply(const TriMesh& mesh, const std::string& path);
void save_obj(const TriMesh& mesh, const std::string& path);
TriMesh load_ply(const std::string& path);

/// Closest point on triangle abc to p.
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                               const Vec3& c);

/// Uniform grid over the faces for nearest-surface and ray queries.
class MeshDistanceField {
 public:
  explicit MeshDistanceField(const TriMesh& mesh, double cell_mm = 0.5);

  double distance(const Vec3& p) const;
  /// Nearest surface point and its face index.
  std::pair<Vec3, int> closest(const Vec3& p) const;

  /// First intersection of p + t*dir (t > 0), if any.
  std::optional<double> raycast(const Vec3& p, const Vec3& dir) const;

  const TriMesh& mesh() const { return mesh_; }

 private:
  TriMesh mesh_;
  Vec3 lo_, hi_;
  double cell_;
  int nx_, ny_, nz_;
  std::vector<std::vector<int>> cells_;  // face indices per cell

  int cell_index(int x, int y, int z) const { return (z * ny_ + y) * nx_ + x; }
};

/// Seeded area-weighted uniform samples on the surface.
std::vector<Vec3> sample_surface(const TriMesh& mesh, int n, unsigned seed);

}  // namespace gelslam
