#pragma once

#include <optional>
#include <stdexcept>

#include "gelslam/geometry.hpp"
#include "gelslam/image.hpp"

namespace gelslam {

/// Sensor geometry; defaults correspond to a GelSight-Mini-class sensor
/// with a 20 mm x 15 mm sensing area at 320x240.
struct SensorSpec {
  int width = 320;
  int height = 240;
  double pitch_mm = 0.0625;       // mm per pixel
  double max_indentation_mm = 2.0;
  double frame_rate_hz = 25.0;
};

/// Per-pixel surface gradients (height-pixels per pixel).
struct GradientMap {
  ImageF gu;
  ImageF gv;
};

using NormalMap = ImageV3;    // unit vectors, n_z < 0
using HeightMap = ImageF;     // pixel units; multiply by pitch for mm
using CurvatureMap = ImageF;  // unitless; convex indentations positive
using ContactMask = MaskImage;

struct Frame {
  int id = 0;
  double timestamp = 0.0;
  NormalMap normal;
  HeightMap height;
  CurvatureMap curvature;
  ContactMask mask;
};

struct DegenerateNormal : std::runtime_error {
  DegenerateNormal() : std::runtime_error("normal with |n_z| < 1e-3") {}
};

struct SurfaceMapParams {
  double curvature_blur_sigma = 1.5;  // for the 7x7 filter
  double height_thresh_px = 0.4;      // contact threshold on height
  double rgb_delta_thresh = 0.05;     // contact threshold on intensity change
};

/// Solves laplacian(H) = div(g) with zero Dirichlet border via DST.
HeightMap integrate_height(const GradientMap& g, const ContactMask& mask);

/// Negated central-difference divergence of (gu, gv) followed by a 7x7
/// Gaussian blur, so convex indentations come out positive.
CurvatureMap compute_curvature(const GradientMap& g,
                               const SurfaceMapParams& params = {});

ContactMask compute_contact_mask(const HeightMap& h,
                                 const ImageF* rgb_delta = nullptr,
                                 const SurfaceMapParams& params = {});

NormalMap normals_from_gradients(const GradientMap& g);

/// Throws DegenerateNormal if any pixel has |n_z| < 1e-3.
GradientMap gradients_from_normals(const NormalMap& n);

Frame frame_from_normals(int id, double timestamp, const NormalMap& normal,
                         const SurfaceMapParams& params = {});

}  // namespace gelslam
