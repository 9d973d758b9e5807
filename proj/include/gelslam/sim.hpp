#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gelslam/calibration.hpp"
#include "gelslam/geometry.hpp"
#include "gelslam/surface_maps.hpp"

namespace gelslam {

/// Watertight analytic object given by a signed distance field in its own
/// frame (mm); negative inside.
class SyntheticObject {
 public:
  using Sdf = std::function<double(const Vec3&)>;

  SyntheticObject(Sdf sdf, double bound_radius_mm, std::string name)
      : sdf_(std::move(sdf)), bound_radius_(bound_radius_mm), name_(std::move(name)) {}

  double sdf(const Vec3& p) const { return sdf_(p); }
  Vec3 sdf_gradient(const Vec3& p) const;
  double bound_radius() const { return bound_radius_; }
  const std::string& name() const { return name_; }

  /// Surface point and outward normal along the ray from the origin in
  /// direction dir (object must be star-shaped about its origin).
  void surface_point(const Vec3& dir, Vec3* point, Vec3* normal) const;

  static SyntheticObject sphere(double radius_mm);
  /// Sphere with an aperiodic radial texture (fixed bank of random-direction
  /// waves); amplitude is the RMS displacement in mm, frequency the maximum
  /// spatial frequency in cycles per mm of arc.
  static SyntheticObject bumpy_sphere(double radius_mm, double amplitude_mm,
                                      double frequency);
  static SyntheticObject superellipsoid(double a_mm, double b_mm, double c_mm,
                                        double exponent);
  static SyntheticObject cube(double side_mm);

 private:
  Sdf sdf_;
  double bound_radius_;
  std::string name_;
};

struct TimedPose {
  double timestamp = 0.0;
  TransformSE3 pose;  // sensor -> object, mm (raw pixel-scaled sensor frame)
  bool in_contact = true;
};

using ScanTrajectory = std::vector<TimedPose>;

/// Three colored directional lights plus an ambient term; Lambertian.
struct PhotometricModel {
  double ambient = 0.1;
  double elevation_deg = 45.0;

  /// Shades the stored (into-object) normal; returns RGB in [0,1].
  Vec3 shade(const Vec3& normal) const;
  /// Least-squares inverse of shade; used by tests and as an ideal baseline.
  Vec3 unshade(const Vec3& rgb) const;
  Vec3 light_dir(int channel) const;
};

struct NoContact : std::runtime_error {
  NoContact() : std::runtime_error("object does not touch the gel") {}
};

struct RenderOptions {
  double gel_blur_sigma_px = 1.0;
  double normal_noise_deg = 0.5;
  uint64_t noise_seed = 0;
  bool allow_empty = true;
};

struct RenderedFrame {
  NormalMap normal;       // noisy, gel-smoothed
  HeightMap gt_height;    // px, gel-smoothed, noiseless
  ContactMask gt_mask;
  Image<Vec3> rgb;        // photometric render of the noisy normals
};

RenderedFrame render_frame(const SyntheticObject& obj, const TransformSE3& pose,
                           const SensorSpec& spec, const PhotometricModel& photo,
                           const RenderOptions& opts = {});

/// One labeled calibration image: RGB render of a ball press with analytic
/// per-pixel gradient labels inside the (eroded) contact disc.
struct BallPressImage {
  Image<Vec3> rgb;
  GradientMap gt_gradient;
  MaskImage label_mask;  // pixels carrying a valid label
};

std::vector<BallPressImage> generate_ball_press_dataset(
    const SensorSpec& spec, const PhotometricModel& photo, double ball_diameter_mm,
    int n_images, uint64_t seed);

/// Flattens labeled press images into per-pixel training samples, taking
/// every stride-th labeled pixel.
std::vector<CalibrationSample> calibration_samples(
    const std::vector<BallPressImage>& images, const SensorSpec& spec, int stride = 1);

/// Runs the calibration net over an RGB image and normalizes the predicted
/// gradients into a normal map.
NormalMap normals_from_rgb(const CalibrationNet& net, const Image<Vec3>& rgb);

// --- trajectory generators -------------------------------------------------

struct WalkParams {
  int n_frames = 300;
  double press_depth_mm = 1.0;
  double depth_jitter_mm = 0.2;
  double step_rate = 0.05;       // OU angular step scale (rad/frame)
  double ou_theta = 0.1;         // OU mean reversion
  double max_tilt_deg = 15.0;
  std::vector<int> break_frames; // frames at which contact is broken
  int break_length = 5;
  uint64_t seed = 1;
};

/// Ornstein-Uhlenbeck random walk over the object surface.
ScanTrajectory make_random_walk(const SyntheticObject& obj, const SensorSpec& spec,
                                const WalkParams& params);

/// Closed loop around a band of constant latitude; ends where it starts.
ScanTrajectory make_orbit(const SyntheticObject& obj, const SensorSpec& spec,
                          int n_frames, double latitude_rad, double press_depth_mm,
                          uint64_t seed);

/// Self-crossing figure-eight path over the surface.
ScanTrajectory make_figure_eight(const SyntheticObject& obj, const SensorSpec& spec,
                                 int n_frames, double extent_rad,
                                 double press_depth_mm, uint64_t seed);

/// Full-coverage spiral scan from pole to pole (for reconstruction runs).
ScanTrajectory make_spiral_scan(const SyntheticObject& obj, const SensorSpec& spec,
                                int n_frames, int n_turns, double press_depth_mm,
                                uint64_t seed);

/// Builds a sensor pose touching the surface point in direction dir with the
/// given press depth, roll about the contact normal, and tilt.
TransformSE3 contact_pose(const SyntheticObject& obj, const SensorSpec& spec,
                          const Vec3& dir, double press_depth_mm, double roll_rad,
                          double tilt_rad, double tilt_azimuth_rad);

// --- sequence synthesis ----------------------------------------------------

struct SequenceFrame {
  int index = 0;
  double timestamp = 0.0;
  NormalMap normal;
  Image<Vec3> rgb;          // empty unless keep_rgb
  TransformSE3 gt_pose;     // relative to the first frame's sensor pose
  bool in_contact = true;
};

struct SynthesisOptions {
  bool use_photometric = false;         // run normals through the net
  const CalibrationNet* net = nullptr;  // required when use_photometric
  bool keep_rgb = false;
  RenderOptions render;
};

/// Streams one frame at a time to the sink; ground-truth poses are
/// normalized so the first frame is identity.
void synthesize_sequence(const SyntheticObject& obj, const ScanTrajectory& traj,
                         const SensorSpec& spec, const PhotometricModel& photo,
                         const SynthesisOptions& opts,
                         const std::function<void(const SequenceFrame&)>& sink);

/// Convenience collector for short test sequences.
std::vector<SequenceFrame> synthesize_sequence_vec(
    const SyntheticObject& obj, const ScanTrajectory& traj, const SensorSpec& spec,
    const PhotometricModel& photo, const SynthesisOptions& opts);

}  // namespace gelslam
