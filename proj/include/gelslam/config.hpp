#pragma once

#include <string>
#include <vector>

#include "gelslam/calibration.hpp"
#include "gelslam/loop_closure.hpp"
#include "gelslam/pose_graph.hpp"
#include "gelslam/reconstruction.hpp"
#include "gelslam/sim.hpp"
#include "gelslam/surface_maps.hpp"
#include "gelslam/tracking.hpp"

namespace gelslam {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Every named constant of the system, serializable as a key=value file.
/// Precedence is handled by the CLI: flag > config file > default.
struct PipelineConfig {
  // sensor
  int sensor_width = 320;
  int sensor_height = 240;
  double pitch_mm = 0.0625;
  double frame_rate_hz = 25.0;
  double max_indentation_mm = 2.0;

  // surface maps
  double curvature_blur_sigma = 1.5;
  double height_thresh_px = 0.4;

  // normalflow
  int pixel_budget = 3000;
  int nf_max_iterations = 50;
  double nf_convergence_tol = 1e-6;
  int min_shared_pixels = 200;

  // failure thresholds; profile picks the defaults, explicit keys override
  std::string profile = "tracking";  // tracking | reconstruction
  double ccs_min = -1.0;             // < 0 = use profile default
  double scr_min = -1.0;

  // loop closure
  double area_min_mm2 = 0.2;
  double cell_size_mm = 0.25;
  double lowe_ratio = 0.75;
  double ransac_inlier_px = 3.0;
  int ransac_iterations = 500;
  int inlier_min = 8;
  unsigned ransac_seed = 7;
  int sift_scales_per_octave = 3;
  double sift_contrast_thresh = 0.01;

  // pose graph
  std::string solver = "lm";  // lm | gnc
  double rot_std_deg = 0.5;
  double trans_std_mm = 0.05;
  double lm_damping_init = 1e-4;
  double lm_rel_decrease_tol = 1e-9;
  int lm_max_iterations = 100;
  double gnc_mu_divisor = 1.4;
  double gnc_inlier_cost_sq = 6.0;
  double gnc_reject_weight = 0.5;

  // reconstruction
  double fusion_d0_px = 6.0;
  double fusion_s_px = 2.0;
  double fusion_max_edge_factor = 3.0;
  double remesh_voxel_mm = 0.2;
  int remesh_knn = 12;

  // simulator
  double gel_blur_sigma_px = 1.0;
  double normal_noise_deg = 0.5;

  // calibration training
  double calib_learning_rate = 1e-2;
  double calib_momentum = 0.9;
  int calib_epochs = 200;
  int calib_batch_size = 1024;

  // evaluation
  int cd_samples = 100000;
  int ncd_contacts = 100;

  // run control
  std::string mode = "offline";  // offline | online
  uint64_t seed = 0;
  int loop_delay_ms = 0;  // test hook: artificial loop-stage slowdown

  // --- derived views --------------------------------------------------------
  SensorSpec sensor() const;
  SurfaceMapParams surface_params() const;
  NormalFlowParams nf_params() const;
  FailureThresholds thresholds() const;
  CoverageParams coverage_params() const;
  MatchParams match_params() const;
  SiftParams sift_params() const;
  LmParams lm_params() const;
  GncParams gnc_params() const;
  Mat6 graph_covariance() const;
  FusionParams fusion_params() const;
  RemeshParams remesh_params() const;
  TrainParams train_params() const;

  void set(const std::string& key, const std::string& value);
  void validate() const;

  static PipelineConfig load(const std::string& path);
  void save(const std::string& path) const;
};

}  // namespace gelslam
