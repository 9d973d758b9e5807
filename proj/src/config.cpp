#include "gelslam/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace gelslam {

SensorSpec PipelineConfig::sensor() const {
  return {sensor_width, sensor_height, pitch_mm, max_indentation_mm, frame_rate_hz};
}

SurfaceMapParams PipelineConfig::surface_params() const {
  SurfaceMapParams p;
  p.curvature_blur_sigma = curvature_blur_sigma;
  p.height_thresh_px = height_thresh_px;
  return p;
}

NormalFlowParams PipelineConfig::nf_params() const {
  return {pixel_budget, nf_max_iterations, nf_convergence_tol, min_shared_pixels};
}

FailureThresholds PipelineConfig::thresholds() const {
  FailureThresholds t = profile == "reconstruction"
                            ? FailureThresholds::reconstruction_profile()
                            : FailureThresholds::tracking_profile();
  if (ccs_min >= 0) t.ccs_min = ccs_min;
  if (scr_min >= 0) t.scr_min = scr_min;
  return t;
}

CoverageParams PipelineConfig::coverage_params() const {
  return {area_min_mm2, cell_size_mm};
}

MatchParams PipelineConfig::match_params() const {
  return {lowe_ratio, ransac_inlier_px, ransac_iterations, inlier_min, ransac_seed};
}

SiftParams PipelineConfig::sift_params() const {
  return {sift_scales_per_octave, sift_contrast_thresh};
}

LmParams PipelineConfig::lm_params() const {
  LmParams p;
  p.damping_init = lm_damping_init;
  p.rel_decrease_tol = lm_rel_decrease_tol;
  p.max_iterations = lm_max_iterations;
  return p;
}

GncParams PipelineConfig::gnc_params() const {
  GncParams p;
  p.lm = lm_params();
  p.mu_divisor = gnc_mu_divisor;
  p.inlier_cost_sq = gnc_inlier_cost_sq;
  p.reject_weight = gnc_reject_weight;
  return p;
}

Mat6 PipelineConfig::graph_covariance() const {
  Mat6 sigma = Mat6::Zero();
  double r = rot_std_deg * M_PI / 180.0;
  for (int i = 0; i < 3; ++i) {
    sigma(i, i) = r * r;
    sigma(i + 3, i + 3) = trans_std_mm * trans_std_mm;
  }
  return sigma;
}

FusionParams PipelineConfig::fusion_params() const {
  return {fusion_d0_px, fusion_s_px, fusion_max_edge_factor};
}

RemeshParams PipelineConfig::remesh_params() const {
  return {remesh_voxel_mm, remesh_knn};
}

TrainParams PipelineConfig::train_params() const {
  TrainParams p;
  p.epochs = calib_epochs;
  p.batch_size = calib_batch_size;
  p.learning_rate = calib_learning_rate;
  p.momentum = calib_momentum;
  p.seed = seed == 0 ? 7 : seed;
  return p;
}

namespace {

struct Entry {
  const char* key;
  std::function<std::string(const PipelineConfig&)> get;
  std::function<void(PipelineConfig&, const std::string&)> set;
};

template <typename T>
Entry make_entry(const char* key, T PipelineConfig::*member) {
  return {key,
          [member](const PipelineConfig& c) {
            std::ostringstream os;
            os.precision(17);
            os << c.*member;
            return os.str();
          },
          [member, key](PipelineConfig& c, const std::string& v) {
            std::istringstream is(v);
            is >> c.*member;
            if (is.fail()) throw ConfigError(std::string("bad value for ") + key);
          }};
}

Entry make_entry(const char* key, std::string PipelineConfig::*member) {
  return {key, [member](const PipelineConfig& c) { return c.*member; },
          [member](PipelineConfig& c, const std::string& v) { c.*member = v; }};
}

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = {
      make_entry("sensor_width", &PipelineConfig::sensor_width),
      make_entry("sensor_height", &PipelineConfig::sensor_height),
      make_entry("pitch_mm", &PipelineConfig::pitch_mm),
      make_entry("frame_rate_hz", &PipelineConfig::frame_rate_hz),
      make_entry("max_indentation_mm", &PipelineConfig::max_indentation_mm),
      make_entry("curvature_blur_sigma", &PipelineConfig::curvature_blur_sigma),
      make_entry("height_thresh_px", &PipelineConfig::height_thresh_px),
      make_entry("pixel_budget", &PipelineConfig::pixel_budget),
      make_entry("nf_max_iterations", &PipelineConfig::nf_max_iterations),
      make_entry("nf_convergence_tol", &PipelineConfig::nf_convergence_tol),
      make_entry("min_shared_pixels", &PipelineConfig::min_shared_pixels),
      make_entry("profile", &PipelineConfig::profile),
      make_entry("ccs_min", &PipelineConfig::ccs_min),
      make_entry("scr_min", &PipelineConfig::scr_min),
      make_entry("area_min_mm2", &PipelineConfig::area_min_mm2),
      make_entry("cell_size_mm", &PipelineConfig::cell_size_mm),
      make_entry("lowe_ratio", &PipelineConfig::lowe_ratio),
      make_entry("ransac_inlier_px", &PipelineConfig::ransac_inlier_px),
      make_entry("ransac_iterations", &PipelineConfig::ransac_iterations),
      make_entry("inlier_min", &PipelineConfig::inlier_min),
      make_entry("ransac_seed", &PipelineConfig::ransac_seed),
      make_entry("sift_scales_per_octave", &PipelineConfig::sift_scales_per_octave),
      make_entry("sift_contrast_thresh", &PipelineConfig::sift_contrast_thresh),
      make_entry("solver", &PipelineConfig::solver),
      make_entry("rot_std_deg", &PipelineConfig::rot_std_deg),
      make_entry("trans_std_mm", &PipelineConfig::trans_std_mm),
      make_entry("lm_damping_init", &PipelineConfig::lm_damping_init),
      make_entry("lm_rel_decrease_tol", &PipelineConfig::lm_rel_decrease_tol),
      make_entry("lm_max_iterations", &PipelineConfig::lm_max_iterations),
      make_entry("gnc_mu_divisor", &PipelineConfig::gnc_mu_divisor),
      make_entry("gnc_inlier_cost_sq", &PipelineConfig::gnc_inlier_cost_sq),
      make_entry("gnc_reject_weight", &PipelineConfig::gnc_reject_weight),
      make_entry("fusion_d0_px", &PipelineConfig::fusion_d0_px),
      make_entry("fusion_s_px", &PipelineConfig::fusion_s_px),
      make_entry("fusion_max_edge_factor", &PipelineConfig::fusion_max_edge_factor),
      make_entry("remesh_voxel_mm", &PipelineConfig::remesh_voxel_mm),
      make_entry("remesh_knn", &PipelineConfig::remesh_knn),
      make_entry("gel_blur_sigma_px", &PipelineConfig::gel_blur_sigma_px),
      make_entry("normal_noise_deg", &PipelineConfig::normal_noise_deg),
      make_entry("calib_learning_rate", &PipelineConfig::calib_learning_rate),
      make_entry("calib_momentum", &PipelineConfig::calib_momentum),
      make_entry("calib_epochs", &PipelineConfig::calib_epochs),
      make_entry("calib_batch_size", &PipelineConfig::calib_batch_size),
      make_entry("cd_samples", &PipelineConfig::cd_samples),
      make_entry("ncd_contacts", &PipelineConfig::ncd_contacts),
      make_entry("mode", &PipelineConfig::mode),
      make_entry("seed", &PipelineConfig::seed),
      make_entry("loop_delay_ms", &PipelineConfig::loop_delay_ms),
  };
  return entries;
}

}  // namespace

void PipelineConfig::set(const std::string& key, const std::string& value) {
  for (const auto& e : registry())
    if (key == e.key) {
      e.set(*this, value);
      return;
    }
  throw ConfigError("unknown config key: " + key);
}

void PipelineConfig::validate() const {
  auto check = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  check(sensor_width > 2 && sensor_height > 2, "sensor size must exceed 2x2");
  check(pitch_mm > 0, "pitch_mm must be positive");
  check(frame_rate_hz > 0, "frame_rate_hz must be positive");
  check(pixel_budget > 0, "pixel_budget must be positive");
  check(min_shared_pixels > 0, "min_shared_pixels must be positive");
  check(profile == "tracking" || profile == "reconstruction",
        "profile must be tracking or reconstruction");
  check(solver == "lm" || solver == "gnc", "solver must be lm or gnc");
  check(mode == "offline" || mode == "online", "mode must be offline or online");
  check(area_min_mm2 > 0 && cell_size_mm > 0, "coverage sizes must be positive");
  check(lowe_ratio > 0 && lowe_ratio < 1, "lowe_ratio must be in (0, 1)");
  check(remesh_voxel_mm > 0 && remesh_knn > 0, "remesh parameters must be positive");
  FailureThresholds t = thresholds();
  check(t.ccs_min >= 0 && t.ccs_min <= 1 && t.scr_min >= 0 && t.scr_min <= 1,
        "thresholds must be in [0, 1]");
}

PipelineConfig PipelineConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read " + path);
  PipelineConfig c;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    size_t h = line.find('#');
    if (h != std::string::npos) line = line.substr(0, h);
    size_t a = line.find_first_not_of(" \t");
    if (a == std::string::npos) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
    auto trim = [](std::string s) {
      size_t b = s.find_first_not_of(" \t");
      size_t e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return c;
}

void PipelineConfig::save(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write " + path);
  for (const auto& e : registry()) f << e.key << " = " << e.get(*this) << '\n';
}

}  // namespace gelslam
