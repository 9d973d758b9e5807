#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gelslam/surface_maps.hpp"
#include "gelslam/tracking.hpp"

namespace gelslam {

struct CoverageParams {
  double area_min_mm2 = 0.2;  // greedy add / prune threshold
  double cell_size_mm = 0.25;
};

/// Occupied surface cells of a keyframe's contact patch in the global frame.
/// Cells are cubic voxels of cell_size_mm; the key packs the integer cell
/// coordinates.
std::set<long long> footprint_cells(const Frame& frame, const TransformSE3& pose,
                                    double pitch_mm, double cell_size_mm);

/// Greedy minimal subset of keyframes whose footprints span the scanned
/// surface; the only targets considered for loop detection.
class CoverageSet {
 public:
  CoverageSet(double pitch_mm, const CoverageParams& params = {})
      : pitch_(pitch_mm), params_(params) {}

  /// Adds kf if its footprint contributes > area_min beyond the current
  /// members, then prunes members that no longer do. Returns true if added.
  bool update(int id, std::shared_ptr<const Frame> frame, const TransformSE3& pose);

  /// Recomputes all footprints with updated poses (after a graph solve).
  void reproject(const std::map<int, TransformSE3>& poses);

  const std::vector<int>& members() const { return members_; }
  bool contains(int id) const { return cells_.count(id) > 0; }
  std::shared_ptr<const Frame> frame(int id) const { return frames_.at(id); }
  const TransformSE3& pose(int id) const { return poses_.at(id); }

  double footprint_area_mm2(int id) const;
  double union_area_mm2() const;

  const CoverageParams& params() const { return params_; }

 private:
  double unique_area(int id) const;
  void prune();

  double pitch_;
  CoverageParams params_;
  std::vector<int> members_;  // insertion order
  std::map<int, std::set<long long>> cells_;
  std::map<int, std::shared_ptr<const Frame>> frames_;
  std::map<int, TransformSE3> poses_;
};

// --- two-stage loop detection ----------------------------------------------

struct Keypoint {
  Vec2 position;     // px
  double scale = 0;  // px
  double orientation = 0;  // radians
  Eigen::Matrix<float, 128, 1> descriptor;  // unit length
};

struct SiftParams {
  int scales_per_octave = 3;
  double contrast_thresh = 0.01;
};

/// SIFT on the curvature map, normalized per-frame to 8-bit over the contact
/// mask; keypoints outside the mask are discarded.
std::vector<Keypoint> extract_keypoints(const CurvatureMap& curv,
                                        const ContactMask& mask,
                                        const SiftParams& params = {});

struct LoopCandidate {
  int new_id = 0;
  int coverage_id = 0;
  int inliers = 0;
  Rigid2D initial;  // maps new-keyframe pixels into coverage-keyframe pixels
};

struct MatchParams {
  double lowe_ratio = 0.75;
  double ransac_inlier_px = 3.0;
  int ransac_iterations = 500;
  int inlier_min = 8;  // accept iff strictly more
  unsigned seed = 7;
};

/// Ratio-test descriptor matching plus seeded RANSAC over a planar rigid
/// transform. Returns a candidate iff inliers > inlier_min.
std::optional<LoopCandidate> match_and_verify(
    const std::vector<Keypoint>& new_kps, const std::vector<Keypoint>& cov_kps,
    const MatchParams& params = {});

struct LoopConstraint {
  int from_frame_id = 0;  // the new keyframe
  int to_frame_id = 0;    // the coverage keyframe
  TransformSE3 transform;  // ^{to}T_{from}
  double ccs = 0.0;
  double scr = 0.0;
};

/// NormalFlow refinement of a candidate, initialized from its planar
/// transform (in-plane rotation, pitch-scaled translation, zero tilt).
std::optional<LoopConstraint> refine_loop(const Frame& new_frame,
                                          const Frame& cov_frame,
                                          const LoopCandidate& candidate,
                                          double pitch_mm,
                                          const FailureThresholds& thresholds,
                                          const NormalFlowParams& nf_params = {});

class LoopDetector {
 public:
  LoopDetector(double pitch_mm, const FailureThresholds& thresholds,
               const CoverageParams& cov_params = {},
               const MatchParams& match_params = {},
               const NormalFlowParams& nf_params = {})
      : pitch_(pitch_mm),
        thresholds_(thresholds),
        match_params_(match_params),
        nf_params_(nf_params),
        coverage_(pitch_mm, cov_params) {}

  /// Matches the keyframe against every coverage member (candidates refined
  /// in descending stage-1 inlier order), then updates the coverage set.
  std::vector<LoopConstraint> process_keyframe(int id,
                                               std::shared_ptr<const Frame> frame,
                                               const TransformSE3& pose);

  CoverageSet& coverage() { return coverage_; }
  const CoverageSet& coverage() const { return coverage_; }

  struct Stats {
    int candidates = 0;  // stage-1 survivors
    int accepted = 0;
  };
  const Stats& stats() const { return stats_; }

 private:
  const std::vector<Keypoint>& keypoints_for(int id, const Frame& frame);

  double pitch_;
  FailureThresholds thresholds_;
  MatchParams match_params_;
  NormalFlowParams nf_params_;
  SiftParams sift_params_;
  CoverageSet coverage_;
  std::map<int, std::vector<Keypoint>> keypoint_cache_;
  Stats stats_;
};

}  // namespace gelslam
