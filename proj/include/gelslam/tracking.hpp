#pragma once

#include <deque>
#include <memory>
#include <optional>
#include <vector>

#include "gelslam/geometry.hpp"
#include "gelslam/surface_maps.hpp"

namespace gelslam {

struct NormalFlowParams {
  int pixel_budget = 3000;      // K highest-curvature pixels
  int max_iterations = 50;
  double convergence_tol = 1e-6;
  int min_shared_pixels = 200;  // below this the system is under-constrained
  // Pixels within this distance of the contact edge are excluded from the
  // fit: the gel membrane near the rim does not move rigidly with the
  // object, which otherwise biases the estimate in proportion to the motion.
  // Ignored when too few interior pixels remain.
  double boundary_margin_mm = 0.75;
};

/// Quality gates for accepting a NormalFlow estimate.
struct FailureThresholds {
  double ccs_min = 0.85;
  double scr_min = 0.3;

  static FailureThresholds tracking_profile() { return {0.85, 0.3}; }
  static FailureThresholds reconstruction_profile() { return {0.7, 0.3}; }
};

struct NormalFlowResult {
  TransformSE3 transform;  // reference -> target, translation in mm
  double ccs = 0.0;
  double scr = 0.0;
  int iterations = 0;
  bool converged = false;
  ContactMask shared_mask;  // shared contact region in reference pixels

  bool passes(const FailureThresholds& t) const {
    return converged && ccs >= t.ccs_min && scr >= t.scr_min;
  }
};

/// Gauss-Newton alignment of two normal maps. The estimate maps reference-
/// frame points into the target frame; init is in mm.
NormalFlowResult normalflow(const Frame& ref, const Frame& tgt,
                            const TransformSE3& init, double pitch_mm,
                            const NormalFlowParams& params = {});

/// Cosine similarity of the warped target curvature against the reference
/// curvature over the shared contact region.
double compute_ccs(const Frame& ref, const Frame& tgt, const TransformSE3& T,
                   double pitch_mm);

/// Curvature-weighted fraction of the reference contact covered by the
/// target under T (rectified curvature weights).
double compute_scr(const Frame& ref, const Frame& tgt, const TransformSE3& T,
                   double pitch_mm);

// --- tracker ---------------------------------------------------------------

struct Keyframe {
  int frame_id = 0;
  int session = 0;
  std::shared_ptr<const Frame> frame;
  TransformSE3 session_pose;  // sensor pose w.r.t. the session's first keyframe
};

/// Relative pose constraint between two keyframes: maps points expressed in
/// keyframe `from` into keyframe `to` coordinates.
struct KeyframeConstraint {
  int from_frame_id = 0;
  int to_frame_id = 0;
  TransformSE3 estimate;
};

struct FrameRecord {
  int frame_id = 0;
  int keyframe_id = 0;
  TransformSE3 rel;  // ^{frame}T̂_{keyframe}
};

enum class TrackEventKind { Tracked, NewKeyframe, TrackingLost, NoContact };

struct TrackOutcome {
  TrackEventKind event = TrackEventKind::NoContact;
  std::vector<int> new_keyframe_ids;  // frame ids promoted this step, in order
  NormalFlowResult registration;
};

class Tracker {
 public:
  Tracker(double pitch_mm, const NormalFlowParams& nf_params,
          const FailureThresholds& thresholds)
      : pitch_(pitch_mm), nf_params_(nf_params), thresholds_(thresholds) {}

  TrackOutcome track(std::shared_ptr<const Frame> frame);

  const std::vector<Keyframe>& keyframes() const { return keyframes_; }
  const std::vector<KeyframeConstraint>& constraints() const { return constraints_; }
  const std::vector<FrameRecord>& frame_records() const { return records_; }
  int session_count() const { return session_count_; }
  int lost_count() const { return lost_count_; }
  const Keyframe* keyframe_by_frame_id(int frame_id) const;

 private:
  int start_session(std::shared_ptr<const Frame> frame);
  int promote_keyframe(std::shared_ptr<const Frame> frame, const TransformSE3& rel,
                       int prev_keyframe_id);
  bool has_contact(const Frame& f) const;

  double pitch_;
  NormalFlowParams nf_params_;
  FailureThresholds thresholds_;

  std::vector<Keyframe> keyframes_;
  std::vector<KeyframeConstraint> constraints_;
  std::vector<FrameRecord> records_;

  std::shared_ptr<const Frame> prev_frame_;
  TransformSE3 prev_rel_;  // ^{prev}T̂_{latest kf}
  int latest_kf_index_ = -1;
  int session_count_ = 0;
  int lost_count_ = 0;
  bool tracking_ = false;
};

}  // namespace gelslam
