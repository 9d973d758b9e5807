#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "gelslam/gts_io.hpp"

namespace gelslam {

struct FrameMismatch : std::runtime_error {
  FrameMismatch() : std::runtime_error("trajectories cover different frame ids") {}
};

/// Intrinsic x-y-z Euler decomposition, radians; small-angle safe.
Vec3 euler_xyz(const Mat3& R);

struct MetricsReport {
  int frames = 0;
  Vec3 rot_mae_deg = Vec3::Zero();
  Vec3 trans_mae_mm = Vec3::Zero();
  double cd_mm = -1.0;  // negative = not evaluated
  double ncd = -1.0;

  int loop_candidates = 0;
  int loops_accepted = 0;
  int loops_false = 0;
  int keyframes = 0;
  int coverage_keyframes = 0;
  int skipped_keyframes = 0;
  int sessions = 0;

  double tracking_seconds = 0.0;
  double loop_seconds = 0.0;
  double solve_seconds = 0.0;
  double reconstruct_seconds = 0.0;

  std::string text_table() const;
  /// key=value lines, machine readable.
  std::string serialized() const;
};

/// Per-axis mean absolute pose error against ground truth. Both inputs are
/// matched by frame id; both are renormalized so their first common frame is
/// the identity.
MetricsReport trajectory_mae(const std::vector<TrajectoryEntry>& estimate,
                             const std::vector<TrajectoryEntry>& ground_truth);

}  // namespace gelslam
