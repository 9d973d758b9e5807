#include "gelslam/evaluation.hpp"

#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

namespace gelslam {

Vec3 euler_xyz(const Mat3& R) {
  // R = Rx(a) * Ry(b) * Rz(c)
  double b = std::asin(std::clamp(R(0, 2), -1.0, 1.0));
  double a, c;
  if (std::abs(R(0, 2)) < 1.0 - 1e-9) {
    a = std::atan2(-R(1, 2), R(2, 2));
    c = std::atan2(-R(0, 1), R(0, 0));
  } else {
    // gimbal lock: fold everything into a
    a = std::atan2(R(1, 0), R(1, 1));
    c = 0.0;
  }
  return {a, b, c};
}

MetricsReport trajectory_mae(const std::vector<TrajectoryEntry>& estimate,
                             const std::vector<TrajectoryEntry>& ground_truth) {
  std::map<int, TransformSE3> gt;
  for (const auto& e : ground_truth) gt[e.frame_id] = e.pose;

  std::vector<std::pair<TransformSE3, TransformSE3>> pairs;  // est, gt
  for (const auto& e : estimate) {
    auto it = gt.find(e.frame_id);
    if (it != gt.end()) pairs.push_back({e.pose, it->second});
  }
  if (pairs.empty()) throw FrameMismatch();

  // express both relative to the first common frame
  TransformSE3 e0 = pairs.front().first.inverse();
  TransformSE3 g0 = pairs.front().second.inverse();

  MetricsReport r;
  r.frames = int(pairs.size());
  for (const auto& [est_raw, gt_raw] : pairs) {
    TransformSE3 est = e0 * est_raw;
    TransformSE3 ref = g0 * gt_raw;
    Vec3 euler = euler_xyz(ref.rotation.transpose() * est.rotation);
    r.rot_mae_deg += euler.cwiseAbs() * (180.0 / M_PI);
    r.trans_mae_mm += (est.translation - ref.translation).cwiseAbs();
  }
  r.rot_mae_deg /= double(pairs.size());
  r.trans_mae_mm /= double(pairs.size());
  return r;
}

std::string MetricsReport::text_table() const {
  std::ostringstream os;
  os.precision(4);
  os << std::fixed;
  os << "metric                     x        y        z\n";
  os << "rotation MAE (deg)  " << std::setw(8) << rot_mae_deg.x() << ' '
     << std::setw(8) << rot_mae_deg.y() << ' ' << std::setw(8) << rot_mae_deg.z()
     << '\n';
  os << "translation MAE (mm)" << std::setw(8) << trans_mae_mm.x() << ' '
     << std::setw(8) << trans_mae_mm.y() << ' ' << std::setw(8)
     << trans_mae_mm.z() << '\n';
  os << '\n';
  if (cd_mm >= 0) os << "chamfer distance (mm): " << cd_mm << '\n';
  if (ncd >= 0) os << "normal cosine distance: " << ncd << '\n';
  os << "frames: " << frames << "  keyframes: " << keyframes
     << "  coverage: " << coverage_keyframes << "  sessions: " << sessions << '\n';
  os << "loops: " << loops_accepted << " accepted / " << loop_candidates
     << " candidates";
  if (loops_false >= 0) os << ", " << loops_false << " false";
  os << "; skipped keyframes: " << skipped_keyframes << '\n';
  os << "wall time (s): tracking " << tracking_seconds << ", loops "
     << loop_seconds << ", solve " << solve_seconds << ", reconstruct "
     << reconstruct_seconds << '\n';
  return os.str();
}

std::string MetricsReport::serialized() const {
  std::ostringstream os;
  os.precision(17);
  os << "frames = " << frames << '\n';
  os << "rot_mae_deg_x = " << rot_mae_deg.x() << '\n';
  os << "rot_mae_deg_y = " << rot_mae_deg.y() << '\n';
  os << "rot_mae_deg_z = " << rot_mae_deg.z() << '\n';
  os << "trans_mae_mm_x = " << trans_mae_mm.x() << '\n';
  os << "trans_mae_mm_y = " << trans_mae_mm.y() << '\n';
  os << "trans_mae_mm_z = " << trans_mae_mm.z() << '\n';
  os << "cd_mm = " << cd_mm << '\n';
  os << "ncd = " << ncd << '\n';
  os << "loop_candidates = " << loop_candidates << '\n';
  os << "loops_accepted = " << loops_accepted << '\n';
  os << "loops_false = " << loops_false << '\n';
  os << "keyframes = " << keyframes << '\n';
  os << "coverage_keyframes = " << coverage_keyframes << '\n';
  os << "skipped_keyframes = " << skipped_keyframes << '\n';
  os << "sessions = " << sessions << '\n';
  os << "tracking_seconds = " << tracking_seconds << '\n';
  os << "loop_seconds = " << loop_seconds << '\n';
  os << "solve_seconds = " << solve_seconds << '\n';
  os << "reconstruct_seconds = " << reconstruct_seconds << '\n';
  return os.str();
}

}  // namespace gelslam
