#include "gelslam/loop_closure.hpp"

#include <opencv2/core.hpp>
#include <opencv2/features2d.hpp>

#include <algorithm>
#include <cmath>
#include <random>

namespace gelslam {

namespace {

long long pack_cell(int x, int y, int z) {
  // 21 bits per axis, offset to keep coordinates positive
  const long long B = 1 << 20;
  return ((x + B) << 42) | ((y + B) << 21) | (z + B);
}

}  // namespace

std::set<long long> footprint_cells(const Frame& frame, const TransformSE3& pose,
                                    double pitch_mm, double cell_size_mm) {
  std::set<long long> cells;
  for (int v = 0; v < frame.mask.height(); ++v) {
    for (int u = 0; u < frame.mask.width(); ++u) {
      if (!frame.mask.at(u, v)) continue;
      Vec3 p = pose.apply(Vec3(u * pitch_mm, v * pitch_mm,
                               frame.height.at(u, v) * pitch_mm));
      cells.insert(pack_cell(int(std::floor(p.x() / cell_size_mm)),
                             int(std::floor(p.y() / cell_size_mm)),
                             int(std::floor(p.z() / cell_size_mm))));
    }
  }
  return cells;
}

bool CoverageSet::update(int id, std::shared_ptr<const Frame> frame,
                         const TransformSE3& pose) {
  auto fp = footprint_cells(*frame, pose, pitch_, params_.cell_size_mm);
  double cell_area = params_.cell_size_mm * params_.cell_size_mm;
  int fresh = 0;
  for (long long c : fp) {
    bool covered = false;
    for (const auto& [mid, mc] : cells_)
      if (mc.count(c)) {
        covered = true;
        break;
      }
    if (!covered) ++fresh;
  }
  if (fresh * cell_area <= params_.area_min_mm2) return false;

  members_.push_back(id);
  cells_[id] = std::move(fp);
  frames_[id] = std::move(frame);
  poses_[id] = pose;
  prune();
  return true;
}

double CoverageSet::unique_area(int id) const {
  const auto& own = cells_.at(id);
  int unique = 0;
  for (long long c : own) {
    bool elsewhere = false;
    for (const auto& [mid, mc] : cells_) {
      if (mid == id) continue;
      if (mc.count(c)) {
        elsewhere = true;
        break;
      }
    }
    if (!elsewhere) ++unique;
  }
  return unique * params_.cell_size_mm * params_.cell_size_mm;
}

void CoverageSet::prune() {
  // oldest first, so a superseded early keyframe yields to newer coverage
  bool removed = true;
  while (removed) {
    removed = false;
    for (size_t i = 0; i < members_.size(); ++i) {
      int id = members_[i];
      if (unique_area(id) <= params_.area_min_mm2 && members_.size() > 1) {
        members_.erase(members_.begin() + i);
        cells_.erase(id);
        frames_.erase(id);
        poses_.erase(id);
        removed = true;
        break;
      }
    }
  }
}

void CoverageSet::reproject(const std::map<int, TransformSE3>& poses) {
  for (int id : members_) {
    auto it = poses.find(id);
    if (it == poses.end()) continue;
    poses_[id] = it->second;
    cells_[id] = footprint_cells(*frames_[id], it->second, pitch_,
                                 params_.cell_size_mm);
  }
}

double CoverageSet::footprint_area_mm2(int id) const {
  return cells_.at(id).size() * params_.cell_size_mm * params_.cell_size_mm;
}

double CoverageSet::union_area_mm2() const {
  std::set<long long> all;
  for (const auto& [id, c] : cells_) all.insert(c.begin(), c.end());
  return all.size() * params_.cell_size_mm * params_.cell_size_mm;
}

// --- keypoints --------------------------------------------------------------

std::vector<Keypoint> extract_keypoints(const CurvatureMap& curv,
                                        const ContactMask& mask,
                                        const SiftParams& params) {
  int W = curv.width(), H = curv.height();
  double lo = 1e300, hi = -1e300;
  for (int v = 0; v < H; ++v)
    for (int u = 0; u < W; ++u)
      if (mask.at(u, v)) {
        lo = std::min(lo, curv.at(u, v));
        hi = std::max(hi, curv.at(u, v));
      }
  if (hi - lo < 1e-12) return {};

  cv::Mat img(H, W, CV_8U, cv::Scalar(0));
  for (int v = 0; v < H; ++v)
    for (int u = 0; u < W; ++u) {
      double t = (curv.at(u, v) - lo) / (hi - lo);
      img.at<uint8_t>(v, u) = uint8_t(std::clamp(t, 0.0, 1.0) * 255.0 + 0.5);
    }

  auto sift = cv::SIFT::create(0, params.scales_per_octave,
                               params.contrast_thresh, 10.0, 1.6);
  std::vector<cv::KeyPoint> kps;
  cv::Mat desc;
  sift->detectAndCompute(img, cv::noArray(), kps, desc);

  std::vector<Keypoint> out;
  for (size_t i = 0; i < kps.size(); ++i) {
    int u = int(std::lround(kps[i].pt.x)), v = int(std::lround(kps[i].pt.y));
    if (!mask.inside(u, v) || !mask.at(u, v)) continue;
    Keypoint k;
    k.position = Vec2(kps[i].pt.x, kps[i].pt.y);
    k.scale = kps[i].size;
    k.orientation = kps[i].angle * M_PI / 180.0;
    for (int d = 0; d < 128; ++d) k.descriptor(d) = desc.at<float>(int(i), d);
    float n = k.descriptor.norm();
    if (n > 0) k.descriptor /= n;
    out.push_back(k);
  }
  return out;
}

// --- matching ---------------------------------------------------------------

namespace {

struct Match {
  Vec2 src, dst;
};

// Rigid2D from a two-point correspondence.
std::optional<Rigid2D> fit_pair(const Match& a, const Match& b) {
  Vec2 ds = b.src - a.src, dd = b.dst - a.dst;
  if (ds.norm() < 1e-6 || dd.norm() < 1e-6) return std::nullopt;
  double angle = std::atan2(dd.y(), dd.x()) - std::atan2(ds.y(), ds.x());
  Rigid2D T{angle, Vec2::Zero()};
  T.translation = 0.5 * ((a.dst - T.apply(a.src)) + (b.dst - T.apply(b.src)));
  return T;
}

}  // namespace

std::optional<LoopCandidate> match_and_verify(const std::vector<Keypoint>& new_kps,
                                              const std::vector<Keypoint>& cov_kps,
                                              const MatchParams& params) {
  if (new_kps.size() < 2 || cov_kps.size() < 2) return std::nullopt;

  // Ratio-test nearest neighbor matching. Descriptors are unit length, so
  // squared distance is 2 - 2*dot; one matrix product gives all pairs.
  Eigen::MatrixXf A(128, new_kps.size()), B(128, cov_kps.size());
  for (size_t i = 0; i < new_kps.size(); ++i) A.col(i) = new_kps[i].descriptor;
  for (size_t j = 0; j < cov_kps.size(); ++j) B.col(j) = cov_kps[j].descriptor;
  Eigen::MatrixXf dots = B.transpose() * A;  // cov x new

  std::vector<Match> matches;
  for (size_t i = 0; i < new_kps.size(); ++i) {
    float best = -1e30f, second = -1e30f;
    int hit = -1;
    for (int j = 0; j < dots.rows(); ++j) {
      float d = dots(j, int(i));
      if (d > best) {
        second = best;
        best = d;
        hit = j;
      } else if (d > second) {
        second = d;
      }
    }
    double d_best = std::max(0.0, 2.0 - 2.0 * double(best));
    double d_second = std::max(0.0, 2.0 - 2.0 * double(second));
    if (hit >= 0 && d_best < params.lowe_ratio * params.lowe_ratio * d_second)
      matches.push_back({new_kps[i].position, cov_kps[hit].position});
  }
  if (int(matches.size()) <= params.inlier_min) return std::nullopt;

  std::mt19937 rng(params.seed);
  std::uniform_int_distribution<size_t> pick(0, matches.size() - 1);
  double r2 = params.ransac_inlier_px * params.ransac_inlier_px;

  Eigen::Matrix2Xd srcs(2, matches.size()), dsts(2, matches.size());
  for (size_t k = 0; k < matches.size(); ++k) {
    srcs.col(k) = matches[k].src;
    dsts.col(k) = matches[k].dst;
  }

  int best_count = 0;
  Rigid2D best_T;
  for (int it = 0; it < params.ransac_iterations; ++it) {
    size_t i = pick(rng), j = pick(rng);
    if (i == j) continue;
    auto T = fit_pair(matches[i], matches[j]);
    if (!T) continue;
    double c = std::cos(T->angle), s = std::sin(T->angle);
    Eigen::Matrix2d R;
    R << c, -s, s, c;
    int count = int(((dsts - ((R * srcs).colwise() + T->translation))
                         .colwise()
                         .squaredNorm()
                         .array() <= r2)
                        .count());
    if (count > best_count) {
      best_count = count;
      best_T = *T;
    }
  }
  if (best_count <= params.inlier_min) return std::nullopt;

  // refit on the consensus set
  std::vector<Vec2> src, dst;
  for (const auto& m : matches)
    if ((m.dst - best_T.apply(m.src)).squaredNorm() <= r2) {
      src.push_back(m.src);
      dst.push_back(m.dst);
    }
  Rigid2D refined = rigid2d_fit(src, dst);
  int count = 0;
  for (const auto& m : matches)
    if ((m.dst - refined.apply(m.src)).squaredNorm() <= r2) ++count;
  if (count <= params.inlier_min) return std::nullopt;

  LoopCandidate c;
  c.inliers = count;
  c.initial = refined;
  return c;
}

std::optional<LoopConstraint> refine_loop(const Frame& new_frame,
                                          const Frame& cov_frame,
                                          const LoopCandidate& candidate,
                                          double pitch_mm,
                                          const FailureThresholds& thresholds,
                                          const NormalFlowParams& nf_params) {
  // lift the planar estimate: in-plane rotation about z, translation scaled
  // to mm, zero tilt and height offset
  TransformSE3 init;
  init.rotation = so3_exp(Vec3(0, 0, candidate.initial.angle));
  init.translation = Vec3(candidate.initial.translation.x() * pitch_mm,
                          candidate.initial.translation.y() * pitch_mm, 0.0);

  NormalFlowResult nf = normalflow(new_frame, cov_frame, init, pitch_mm, nf_params);
  if (!nf.passes(thresholds)) return std::nullopt;

  LoopConstraint lc;
  lc.from_frame_id = candidate.new_id;
  lc.to_frame_id = candidate.coverage_id;
  lc.transform = nf.transform;
  lc.ccs = nf.ccs;
  lc.scr = nf.scr;
  return lc;
}

// --- detector ---------------------------------------------------------------

const std::vector<Keypoint>& LoopDetector::keypoints_for(int id, const Frame& frame) {
  auto it = keypoint_cache_.find(id);
  if (it == keypoint_cache_.end())
    it = keypoint_cache_
             .emplace(id, extract_keypoints(frame.curvature, frame.mask, sift_params_))
             .first;
  return it->second;
}

std::vector<LoopConstraint> LoopDetector::process_keyframe(
    int id, std::shared_ptr<const Frame> frame, const TransformSE3& pose) {
  std::vector<LoopConstraint> accepted;

  const auto& new_kps = keypoints_for(id, *frame);
  std::vector<LoopCandidate> candidates;
  for (int mid : coverage_.members()) {
    if (mid == id) continue;
    const auto& cov_kps = keypoints_for(mid, *coverage_.frame(mid));
    auto cand = match_and_verify(new_kps, cov_kps, match_params_);
    if (cand) {
      cand->new_id = id;
      cand->coverage_id = mid;
      candidates.push_back(*cand);
    }
  }
  stats_.candidates += int(candidates.size());
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const LoopCandidate& a, const LoopCandidate& b) {
                     return a.inliers > b.inliers;
                   });
  for (const auto& cand : candidates) {
    auto lc = refine_loop(*frame, *coverage_.frame(cand.coverage_id), cand,
                          pitch_, thresholds_, nf_params_);
    if (lc) accepted.push_back(*lc);
  }
  stats_.accepted += int(accepted.size());

  coverage_.update(id, std::move(frame), pose);
  // drop cached keypoints for pruned members
  for (auto it = keypoint_cache_.begin(); it != keypoint_cache_.end();) {
    if (!coverage_.contains(it->first))
      it = keypoint_cache_.erase(it);
    else
      ++it;
  }
  return accepted;
}

}  // namespace gelslam
