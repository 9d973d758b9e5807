#include "gelslam/tracking.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace gelslam {

namespace {

struct SharedPixel {
  int u, v;
  double abs_curv;
};

// Reference-mask pixels whose warp lands inside the target contact mask
// (bilinear mask value > 0.5, at least 1 px from the border).
std::vector<SharedPixel> shared_pixels(const Frame& ref, const Frame& tgt,
                                       const Mat3& R, const Vec3& t_px) {
  std::vector<SharedPixel> out;
  int W = ref.mask.width(), H = ref.mask.height();
  for (int v = 0; v < H; ++v) {
    for (int u = 0; u < W; ++u) {
      if (!ref.mask.at(u, v)) continue;
      Vec3 q(u, v, ref.height.at(u, v));
      Vec3 p = R * q + t_px;
      double x = p.x(), y = p.y();
      if (x < 1.0 || y < 1.0 || x > W - 2.0 || y > H - 2.0) continue;
      double m = tgt.mask.at(int(x), int(y)) * 1.0;
      // bilinear on the mask
      int x0 = int(x), y0 = int(y);
      double fx = x - x0, fy = y - y0;
      m = (1 - fx) * (1 - fy) * tgt.mask.at(x0, y0) +
          fx * (1 - fy) * tgt.mask.at(x0 + 1, y0) +
          (1 - fx) * fy * tgt.mask.at(x0, y0 + 1) +
          fx * fy * tgt.mask.at(x0 + 1, y0 + 1);
      if (m > 0.5) out.push_back({u, v, std::abs(ref.curvature.at(u, v))});
    }
  }
  return out;
}

// Strip `iters` one-pixel rings off the mask (4-neighbourhood).
ContactMask eroded_mask(const ContactMask& m, int iters) {
  ContactMask cur = m;
  int W = m.width(), H = m.height();
  for (int it = 0; it < iters; ++it) {
    ContactMask next = cur;
    for (int v = 0; v < H; ++v)
      for (int u = 0; u < W; ++u) {
        if (!cur.at(u, v)) continue;
        bool edge = u == 0 || v == 0 || u == W - 1 || v == H - 1;
        if (!edge)
          edge = !cur.at(u - 1, v) || !cur.at(u + 1, v) || !cur.at(u, v - 1) ||
                 !cur.at(u, v + 1);
        if (edge) next.at(u, v) = 0;
      }
    cur = next;
  }
  return cur;
}

}  // namespace

NormalFlowResult normalflow(const Frame& ref, const Frame& tgt,
                            const TransformSE3& init, double pitch_mm,
                            const NormalFlowParams& params) {
  NormalFlowResult res;
  int W = ref.mask.width(), H = ref.mask.height();
  res.shared_mask = ContactMask(W, H, 0);

  // interior-only selection mask for the fit; fall back to the full mask on
  // small contacts
  int margin_px = int(std::lround(params.boundary_margin_mm / pitch_mm));
  const Frame* fit_ref = &ref;
  Frame interior;
  if (margin_px > 0) {
    ContactMask inner = eroded_mask(ref.mask, margin_px);
    long kept = 0;
    for (int v = 0; v < H; ++v)
      for (int u = 0; u < W; ++u) kept += inner.at(u, v) ? 1 : 0;
    if (kept >= params.min_shared_pixels) {
      interior = ref;
      interior.mask = std::move(inner);
      fit_ref = &interior;
    }
  }

  // target normal-map image gradients, central differences
  ImageV3 gx(W, H, Vec3::Zero()), gy(W, H, Vec3::Zero());
  for (int v = 1; v < H - 1; ++v) {
    for (int u = 1; u < W - 1; ++u) {
      gx.at(u, v) = 0.5 * (tgt.normal.at(u + 1, v) - tgt.normal.at(u - 1, v));
      gy.at(u, v) = 0.5 * (tgt.normal.at(u, v + 1) - tgt.normal.at(u, v - 1));
    }
  }

  Mat3 R = init.rotation;
  Vec3 t = init.translation / pitch_mm;  // optimize in pixel units

  std::vector<SharedPixel> shared;
  for (int iter = 0; iter < params.max_iterations; ++iter) {
    shared = shared_pixels(*fit_ref, tgt, R, t);
    if (int(shared.size()) < params.min_shared_pixels) {
      res.iterations = iter;
      res.converged = false;
      res.scr = 0.0;
      res.transform = {R, t * pitch_mm};
      return res;
    }
    // deterministic top-K by curvature, pixel order as tie break
    size_t K = std::min(size_t(params.pixel_budget), shared.size());
    std::stable_sort(shared.begin(), shared.end(),
                     [](const SharedPixel& a, const SharedPixel& b) {
                       return a.abs_curv > b.abs_curv;
                     });

    Mat6 JtJ = Mat6::Zero();
    Vec6 Jtr = Vec6::Zero();
    for (size_t k = 0; k < K; ++k) {
      int u = shared[k].u, v = shared[k].v;
      Vec3 q(u, v, ref.height.at(u, v));
      Vec3 p = R * q + t;
      Vec3 rn = R * ref.normal.at(u, v);
      Vec3 r = tgt.normal.sample(p.x(), p.y()) - rn;

      Eigen::Matrix<double, 3, 2> G;
      G.col(0) = gx.sample(p.x(), p.y());
      G.col(1) = gy.sample(p.x(), p.y());

      Eigen::Matrix<double, 2, 6> A;          // d(warp xy)/d(twist)
      A.block<2, 3>(0, 0) = (-skew(p)).topRows<2>();
      A.block<2, 3>(0, 3) = Eigen::Matrix<double, 2, 3>::Identity();

      Eigen::Matrix<double, 3, 6> J = G * A;
      J.block<3, 3>(0, 0) += skew(rn);

      JtJ.noalias() += J.transpose() * J;
      Jtr.noalias() += J.transpose() * r;
    }
    Vec6 delta = JtJ.ldlt().solve(-Jtr);
    TransformSE3 upd = se3_exp(Twist6::from_vector(delta));
    Mat3 Rn = upd.rotation * R;
    t = upd.rotation * t + upd.translation;
    R = Rn;
    res.iterations = iter + 1;
    if (delta.norm() < params.convergence_tol) {
      res.converged = true;
      break;
    }
  }

  // The warp drops the third coordinate, so the normal residual is blind to
  // t_z; recover it from height agreement over the shared region (median of
  // the per-pixel target-height minus predicted-height gap).
  shared = shared_pixels(*fit_ref, tgt, R, t);
  if (!shared.empty()) {
    std::vector<double> dz;
    dz.reserve(shared.size());
    for (const SharedPixel& s : shared) {
      Vec3 q(s.u, s.v, ref.height.at(s.u, s.v));
      Vec3 p = R * q + t;
      dz.push_back(tgt.height.sample(p.x(), p.y()) - p.z());
    }
    auto mid = dz.begin() + dz.size() / 2;
    std::nth_element(dz.begin(), mid, dz.end());
    t.z() += *mid;
  }

  res.transform = {R, t * pitch_mm};
  // final shared region and quality scores
  shared = shared_pixels(ref, tgt, R, t);
  if (int(shared.size()) < params.min_shared_pixels) {
    res.converged = false;
    res.scr = 0.0;
    return res;
  }
  for (const auto& s : shared) res.shared_mask.at(s.u, s.v) = 1;
  res.ccs = compute_ccs(ref, tgt, res.transform, pitch_mm);
  res.scr = compute_scr(ref, tgt, res.transform, pitch_mm);
  return res;
}

double compute_ccs(const Frame& ref, const Frame& tgt, const TransformSE3& T,
                   double pitch_mm) {
  Mat3 R = T.rotation;
  Vec3 t = T.translation / pitch_mm;
  auto shared = shared_pixels(ref, tgt, R, t);
  if (shared.empty()) return 0.0;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& s : shared) {
    Vec3 q(s.u, s.v, ref.height.at(s.u, s.v));
    Vec3 p = R * q + t;
    double lj = tgt.curvature.sample(p.x(), p.y());
    double li = ref.curvature.at(s.u, s.v);
    dot += lj * li;
    na += lj * lj;
    nb += li * li;
  }
  double denom = std::sqrt(na) * std::sqrt(nb);
  return denom > 1e-18 ? dot / denom : 0.0;
}

double compute_scr(const Frame& ref, const Frame& tgt, const TransformSE3& T,
                   double pitch_mm) {
  double total = 0.0;
  for (int v = 0; v < ref.mask.height(); ++v)
    for (int u = 0; u < ref.mask.width(); ++u)
      if (ref.mask.at(u, v)) total += std::abs(ref.curvature.at(u, v));
  if (total < 1e-18) return 0.0;
  auto shared = shared_pixels(ref, tgt, T.rotation, T.translation / pitch_mm);
  double covered = 0.0;
  for (const auto& s : shared) covered += s.abs_curv;
  return covered / total;
}

// --- tracker ---------------------------------------------------------------

bool Tracker::has_contact(const Frame& f) const {
  return count_nonzero(f.mask) >= nf_params_.min_shared_pixels;
}

const Keyframe* Tracker::keyframe_by_frame_id(int frame_id) const {
  for (const auto& kf : keyframes_)
    if (kf.frame_id == frame_id) return &kf;
  return nullptr;
}

int Tracker::start_session(std::shared_ptr<const Frame> frame) {
  Keyframe kf;
  kf.frame_id = frame->id;
  kf.session = session_count_++;
  kf.frame = frame;
  kf.session_pose = TransformSE3::identity();
  keyframes_.push_back(kf);
  latest_kf_index_ = int(keyframes_.size()) - 1;
  records_.push_back({frame->id, frame->id, TransformSE3::identity()});
  prev_frame_ = std::move(frame);
  prev_rel_ = TransformSE3::identity();
  tracking_ = true;
  return keyframes_.back().frame_id;
}

int Tracker::promote_keyframe(std::shared_ptr<const Frame> frame,
                              const TransformSE3& rel, int prev_keyframe_id) {
  const Keyframe& prev_kf = keyframes_[latest_kf_index_];
  Keyframe kf;
  kf.frame_id = frame->id;
  kf.session = prev_kf.session;
  kf.frame = std::move(frame);
  // T_new = T_prev * rel^{-1}  (rel maps prev-kf coords into new-kf coords)
  kf.session_pose = prev_kf.session_pose * rel.inverse();
  keyframes_.push_back(kf);
  latest_kf_index_ = int(keyframes_.size()) - 1;
  constraints_.push_back({prev_keyframe_id, kf.frame_id, rel});
  return kf.frame_id;
}

TrackOutcome Tracker::track(std::shared_ptr<const Frame> frame) {
  TrackOutcome out;
  if (!has_contact(*frame)) {
    if (tracking_) {
      tracking_ = false;
      ++lost_count_;
      out.event = TrackEventKind::TrackingLost;
    } else {
      out.event = TrackEventKind::NoContact;
    }
    prev_frame_.reset();
    return out;
  }

  if (!tracking_) {
    int id = start_session(frame);
    out.event = TrackEventKind::NewKeyframe;
    out.new_keyframe_ids.push_back(id);
    return out;
  }

  const Keyframe& kf = keyframes_[latest_kf_index_];
  NormalFlowResult nf = normalflow(*kf.frame, *frame, prev_rel_, pitch_, nf_params_);
  if (nf.passes(thresholds_)) {
    records_.push_back({frame->id, kf.frame_id, nf.transform});
    prev_rel_ = nf.transform;
    prev_frame_ = std::move(frame);
    out.event = TrackEventKind::Tracked;
    out.registration = std::move(nf);
    return out;
  }

  // Failure against the latest keyframe: promote t-1 unless it already is
  // the keyframe, then retry.
  if (prev_frame_ && prev_frame_->id != kf.frame_id) {
    int new_id = promote_keyframe(prev_frame_, prev_rel_, kf.frame_id);
    out.new_keyframe_ids.push_back(new_id);
    const Keyframe& nkf = keyframes_[latest_kf_index_];
    NormalFlowResult retry =
        normalflow(*nkf.frame, *frame, TransformSE3::identity(), pitch_, nf_params_);
    if (retry.passes(thresholds_)) {
      records_.push_back({frame->id, nkf.frame_id, retry.transform});
      prev_rel_ = retry.transform;
      prev_frame_ = std::move(frame);
      out.event = TrackEventKind::NewKeyframe;
      out.registration = std::move(retry);
      return out;
    }
  }

  // Still failing with the previous frame as keyframe: lost.
  ++lost_count_;
  tracking_ = false;
  int id = start_session(std::move(frame));
  out.event = TrackEventKind::TrackingLost;
  out.new_keyframe_ids.push_back(id);
  return out;
}

}  // namespace gelslam
