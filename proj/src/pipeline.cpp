#include "gelslam/pipeline.hpp"

#include <chrono>

namespace gelslam {

using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

SlamPipeline::SlamPipeline(const PipelineConfig& config)
    : cfg_(config),
      tracker_(config.pitch_mm, config.nf_params(), config.thresholds()),
      detector_(config.pitch_mm, config.thresholds(), config.coverage_params(),
                config.match_params(), config.nf_params()) {
  cfg_.validate();
  graph_.set_covariance(cfg_.graph_covariance());
  worker_ = std::thread([this] { loop_worker(); });
}

SlamPipeline::~SlamPipeline() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    done_ = true;
  }
  cv_.notify_all();
  if (worker_.joinable()) worker_.join();
}

void SlamPipeline::push(int frame_id, double timestamp, const NormalMap& normals) {
  if (cfg_.mode == "online") {
    if (!started_) {
      started_ = true;
      start_wall_ = Clock::now();
    } else {
      // simulated real time: admit frames at the recorded rate
      auto due = start_wall_ + std::chrono::duration_cast<Clock::duration>(
                                   std::chrono::duration<double>(timestamp));
      std::this_thread::sleep_until(due);
    }
  }

  auto t0 = Clock::now();
  auto frame = std::make_shared<Frame>(
      frame_from_normals(frame_id, timestamp, normals, cfg_.surface_params()));
  TrackOutcome out = tracker_.track(frame);
  tracking_seconds_ += seconds_since(t0);
  ++tracked_frames_;

  if (out.new_keyframe_ids.empty()) return;

  // hand fresh keyframes (with their odometry constraints) to the loop stage
  const auto& all_constraints = tracker_.constraints();
  std::vector<KeyframeConstraint> fresh(all_constraints.begin() + constraints_consumed_,
                                        all_constraints.end());
  constraints_consumed_ = all_constraints.size();

  std::vector<KeyframeJob> jobs;
  for (int id : out.new_keyframe_ids) {
    const Keyframe* kf = tracker_.keyframe_by_frame_id(id);
    if (!kf) continue;
    auto origin = session_origin_.find(kf->session);
    if (origin == session_origin_.end())
      origin = session_origin_.emplace(kf->session, TransformSE3::identity()).first;
    KeyframeJob job;
    job.frame_id = id;
    job.frame = kf->frame;
    job.initial_pose = origin->second * kf->session_pose;
    jobs.push_back(std::move(job));
  }
  if (!jobs.empty()) jobs.front().constraints = std::move(fresh);

  {
    std::lock_guard<std::mutex> lock(mu_);
    for (auto& j : jobs) queue_.push_back(std::move(j));
  }
  cv_.notify_one();
}

void SlamPipeline::loop_worker() {
  for (;;) {
    std::vector<KeyframeJob> batch;
    {
      std::unique_lock<std::mutex> lock(mu_);
      cv_.wait(lock, [this] { return done_ || !queue_.empty(); });
      if (queue_.empty()) return;
      if (cfg_.mode == "online") {
        // everything that piled up while we were busy gets its graph
        // bookkeeping, but only the most recent keyframe is searched
        while (!queue_.empty()) {
          batch.push_back(std::move(queue_.front()));
          queue_.pop_front();
        }
      } else {
        batch.push_back(std::move(queue_.front()));
        queue_.pop_front();
      }
    }
    for (size_t i = 0; i < batch.size(); ++i) {
      bool detect = (i + 1 == batch.size());
      if (!detect) skipped_.push_back(batch[i].frame_id);
      handle_job(std::move(batch[i]), detect);
    }
  }
}

void SlamPipeline::handle_job(KeyframeJob job, bool detect) {
  if (!graph_.has_node(job.frame_id)) graph_.add_node(job.frame_id, job.initial_pose);
  for (const auto& c : job.constraints) {
    PoseGraphEdge e;
    e.from = c.from_frame_id;
    e.to = c.to_frame_id;
    e.estimate = c.estimate;
    e.source = EdgeSource::Tracking;
    graph_.add_edge(e);
  }
  if (!detect) return;

  if (cfg_.loop_delay_ms > 0)
    std::this_thread::sleep_for(std::chrono::milliseconds(cfg_.loop_delay_ms));

  auto t0 = Clock::now();
  auto accepted =
      detector_.process_keyframe(job.frame_id, job.frame, graph_.pose(job.frame_id));
  loop_seconds_ += seconds_since(t0);

  if (accepted.empty()) return;
  for (const auto& lc : accepted) {
    PoseGraphEdge e;
    e.from = lc.from_frame_id;
    e.to = lc.to_frame_id;
    e.estimate = lc.transform;
    e.source = EdgeSource::Loop;
    graph_.add_edge(e);
    loops_.push_back(lc);
  }
  solve();
}

void SlamPipeline::solve() {
  auto t0 = Clock::now();
  if (cfg_.solver == "gnc")
    graph_.optimize_gnc(cfg_.gnc_params());
  else
    graph_.optimize_lm(cfg_.lm_params());
  detector_.coverage().reproject(graph_.nodes());
  solve_seconds_ += seconds_since(t0);
  ++solves_;
}

double SlamPipeline::mean_tracking_seconds() const {
  return tracked_frames_ > 0 ? tracking_seconds_ / double(tracked_frames_) : 0.0;
}

PipelineResult SlamPipeline::finish(bool reconstruct) {
  if (!finished_) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      done_ = true;
    }
    cv_.notify_all();
    if (worker_.joinable()) worker_.join();
    finished_ = true;
  }

  PipelineResult res;
  bool has_loops = false;
  for (const auto& e : graph_.edges())
    if (e.source == EdgeSource::Loop) has_loops = true;
  if (has_loops) solve();  // final consolidation pass

  // per-frame poses from the optimized keyframes: T_frame = T_kf * rel^{-1}
  std::map<int, double> timestamps;
  for (const auto& kf : tracker_.keyframes())
    timestamps[kf.frame_id] = kf.frame->timestamp;
  for (const auto& rec : tracker_.frame_records()) {
    if (!graph_.has_node(rec.keyframe_id)) continue;
    TrajectoryEntry e;
    e.frame_id = rec.frame_id;
    e.pose = graph_.pose(rec.keyframe_id) * rec.rel.inverse();
    auto it = timestamps.find(rec.frame_id);
    e.timestamp = it != timestamps.end() ? it->second : 0.0;
    res.trajectory.push_back(e);
  }

  res.graph = graph_;
  res.skipped_keyframes = skipped_;
  res.loops = loops_;
  res.metrics.frames = int(tracked_frames_);
  res.metrics.keyframes = int(tracker_.keyframes().size());
  res.metrics.coverage_keyframes = int(detector_.coverage().members().size());
  res.metrics.sessions = tracker_.session_count();
  res.metrics.skipped_keyframes = int(skipped_.size());
  res.metrics.loop_candidates = detector_.stats().candidates;
  res.metrics.loops_accepted = detector_.stats().accepted;
  res.metrics.tracking_seconds = tracking_seconds_;
  res.metrics.loop_seconds = loop_seconds_;
  res.metrics.solve_seconds = solve_seconds_;

  if (reconstruct && !detector_.coverage().members().empty()) {
    auto t0 = Clock::now();
    std::vector<FusionInput> inputs;
    for (int id : detector_.coverage().members())
      inputs.push_back({id, detector_.coverage().frame(id), graph_.pose(id)});
    res.fused = fuse_fast(inputs, cfg_.pitch_mm, cfg_.fusion_params());
    res.watertight = remesh_watertight(res.fused, cfg_.remesh_params());
    res.metrics.reconstruct_seconds = seconds_since(t0);
  }
  return res;
}

PipelineResult run_slam(const std::string& gts_path, const PipelineConfig& config,
                        const CalibrationNet* net) {
  GtsReader reader(gts_path);
  PipelineConfig cfg = config;
  cfg.sensor_width = int(reader.header().width);
  cfg.sensor_height = int(reader.header().height);
  cfg.pitch_mm = reader.header().pitch_mm;
  cfg.frame_rate_hz = reader.header().frame_rate_hz;
  if (reader.header().payload == GtsPayload::Rgb && !net)
    throw ConfigError("RGB sequence requires a calibration net");

  SlamPipeline pipe(cfg);
  double ts;
  ImageV3 normals;
  Image<Vec3> rgb;
  int id = 0;
  while (reader.next(ts, normals, rgb)) {
    if (reader.header().payload == GtsPayload::Rgb)
      normals = normals_from_rgb(*net, rgb);
    pipe.push(id++, ts, normals);
  }
  PipelineResult res = pipe.finish();
  if (res.metrics.keyframes == 0) throw NoContactFrames();
  return res;
}

}  // namespace gelslam
