#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "gelslam/config.hpp"
#include "gelslam/evaluation.hpp"
#include "gelslam/gts_io.hpp"
#include "gelslam/loop_closure.hpp"
#include "gelslam/pose_graph.hpp"
#include "gelslam/reconstruction.hpp"
#include "gelslam/tracking.hpp"

namespace gelslam {

struct NoContactFrames : std::runtime_error {
  NoContactFrames() : std::runtime_error("sequence contains no contact frames") {}
};

struct PipelineResult {
  std::vector<TrajectoryEntry> trajectory;  // every tracked frame
  PoseGraph graph;
  FusedSurface fused;
  WatertightMesh watertight;
  std::vector<int> skipped_keyframes;       // loop detection skipped (online)
  std::vector<LoopConstraint> loops;
  MetricsReport metrics;                    // counts and stage timings
};

/// Streaming tracking -> loop-closure -> optimization. Tracking runs in the
/// caller's thread and never blocks on the loop stage; loop detection and
/// graph solving run on a worker thread. In online mode frames are admitted
/// at the declared rate and keyframes arriving while the loop stage is busy
/// are skipped, except the most recent.
class SlamPipeline {
 public:
  explicit SlamPipeline(const PipelineConfig& config);
  ~SlamPipeline();

  /// Feed one frame; normals are the sensor-frame surface normal map.
  void push(int frame_id, double timestamp, const NormalMap& normals);

  /// Drains the loop stage, runs the final solve, recovers per-frame poses,
  /// and (optionally) reconstructs. Call once.
  PipelineResult finish(bool reconstruct = true);

  double mean_tracking_seconds() const;

 private:
  struct KeyframeJob {
    int frame_id = 0;
    std::shared_ptr<const Frame> frame;
    TransformSE3 initial_pose;  // session-local estimate
    std::vector<KeyframeConstraint> constraints;
  };

  void loop_worker();
  void handle_job(KeyframeJob job, bool detect);
  void solve();

  PipelineConfig cfg_;
  Tracker tracker_;
  LoopDetector detector_;
  PoseGraph graph_;

  std::thread worker_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<KeyframeJob> queue_;
  bool done_ = false;
  bool busy_ = false;

  size_t constraints_consumed_ = 0;
  std::vector<int> skipped_;
  std::vector<LoopConstraint> loops_;
  int solves_ = 0;

  // session bookkeeping: map session-local poses into a global initial guess
  std::map<int, TransformSE3> session_origin_;

  std::chrono::steady_clock::time_point start_wall_{};
  bool started_ = false;
  double tracking_seconds_ = 0.0;
  long tracked_frames_ = 0;
  double loop_seconds_ = 0.0;
  double solve_seconds_ = 0.0;

  bool finished_ = false;
};

/// Full offline-file run: reads a .gts (normals payload, or RGB with a
/// calibration net), runs the pipeline, returns the result.
PipelineResult run_slam(const std::string& gts_path, const PipelineConfig& config,
                        const CalibrationNet* net = nullptr);

}  // namespace gelslam
