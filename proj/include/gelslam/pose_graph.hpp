#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "gelslam/geometry.hpp"

namespace gelslam {

enum class EdgeSource { Tracking, Loop };

struct PoseGraphEdge {
  int from = 0;  // node id i
  int to = 0;    // node id j
  TransformSE3 estimate;  // ^{j}T̂_{i}
  EdgeSource source = EdgeSource::Tracking;
};

struct SolveReport {
  int iterations = 0;
  double initial_error = 0.0;
  double final_error = 0.0;
  std::vector<double> edge_residuals;  // whitened norms, per edge
  std::vector<size_t> rejected_edges;  // indices into edges (GNC only)
  std::vector<int> disconnected_nodes;
};

struct LmParams {
  double damping_init = 1e-4;
  double damping_up = 10.0;
  double damping_down = 10.0;
  double rel_decrease_tol = 1e-9;
  int max_iterations = 100;
};

struct GncParams {
  LmParams lm;
  double mu_divisor = 1.4;
  double inlier_cost_sq = 6.0;   // c̄² on whitened residual norms
  double reject_weight = 0.5;
  int max_outer_iterations = 100;
};

class PoseGraph {
 public:
  PoseGraph();

  void add_node(int id, const TransformSE3& initial);
  bool has_node(int id) const { return nodes_.count(id) > 0; }
  void set_pose(int id, const TransformSE3& T);
  const TransformSE3& pose(int id) const { return nodes_.at(id); }
  const std::map<int, TransformSE3>& nodes() const { return nodes_; }

  void add_edge(const PoseGraphEdge& e);
  const std::vector<PoseGraphEdge>& edges() const { return edges_; }

  /// Gauge node: held fixed during optimization (first node added).
  int gauge_node() const { return gauge_; }

  /// Fixed constraint covariance; diagonal by default with rotation std
  /// 0.5 deg and translation std 0.05 mm.
  void set_covariance(const Mat6& sigma);
  const Mat6& covariance() const { return sigma_; }

  /// Pose error e_ij = log(T̂^{-1} · T_j^{-1} · T_i).
  static Twist6 edge_error(const TransformSE3& T_i, const TransformSE3& T_j,
                           const TransformSE3& estimate);

  SolveReport optimize_lm(const LmParams& params = {});
  SolveReport optimize_gnc(const GncParams& params = {});

  /// Text dump: VERTEX id tx ty tz qx qy qz qw / EDGE i j tx ty tz qx qy qz qw.
  void save(const std::string& path) const;
  static PoseGraph load(const std::string& path);

 private:
  SolveReport optimize_weighted(const std::vector<double>& edge_weights,
                                const LmParams& params);
  double total_error(const std::vector<double>& edge_weights) const;

  std::map<int, TransformSE3> nodes_;
  std::vector<PoseGraphEdge> edges_;
  int gauge_ = -1;
  Mat6 sigma_;
  Mat6 sigma_inv_sqrt_;
};

}  // namespace gelslam
