#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "gelslam/pose_graph.hpp"

using namespace gelslam;

namespace {

TransformSE3 random_pose(std::mt19937_64& rng, double rot_scale, double trans_scale) {
  std::normal_distribution<double> g(0.0, 1.0);
  Twist6 xi;
  xi.rot = Vec3(g(rng), g(rng), g(rng)) * rot_scale;
  xi.trans = Vec3(g(rng), g(rng), g(rng)) * trans_scale;
  return se3_exp(xi);
}

// Ground-truth poses on a circle in the xy plane, heading tangent to it.
std::vector<TransformSE3> circle_poses(int n, double radius) {
  std::vector<TransformSE3> gt(n);
  for (int k = 0; k < n; ++k) {
    double th = 2.0 * M_PI * k / n;
    gt[k].rotation = so3_exp(Vec3(0, 0, th));
    gt[k].translation = Vec3(radius * std::cos(th), radius * std::sin(th), 0.0);
  }
  return gt;
}

double worst_node_error_deg(const PoseGraph& g, const std::vector<TransformSE3>& gt) {
  double worst = 0.0;
  for (size_t k = 0; k < gt.size(); ++k) {
    TransformSE3 err = gt[k].inverse() * g.pose(int(k));
    worst = std::max(worst, err.rotation_angle() * 180.0 / M_PI);
  }
  return worst;
}

double pose_set_distance(const PoseGraph& a, const PoseGraph& b) {
  double worst = 0.0;
  for (const auto& [id, T] : a.nodes()) {
    TransformSE3 d = T.inverse() * b.pose(id);
    worst = std::max(worst, d.rotation_angle() + d.translation.norm());
  }
  return worst;
}

}  // namespace

TEST_CASE("edge_error: consistent edge is zero, both directions") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 10; ++t) {
    TransformSE3 Ti = random_pose(rng, 0.5, 5.0);
    TransformSE3 Tj = random_pose(rng, 0.5, 5.0);
    TransformSE3 est = Tj.inverse() * Ti;
    CHECK(PoseGraph::edge_error(Ti, Tj, est).norm() < 1e-10);
    // reverse direction with the reverse estimate
    CHECK(PoseGraph::edge_error(Tj, Ti, est.inverse()).norm() < 1e-10);
    // a perturbed estimate must not report zero
    TransformSE3 off = est * se3_exp(Twist6{Vec3(0.01, 0, 0), Vec3::Zero()});
    CHECK(PoseGraph::edge_error(Ti, Tj, off).norm() > 1e-4);
  }
}

TEST_CASE("edge_error: identity poses with 1 mm x-translation estimate") {
  TransformSE3 est;
  est.translation = Vec3(1.0, 0.0, 0.0);
  Twist6 e = PoseGraph::edge_error(TransformSE3::identity(), TransformSE3::identity(), est);
  // direct evaluation: est^{-1} * I * I = translation(-1,0,0), log is the
  // same pure translation
  CHECK(e.rot.norm() < 1e-12);
  CHECK((e.trans - Vec3(-1.0, 0.0, 0.0)).norm() < 1e-12);
}

TEST_CASE("edge_error matches direct matrix evaluation on random inputs") {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 20; ++t) {
    TransformSE3 Ti = random_pose(rng, 0.4, 3.0);
    TransformSE3 Tj = random_pose(rng, 0.4, 3.0);
    TransformSE3 est = random_pose(rng, 0.4, 3.0);
    Twist6 e = PoseGraph::edge_error(Ti, Tj, est);
    // oracle: exponentiate the twist and compare with the explicit 4x4
    // composition est^-1 * Tj^-1 * Ti
    Eigen::Matrix4d M = Eigen::Matrix4d::Identity(), A = M, B = M, C = M;
    A.topLeftCorner<3, 3>() = est.rotation;
    A.topRightCorner<3, 1>() = est.translation;
    B.topLeftCorner<3, 3>() = Tj.rotation;
    B.topRightCorner<3, 1>() = Tj.translation;
    C.topLeftCorner<3, 3>() = Ti.rotation;
    C.topRightCorner<3, 1>() = Ti.translation;
    Eigen::Matrix4d D = A.inverse() * B.inverse() * C;
    TransformSE3 back = se3_exp(e);
    Eigen::Matrix4d E = Eigen::Matrix4d::Identity();
    E.topLeftCorner<3, 3>() = back.rotation;
    E.topRightCorner<3, 1>() = back.translation;
    CHECK((D - E).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("edge_error propagates AngleNearPi") {
  TransformSE3 est;
  est.rotation = so3_exp(Vec3(M_PI - 1e-9, 0, 0));
  CHECK_THROWS_AS(PoseGraph::edge_error(TransformSE3::identity(),
                                        TransformSE3::identity(), est),
                  AngleNearPi);
}

TEST_CASE("consistent chain: poses equal the composed chain within 1e-9") {
  std::mt19937_64 rng(13);
  std::vector<TransformSE3> gt(12);
  gt[0] = TransformSE3::identity();
  for (size_t k = 1; k < gt.size(); ++k)
    gt[k] = gt[k - 1] * random_pose(rng, 0.1, 1.0);

  PoseGraph g;
  g.add_node(0, gt[0]);
  for (size_t k = 1; k < gt.size(); ++k) {
    // initialize away from the optimum; the exact edges must pull it back
    g.add_node(int(k), gt[k] * random_pose(rng, 0.02, 0.2));
    g.add_edge({int(k - 1), int(k), gt[k].inverse() * gt[k - 1], EdgeSource::Tracking});
  }
  SolveReport rep = g.optimize_lm();
  CHECK(rep.final_error < 1e-14);
  for (size_t k = 0; k < gt.size(); ++k) {
    TransformSE3 err = gt[k].inverse() * g.pose(int(k));
    CHECK(err.rotation_angle() < 1e-9);
    CHECK(err.translation.norm() < 1e-9);
  }
}

TEST_CASE("20-node circle: drift closed by an exact loop edge") {
  const int N = 20;
  auto gt = circle_poses(N, 10.0);
  TransformSE3 drift;
  drift.rotation = so3_exp(Vec3(0, 0, M_PI / 180.0));  // 1 degree per edge

  PoseGraph g;
  g.add_node(0, gt[0]);
  for (int k = 0; k + 1 < N; ++k) {
    TransformSE3 est = gt[k + 1].inverse() * gt[k];
    // chain the initial guess through a 1-degree-per-edge drift
    g.add_node(k + 1, g.pose(k) * (drift * est).inverse());
    g.add_edge({k, k + 1, est, EdgeSource::Tracking});
  }
  TransformSE3 loop_est = gt[N - 1].inverse() * gt[0];
  g.add_edge({0, N - 1, loop_est, EdgeSource::Loop});

  auto closure_deg = [&]() {
    return PoseGraph::edge_error(g.pose(0), g.pose(N - 1), loop_est).rot.norm() *
           180.0 / M_PI;
  };
  CHECK(closure_deg() > 15.0);  // accumulated drift before solving
  SolveReport rep = g.optimize_lm();
  CHECK(rep.final_error <= rep.initial_error);
  CHECK(closure_deg() < 0.05);
  CHECK(worst_node_error_deg(g, gt) < 0.05);
}

TEST_CASE("20-node circle: biased edges spread the loop residual") {
  const int N = 20;
  auto gt = circle_poses(N, 10.0);
  TransformSE3 bias;
  bias.rotation = so3_exp(Vec3(0, 0, M_PI / 180.0));

  PoseGraph g;
  g.add_node(0, gt[0]);
  for (int k = 0; k + 1 < N; ++k) {
    TransformSE3 est = bias * (gt[k + 1].inverse() * gt[k]);
    g.add_node(k + 1, g.pose(k) * est.inverse());
    g.add_edge({k, k + 1, est, EdgeSource::Tracking});
  }
  TransformSE3 loop_est = gt[N - 1].inverse() * gt[0];
  g.add_edge({0, N - 1, loop_est, EdgeSource::Loop});

  SolveReport rep = g.optimize_lm();
  CHECK(rep.final_error <= rep.initial_error);
  // 19 degrees of contradiction shared across 20 edges: every residual ends
  // near the 0.95-degree average instead of piling up at the closure
  REQUIRE(rep.edge_residuals.size() == size_t(N));
  for (double r : rep.edge_residuals) {
    double deg = r * 0.5;  // whitened by the 0.5-degree rotation std
    CHECK(deg < 1.5);
  }
  Twist6 e = PoseGraph::edge_error(g.pose(0), g.pose(N - 1), loop_est);
  CHECK(e.rot.norm() * 180.0 / M_PI < 1.5);
}

TEST_CASE("LM never increases the energy on random graphs") {
  std::mt19937_64 rng(14);
  std::uniform_int_distribution<int> size(5, 12);
  for (int trial = 0; trial < 50; ++trial) {
    int n = size(rng);
    std::vector<TransformSE3> gt(n);
    gt[0] = TransformSE3::identity();
    for (int k = 1; k < n; ++k) gt[k] = gt[k - 1] * random_pose(rng, 0.15, 1.5);

    PoseGraph g;
    g.add_node(0, gt[0]);
    for (int k = 1; k < n; ++k) {
      g.add_node(k, gt[k] * random_pose(rng, 0.03, 0.3));
      TransformSE3 est = (gt[k].inverse() * gt[k - 1]) * random_pose(rng, 0.005, 0.05);
      g.add_edge({k - 1, k, est, EdgeSource::Tracking});
    }
    // a few random extra constraints
    std::uniform_int_distribution<int> node(0, n - 1);
    for (int e = 0; e < 3; ++e) {
      int i = node(rng), j = node(rng);
      if (i == j) continue;
      TransformSE3 est = (gt[j].inverse() * gt[i]) * random_pose(rng, 0.005, 0.05);
      g.add_edge({i, j, est, EdgeSource::Loop});
    }
    SolveReport rep = g.optimize_lm();
    CHECK(rep.final_error <= rep.initial_error + 1e-12);
  }
}

TEST_CASE("zero-residual recovery up to gauge within 1e-8") {
  std::mt19937_64 rng(15);
  std::vector<TransformSE3> gt(15);
  gt[0] = random_pose(rng, 0.3, 4.0);  // non-identity gauge
  for (size_t k = 1; k < gt.size(); ++k)
    gt[k] = gt[k - 1] * random_pose(rng, 0.2, 2.0);

  PoseGraph g;
  g.add_node(0, gt[0]);
  for (size_t k = 1; k < gt.size(); ++k) {
    g.add_node(int(k), gt[k] * random_pose(rng, 0.05, 0.5));
    g.add_edge({int(k - 1), int(k), gt[k].inverse() * gt[k - 1], EdgeSource::Tracking});
  }
  // exact long-range constraints as well
  g.add_edge({0, 14, gt[14].inverse() * gt[0], EdgeSource::Loop});
  g.add_edge({3, 11, gt[11].inverse() * gt[3], EdgeSource::Loop});
  g.optimize_lm();
  for (size_t k = 0; k < gt.size(); ++k) {
    // acos in rotation_angle bottoms out near 3e-8; compare matrices directly
    CHECK((g.pose(int(k)).rotation - gt[k].rotation).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((g.pose(int(k)).translation - gt[k].translation).norm() < 1e-8);
  }
}

namespace {

// Noisy circle graph shared by the GNC scenarios. Returns the graph and the
// ground truth; optionally appends false loop edges afterwards.
PoseGraph noisy_circle(const std::vector<TransformSE3>& gt, unsigned seed) {
  std::mt19937_64 rng(seed);
  int n = int(gt.size());
  PoseGraph g;
  g.add_node(0, gt[0]);
  for (int k = 0; k + 1 < n; ++k) {
    TransformSE3 est =
        (gt[k + 1].inverse() * gt[k]) * random_pose(rng, 0.002, 0.02);
    g.add_node(k + 1, g.pose(k) * est.inverse());
    g.add_edge({k, k + 1, est, EdgeSource::Tracking});
  }
  TransformSE3 loop_est =
      (gt[n - 1].inverse() * gt[0]) * random_pose(rng, 0.002, 0.02);
  g.add_edge({0, n - 1, loop_est, EdgeSource::Loop});
  return g;
}

}  // namespace

TEST_CASE("GNC rejects three injected false loops") {
  auto gt = circle_poses(20, 10.0);

  PoseGraph clean = noisy_circle(gt, 21);
  clean.optimize_lm();
  double clean_err = worst_node_error_deg(clean, gt);

  PoseGraph g = noisy_circle(gt, 21);
  std::mt19937_64 rng(22);
  std::vector<size_t> injected;
  int pairs[3][2] = {{2, 13}, {5, 17}, {8, 11}};
  for (auto& p : pairs) {
    TransformSE3 bogus = random_pose(rng, 0.8, 6.0);  // far from any truth
    injected.push_back(g.edges().size());
    g.add_edge({p[0], p[1], bogus, EdgeSource::Loop});
  }
  SolveReport rep = g.optimize_gnc();
  for (size_t k : injected)
    CHECK(std::count(rep.rejected_edges.begin(), rep.rejected_edges.end(), k) == 1);
  // no tracking edge may ever be rejected
  for (size_t k : rep.rejected_edges)
    CHECK(g.edges()[k].source == EdgeSource::Loop);
  double err = worst_node_error_deg(g, gt);
  CHECK(err < 2.0 * clean_err + 1e-6);
}

TEST_CASE("GNC with zero outliers matches LM within 1e-6") {
  auto gt = circle_poses(20, 10.0);
  PoseGraph a = noisy_circle(gt, 33);
  PoseGraph b = noisy_circle(gt, 33);
  SolveReport ra = a.optimize_lm();
  SolveReport rb = b.optimize_gnc();
  CHECK(rb.rejected_edges.empty());
  CHECK(pose_set_distance(a, b) < 1e-6);
  CHECK(std::abs(ra.final_error - rb.final_error) < 1e-6 * (1.0 + ra.final_error));
}

TEST_CASE("GNC terminates on sparse-loop graphs and reports rejections") {
  std::mt19937_64 rng(44);
  const int n = 50;
  std::vector<TransformSE3> gt(n);
  gt[0] = TransformSE3::identity();
  for (int k = 1; k < n; ++k) gt[k] = gt[k - 1] * random_pose(rng, 0.1, 1.0);

  PoseGraph g;
  g.add_node(0, gt[0]);
  for (int k = 1; k < n; ++k) {
    TransformSE3 est = (gt[k].inverse() * gt[k - 1]) * random_pose(rng, 0.004, 0.04);
    g.add_node(k, g.pose(k - 1) * est.inverse());
    g.add_edge({k - 1, k, est, EdgeSource::Tracking});
  }
  // only two genuine loops; the solver may legitimately distrust them
  g.add_edge({0, 25, (gt[25].inverse() * gt[0]) * random_pose(rng, 0.004, 0.04),
              EdgeSource::Loop});
  g.add_edge({25, 49, (gt[49].inverse() * gt[25]) * random_pose(rng, 0.004, 0.04),
              EdgeSource::Loop});
  SolveReport rep = g.optimize_gnc();
  CHECK(rep.iterations >= 1);
  CHECK(rep.rejected_edges.size() <= 2);
  for (size_t k : rep.rejected_edges)
    CHECK(g.edges()[k].source == EdgeSource::Loop);
}

TEST_CASE("warm re-solve after adding edges matches a cold solve") {
  auto gt = circle_poses(20, 10.0);
  PoseGraph warm = noisy_circle(gt, 55);
  // drop the loop edge for the first solve: rebuild without it
  PoseGraph no_loop;
  for (const auto& [id, T] : warm.nodes()) no_loop.add_node(id, T);
  for (const auto& e : warm.edges())
    if (e.source == EdgeSource::Tracking) no_loop.add_edge(e);
  no_loop.optimize_lm();

  // warm start: take the loop-free optimum, then add the loop and re-solve
  PoseGraph warm2 = noisy_circle(gt, 55);
  for (const auto& [id, T] : no_loop.nodes()) warm2.set_pose(id, T);
  warm2.optimize_lm();

  PoseGraph cold = noisy_circle(gt, 55);
  cold.optimize_lm();
  CHECK(pose_set_distance(warm2, cold) < 1e-6);
}

TEST_CASE("disconnected nodes are reported and left untouched") {
  std::mt19937_64 rng(66);
  PoseGraph g;
  TransformSE3 a = random_pose(rng, 0.2, 2.0);
  TransformSE3 b = random_pose(rng, 0.2, 2.0);
  g.add_node(0, TransformSE3::identity());
  g.add_node(1, a.inverse());
  g.add_edge({0, 1, a, EdgeSource::Tracking});
  // a second session, unreachable from the gauge node
  TransformSE3 p5 = random_pose(rng, 0.2, 2.0);
  g.add_node(5, p5);
  g.add_node(6, p5 * b.inverse());
  g.add_edge({5, 6, b, EdgeSource::Tracking});

  SolveReport rep = g.optimize_lm();
  CHECK(rep.disconnected_nodes == std::vector<int>{5, 6});
  CHECK((g.pose(5).translation - p5.translation).norm() == 0.0);
  CHECK((g.pose(6).translation - (p5 * b.inverse()).translation).norm() == 0.0);
}

TEST_CASE("gauge invariance: common left factor leaves residuals unchanged") {
  std::mt19937_64 rng(77);
  TransformSE3 Ti = random_pose(rng, 0.3, 3.0);
  TransformSE3 Tj = random_pose(rng, 0.3, 3.0);
  TransformSE3 est = (Tj.inverse() * Ti) * random_pose(rng, 0.05, 0.5);
  TransformSE3 G = random_pose(rng, 0.5, 10.0);
  Twist6 e0 = PoseGraph::edge_error(Ti, Tj, est);
  Twist6 e1 = PoseGraph::edge_error(G * Ti, G * Tj, est);
  CHECK((e0.vector() - e1.vector()).norm() < 1e-10);
}

TEST_CASE("save/load round trip preserves the graph") {
  auto gt = circle_poses(8, 6.0);
  PoseGraph g = noisy_circle(gt, 88);
  std::string path = "pg_roundtrip.txt";
  g.save(path);
  PoseGraph back = PoseGraph::load(path);
  std::remove(path.c_str());

  REQUIRE(back.nodes().size() == g.nodes().size());
  REQUIRE(back.edges().size() == g.edges().size());
  CHECK(back.gauge_node() == g.gauge_node());
  for (const auto& [id, T] : g.nodes()) {
    CHECK((back.pose(id).rotation - T.rotation).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((back.pose(id).translation - T.translation).norm() < 1e-12);
  }
  for (size_t k = 0; k < g.edges().size(); ++k) {
    const auto& e = g.edges()[k];
    const auto& f = back.edges()[k];
    CHECK(e.from == f.from);
    CHECK(e.to == f.to);
    CHECK(e.source == f.source);
    CHECK((f.estimate.rotation - e.estimate.rotation).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((f.estimate.translation - e.estimate.translation).norm() < 1e-12);
  }
}
