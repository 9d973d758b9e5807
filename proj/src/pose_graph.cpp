#include "gelslam/pose_graph.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>

namespace gelslam {

PoseGraph::PoseGraph() {
  Mat6 sigma = Mat6::Zero();
  double rot_std = 0.5 * M_PI / 180.0;
  double trans_std = 0.05;
  for (int i = 0; i < 3; ++i) {
    sigma(i, i) = rot_std * rot_std;
    sigma(i + 3, i + 3) = trans_std * trans_std;
  }
  set_covariance(sigma);
}

void PoseGraph::set_covariance(const Mat6& sigma) {
  sigma_ = sigma;
  Eigen::SelfAdjointEigenSolver<Mat6> es(sigma);
  sigma_inv_sqrt_ = es.operatorInverseSqrt();
}

void PoseGraph::add_node(int id, const TransformSE3& initial) {
  if (nodes_.empty()) gauge_ = id;
  nodes_[id] = initial;
}

void PoseGraph::set_pose(int id, const TransformSE3& T) { nodes_.at(id) = T; }

void PoseGraph::add_edge(const PoseGraphEdge& e) { edges_.push_back(e); }

Twist6 PoseGraph::edge_error(const TransformSE3& T_i, const TransformSE3& T_j,
                             const TransformSE3& estimate) {
  return se3_log(estimate.inverse() * T_j.inverse() * T_i);
}

namespace {

// Nodes reachable from the gauge through edges.
std::set<int> connected_component(int gauge, const std::vector<PoseGraphEdge>& edges) {
  std::map<int, std::vector<int>> adj;
  for (const auto& e : edges) {
    adj[e.from].push_back(e.to);
    adj[e.to].push_back(e.from);
  }
  std::set<int> seen{gauge};
  std::deque<int> queue{gauge};
  while (!queue.empty()) {
    int n = queue.front();
    queue.pop_front();
    for (int m : adj[n])
      if (seen.insert(m).second) queue.push_back(m);
  }
  return seen;
}

}  // namespace

double PoseGraph::total_error(const std::vector<double>& w) const {
  double err = 0.0;
  for (size_t k = 0; k < edges_.size(); ++k) {
    const auto& e = edges_[k];
    Vec6 r = sigma_inv_sqrt_ *
             edge_error(nodes_.at(e.from), nodes_.at(e.to), e.estimate).vector();
    err += w[k] * r.squaredNorm();
  }
  return err;
}

SolveReport PoseGraph::optimize_weighted(const std::vector<double>& weights,
                                         const LmParams& params) {
  SolveReport report;
  if (nodes_.empty()) return report;

  std::set<int> component = connected_component(gauge_, edges_);
  for (const auto& [id, T] : nodes_)
    if (!component.count(id)) report.disconnected_nodes.push_back(id);

  // free-variable layout: 6 per node in the component, gauge excluded
  std::map<int, int> index;
  for (int id : component)
    if (id != gauge_ && nodes_.count(id)) index[id] = int(index.size());
  int n_free = int(index.size());

  std::vector<size_t> active;
  for (size_t k = 0; k < edges_.size(); ++k)
    if (component.count(edges_[k].from) && component.count(edges_[k].to))
      active.push_back(k);

  report.initial_error = total_error(weights);
  double prev_error = report.initial_error;
  double lambda = params.damping_init;

  auto edge_residual = [&](size_t k) {
    const auto& e = edges_[k];
    return (sigma_inv_sqrt_ *
            edge_error(nodes_.at(e.from), nodes_.at(e.to), e.estimate).vector())
        .eval();
  };
  // numerical Jacobian of the whitened residual w.r.t. the left-multiplied
  // twist of one endpoint
  auto edge_jacobian = [&](size_t k, int node, Eigen::Matrix<double, 6, 6>* J) {
    const auto& e = edges_[k];
    const double h = 1e-6;
    TransformSE3 Ti = nodes_.at(e.from), Tj = nodes_.at(e.to);
    for (int c = 0; c < 6; ++c) {
      Vec6 d = Vec6::Zero();
      d(c) = h;
      TransformSE3 plus = se3_exp(Twist6::from_vector(d));
      d(c) = -h;
      TransformSE3 minus = se3_exp(Twist6::from_vector(d));
      Vec6 rp, rm;
      if (node == e.from) {
        rp = sigma_inv_sqrt_ * edge_error(plus * Ti, Tj, e.estimate).vector();
        rm = sigma_inv_sqrt_ * edge_error(minus * Ti, Tj, e.estimate).vector();
      } else {
        rp = sigma_inv_sqrt_ * edge_error(Ti, plus * Tj, e.estimate).vector();
        rm = sigma_inv_sqrt_ * edge_error(Ti, minus * Tj, e.estimate).vector();
      }
      J->col(c) = (rp - rm) / (2.0 * h);
    }
  };

  for (int iter = 0; iter < params.max_iterations && n_free > 0; ++iter) {
    std::vector<Eigen::Triplet<double>> triplets;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(6 * n_free);

    for (size_t k : active) {
      const auto& e = edges_[k];
      double w = weights[k];
      if (w <= 0.0) continue;
      Vec6 r = edge_residual(k);
      Eigen::Matrix<double, 6, 6> Ji, Jj;
      bool fi = index.count(e.from), fj = index.count(e.to);
      if (fi) edge_jacobian(k, e.from, &Ji);
      if (fj) edge_jacobian(k, e.to, &Jj);
      if (fi) {
        int a = index[e.from] * 6;
        Mat6 block = w * Ji.transpose() * Ji;
        for (int i = 0; i < 6; ++i)
          for (int j = 0; j < 6; ++j) triplets.emplace_back(a + i, a + j, block(i, j));
        g.segment<6>(a) += w * Ji.transpose() * r;
      }
      if (fj) {
        int b = index[e.to] * 6;
        Mat6 block = w * Jj.transpose() * Jj;
        for (int i = 0; i < 6; ++i)
          for (int j = 0; j < 6; ++j) triplets.emplace_back(b + i, b + j, block(i, j));
        g.segment<6>(b) += w * Jj.transpose() * r;
      }
      if (fi && fj) {
        int a = index[e.from] * 6, b = index[e.to] * 6;
        Mat6 block = w * Ji.transpose() * Jj;
        for (int i = 0; i < 6; ++i)
          for (int j = 0; j < 6; ++j) {
            triplets.emplace_back(a + i, b + j, block(i, j));
            triplets.emplace_back(b + j, a + i, block(i, j));
          }
      }
    }

    Eigen::SparseMatrix<double> H(6 * n_free, 6 * n_free);
    H.setFromTriplets(triplets.begin(), triplets.end());
    Eigen::VectorXd diag(6 * n_free);
    for (int i = 0; i < 6 * n_free; ++i) diag(i) = std::max(H.coeff(i, i), 1e-12);

    bool stepped = false;
    for (int attempt = 0; attempt < 10 && !stepped; ++attempt) {
      Eigen::SparseMatrix<double> A = H;
      for (int i = 0; i < 6 * n_free; ++i) A.coeffRef(i, i) += lambda * diag(i);
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
      if (solver.info() != Eigen::Success) {
        lambda *= params.damping_up;
        continue;
      }
      Eigen::VectorXd delta = solver.solve(-g);

      std::map<int, TransformSE3> backup = nodes_;
      for (const auto& [id, idx] : index) {
        Twist6 d = Twist6::from_vector(delta.segment<6>(idx * 6));
        nodes_[id] = se3_exp(d) * nodes_[id];
      }
      double err = total_error(weights);
      if (err <= prev_error) {
        lambda = std::max(lambda / params.damping_down, 1e-12);
        stepped = true;
        report.iterations = iter + 1;
        double rel = (prev_error - err) / std::max(prev_error, 1e-300);
        prev_error = err;
        if (rel < params.rel_decrease_tol) {
          report.final_error = err;
          report.edge_residuals.clear();
          for (size_t k = 0; k < edges_.size(); ++k)
            report.edge_residuals.push_back(edge_residual(k).norm());
          return report;
        }
      } else {
        nodes_ = std::move(backup);
        lambda *= params.damping_up;
      }
    }
    if (!stepped) break;  // stuck: damping exhausted
  }

  report.final_error = prev_error;
  for (size_t k = 0; k < edges_.size(); ++k)
    report.edge_residuals.push_back(edge_residual(k).norm());
  return report;
}

SolveReport PoseGraph::optimize_lm(const LmParams& params) {
  std::vector<double> w(edges_.size(), 1.0);
  return optimize_weighted(w, params);
}

SolveReport PoseGraph::optimize_gnc(const GncParams& params) {
  std::vector<double> w(edges_.size(), 1.0);
  SolveReport report = optimize_weighted(w, params.lm);

  double max_r2 = 0.0;
  bool any_loop = false;
  for (size_t k = 0; k < edges_.size(); ++k) {
    if (edges_[k].source != EdgeSource::Loop) continue;
    any_loop = true;
    max_r2 = std::max(max_r2, report.edge_residuals[k] * report.edge_residuals[k]);
  }
  if (!any_loop) return report;

  double c2 = params.inlier_cost_sq;
  double mu = std::max(1.0, 2.0 * max_r2 / c2);
  for (int outer = 0; outer < params.max_outer_iterations; ++outer) {
    // Geman-McClure surrogate weights; tracking edges stay at 1
    for (size_t k = 0; k < edges_.size(); ++k) {
      if (edges_[k].source != EdgeSource::Loop) continue;
      double r2 = report.edge_residuals[k] * report.edge_residuals[k];
      double t = mu * c2 / (r2 + mu * c2);
      w[k] = t * t;
    }
    report = optimize_weighted(w, params.lm);
    if (mu <= 1.0) break;
    mu = std::max(1.0, mu / params.mu_divisor);
  }

  // Harden the weights and re-solve: accepted edges count fully, rejected
  // ones not at all. Without this, surviving loops stay mildly down-weighted
  // by the Geman-McClure surrogate even when they are perfect.
  std::vector<size_t> rejected;
  for (size_t k = 0; k < edges_.size(); ++k) {
    if (edges_[k].source == EdgeSource::Loop && w[k] < params.reject_weight) {
      rejected.push_back(k);
      w[k] = 0.0;
    } else {
      w[k] = 1.0;
    }
  }
  report = optimize_weighted(w, params.lm);
  report.rejected_edges = std::move(rejected);
  return report;
}

// --- text io ---------------------------------------------------------------

namespace {

void write_pose(std::ostream& os, const TransformSE3& T) {
  Eigen::Quaterniond q(T.rotation);
  if (q.w() < 0) q.coeffs() *= -1.0;
  os << T.translation.x() << ' ' << T.translation.y() << ' ' << T.translation.z()
     << ' ' << q.x() << ' ' << q.y() << ' ' << q.z() << ' ' << q.w();
}

TransformSE3 read_pose(std::istream& is) {
  double tx, ty, tz, qx, qy, qz, qw;
  is >> tx >> ty >> tz >> qx >> qy >> qz >> qw;
  TransformSE3 T;
  T.translation = Vec3(tx, ty, tz);
  T.rotation = Eigen::Quaterniond(qw, qx, qy, qz).normalized().toRotationMatrix();
  return T;
}

}  // namespace

void PoseGraph::save(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f.precision(17);
  for (const auto& [id, T] : nodes_) {
    f << "VERTEX " << id << ' ';
    write_pose(f, T);
    f << '\n';
  }
  for (const auto& e : edges_) {
    f << "EDGE " << e.from << ' ' << e.to << ' ';
    write_pose(f, e.estimate);
    f << (e.source == EdgeSource::Loop ? " LOOP" : " TRACKING") << '\n';
  }
}

PoseGraph PoseGraph::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  PoseGraph g;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream is(line);
    std::string tag;
    is >> tag;
    if (tag == "VERTEX") {
      int id;
      is >> id;
      g.add_node(id, read_pose(is));
    } else if (tag == "EDGE") {
      PoseGraphEdge e;
      is >> e.from >> e.to;
      e.estimate = read_pose(is);
      std::string src;
      if (is >> src && src == "LOOP") e.source = EdgeSource::Loop;
      g.add_edge(e);
    }
  }
  return g;
}

}  // namespace gelslam
