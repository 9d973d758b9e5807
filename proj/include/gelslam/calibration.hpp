#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace gelslam {

struct TrainingDiverged : std::runtime_error {
  TrainingDiverged() : std::runtime_error("calibration training diverged") {}
};

/// MLP mapping (R, G, B, u, v) in [0,1] to surface gradients (g_u, g_v).
/// Layers 5-32-32-32-2, tanh hidden activations, linear output.
class CalibrationNet {
 public:
  static constexpr int kInputDim = 5;
  static constexpr int kHiddenDim = 32;
  static constexpr int kOutputDim = 2;
  static constexpr int kNumLayers = 4;  // weight matrices

  CalibrationNet();
  explicit CalibrationNet(uint64_t init_seed);

  Eigen::Vector2d forward(const Eigen::Matrix<double, 5, 1>& x) const;
  /// Column-wise batch evaluation.
  Eigen::Matrix2Xd forward_batch(const Eigen::Matrix<double, 5, Eigen::Dynamic>& x) const;

  /// Gradient of 0.5*||forward(x) - y||^2 w.r.t. all parameters, flattened
  /// in the same order as params().
  Eigen::VectorXd loss_gradient(const Eigen::Matrix<double, 5, 1>& x,
                                const Eigen::Vector2d& y) const;
  double loss(const Eigen::Matrix<double, 5, 1>& x, const Eigen::Vector2d& y) const;

  Eigen::VectorXd params() const;
  void set_params(const Eigen::VectorXd& p);
  int n_params() const;

  void save(const std::string& path) const;
  static CalibrationNet load(const std::string& path);

  const std::vector<Eigen::MatrixXd>& weights() const { return w_; }
  const std::vector<Eigen::VectorXd>& biases() const { return b_; }

 private:
  std::vector<Eigen::MatrixXd> w_;
  std::vector<Eigen::VectorXd> b_;
};

struct CalibrationSample {
  Eigen::Matrix<double, 5, 1> input;
  Eigen::Vector2d target;
};

struct TrainParams {
  int epochs = 200;
  int batch_size = 1024;
  double learning_rate = 1e-2;
  double momentum = 0.9;
  double holdout_fraction = 0.1;
  uint64_t seed = 7;
};

struct TrainReport {
  double train_mse = 0.0;
  double holdout_mse = 0.0;
  double holdout_mean_angular_error_deg = 0.0;
  int epochs_run = 0;
};

/// Mini-batch SGD with momentum; deterministic under a fixed seed.
/// Throws TrainingDiverged if the loss becomes non-finite.
TrainReport train_calibration(CalibrationNet& net,
                              const std::vector<CalibrationSample>& dataset,
                              const TrainParams& params = {});

/// Angular error in degrees between the normals implied by two gradients.
double gradient_angular_error_deg(const Eigen::Vector2d& a, const Eigen::Vector2d& b);

}  // namespace gelslam
