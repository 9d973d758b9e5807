#include "gelslam/calibration.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

namespace gelslam {

namespace {
const int kDims[] = {CalibrationNet::kInputDim, CalibrationNet::kHiddenDim,
                     CalibrationNet::kHiddenDim, CalibrationNet::kHiddenDim,
                     CalibrationNet::kOutputDim};
}

CalibrationNet::CalibrationNet() : CalibrationNet(42) {}

CalibrationNet::CalibrationNet(uint64_t init_seed) {
  std::mt19937_64 rng(init_seed);
  for (int l = 0; l < kNumLayers; ++l) {
    int rows = kDims[l + 1], cols = kDims[l];
    double bound = std::sqrt(6.0 / (rows + cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Eigen::MatrixXd w(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) w(i, j) = dist(rng);
    w_.push_back(std::move(w));
    b_.push_back(Eigen::VectorXd::Zero(rows));
  }
}

Eigen::Vector2d CalibrationNet::forward(const Eigen::Matrix<double, 5, 1>& x) const {
  Eigen::VectorXd a = x;
  for (int l = 0; l < kNumLayers; ++l) {
    a = (w_[l] * a + b_[l]).eval();
    if (l + 1 < kNumLayers) a = a.array().tanh().matrix();
  }
  return a;
}

Eigen::Matrix2Xd CalibrationNet::forward_batch(
    const Eigen::Matrix<double, 5, Eigen::Dynamic>& x) const {
  Eigen::MatrixXd a = x;
  for (int l = 0; l < kNumLayers; ++l) {
    a = ((w_[l] * a).colwise() + b_[l]).eval();
    if (l + 1 < kNumLayers) a = a.array().tanh().matrix();
  }
  return a;
}

double CalibrationNet::loss(const Eigen::Matrix<double, 5, 1>& x,
                            const Eigen::Vector2d& y) const {
  return 0.5 * (forward(x) - y).squaredNorm();
}

Eigen::VectorXd CalibrationNet::loss_gradient(const Eigen::Matrix<double, 5, 1>& x,
                                              const Eigen::Vector2d& y) const {
  std::vector<Eigen::VectorXd> acts;  // post-activation per layer, acts[0] = input
  acts.emplace_back(x);
  for (int l = 0; l < kNumLayers; ++l) {
    Eigen::VectorXd z = w_[l] * acts.back() + b_[l];
    if (l + 1 < kNumLayers) z = z.array().tanh().matrix();
    acts.push_back(std::move(z));
  }
  Eigen::VectorXd grad(n_params());
  Eigen::VectorXd delta = acts.back() - y;  // linear output
  int offset = grad.size();
  for (int l = kNumLayers - 1; l >= 0; --l) {
    Eigen::MatrixXd dw = delta * acts[l].transpose();
    offset -= int(w_[l].size()) + int(b_[l].size());
    int p = offset;
    for (int j = 0; j < dw.cols(); ++j)
      for (int i = 0; i < dw.rows(); ++i) grad(p++) = dw(i, j);
    for (int i = 0; i < delta.size(); ++i) grad(p++) = delta(i);
    if (l > 0) {
      Eigen::VectorXd back = w_[l].transpose() * delta;
      // tanh'(z) = 1 - tanh(z)^2, and acts[l] stores tanh(z)
      delta = back.array() * (1.0 - acts[l].array().square());
    }
  }
  return grad;
}

int CalibrationNet::n_params() const {
  int n = 0;
  for (int l = 0; l < kNumLayers; ++l) n += int(w_[l].size()) + int(b_[l].size());
  return n;
}

Eigen::VectorXd CalibrationNet::params() const {
  Eigen::VectorXd p(n_params());
  int k = 0;
  for (int l = 0; l < kNumLayers; ++l) {
    for (int j = 0; j < w_[l].cols(); ++j)
      for (int i = 0; i < w_[l].rows(); ++i) p(k++) = w_[l](i, j);
    for (int i = 0; i < b_[l].size(); ++i) p(k++) = b_[l](i);
  }
  return p;
}

void CalibrationNet::set_params(const Eigen::VectorXd& p) {
  int k = 0;
  for (int l = 0; l < kNumLayers; ++l) {
    for (int j = 0; j < w_[l].cols(); ++j)
      for (int i = 0; i < w_[l].rows(); ++i) w_[l](i, j) = p(k++);
    for (int i = 0; i < b_[l].size(); ++i) b_[l](i) = p(k++);
  }
}

void CalibrationNet::save(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  const char magic[4] = {'G', 'N', 'E', 'T'};
  f.write(magic, 4);
  uint32_t n_layers = kNumLayers;
  f.write(reinterpret_cast<const char*>(&n_layers), 4);
  for (int l = 0; l <= kNumLayers; ++l) {
    uint32_t d = uint32_t(kDims[l]);
    f.write(reinterpret_cast<const char*>(&d), 4);
  }
  for (int l = 0; l < kNumLayers; ++l) {
    for (int j = 0; j < w_[l].cols(); ++j)
      for (int i = 0; i < w_[l].rows(); ++i) {
        double v = w_[l](i, j);
        f.write(reinterpret_cast<const char*>(&v), 8);
      }
    for (int i = 0; i < b_[l].size(); ++i) {
      double v = b_[l](i);
      f.write(reinterpret_cast<const char*>(&v), 8);
    }
  }
}

CalibrationNet CalibrationNet::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  char magic[4];
  f.read(magic, 4);
  if (std::string(magic, 4) != "GNET") throw std::runtime_error("bad net file magic");
  uint32_t n_layers = 0;
  f.read(reinterpret_cast<char*>(&n_layers), 4);
  if (n_layers != kNumLayers) throw std::runtime_error("unexpected layer count");
  for (int l = 0; l <= kNumLayers; ++l) {
    uint32_t d = 0;
    f.read(reinterpret_cast<char*>(&d), 4);
    if (int(d) != kDims[l]) throw std::runtime_error("unexpected layer size");
  }
  CalibrationNet net;
  for (int l = 0; l < kNumLayers; ++l) {
    for (int j = 0; j < net.w_[l].cols(); ++j)
      for (int i = 0; i < net.w_[l].rows(); ++i) {
        double v;
        f.read(reinterpret_cast<char*>(&v), 8);
        net.w_[l](i, j) = v;
      }
    for (int i = 0; i < net.b_[l].size(); ++i) {
      double v;
      f.read(reinterpret_cast<char*>(&v), 8);
      net.b_[l](i) = v;
    }
  }
  if (!f) throw std::runtime_error("truncated net file");
  return net;
}

double gradient_angular_error_deg(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  Eigen::Vector3d na(a.x(), a.y(), -1.0), nb(b.x(), b.y(), -1.0);
  double c = na.normalized().dot(nb.normalized());
  return std::acos(std::clamp(c, -1.0, 1.0)) * 180.0 / M_PI;
}

TrainReport train_calibration(CalibrationNet& net,
                              const std::vector<CalibrationSample>& dataset,
                              const TrainParams& params) {
  if (dataset.empty()) throw std::runtime_error("empty calibration dataset");
  std::mt19937_64 rng(params.seed);
  std::vector<size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  size_t n_holdout = size_t(double(dataset.size()) * params.holdout_fraction);
  if (n_holdout >= dataset.size()) n_holdout = 0;
  std::vector<size_t> train(order.begin(), order.end() - n_holdout);
  std::vector<size_t> holdout(order.end() - n_holdout, order.end());

  Eigen::VectorXd velocity = Eigen::VectorXd::Zero(net.n_params());
  TrainReport report;
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    std::shuffle(train.begin(), train.end(), rng);
    double epoch_loss = 0.0;
    for (size_t start = 0; start < train.size(); start += params.batch_size) {
      size_t end = std::min(start + params.batch_size, train.size());
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(net.n_params());
      for (size_t k = start; k < end; ++k) {
        const auto& s = dataset[train[k]];
        grad += net.loss_gradient(s.input, s.target);
        epoch_loss += net.loss(s.input, s.target);
      }
      grad /= double(end - start);
      velocity = params.momentum * velocity - params.learning_rate * grad;
      net.set_params(net.params() + velocity);
    }
    epoch_loss /= double(train.size());
    if (!std::isfinite(epoch_loss)) throw TrainingDiverged{};
    report.train_mse = 2.0 * epoch_loss;  // loss is 0.5*||.||^2
    report.epochs_run = epoch + 1;
  }

  if (!holdout.empty()) {
    double mse = 0.0, ang = 0.0;
    for (size_t idx : holdout) {
      const auto& s = dataset[idx];
      Eigen::Vector2d pred = net.forward(s.input);
      mse += (pred - s.target).squaredNorm();
      ang += gradient_angular_error_deg(pred, s.target);
    }
    report.holdout_mse = mse / double(holdout.size());
    report.holdout_mean_angular_error_deg = ang / double(holdout.size());
  }
  return report;
}

}  // namespace gelslam
