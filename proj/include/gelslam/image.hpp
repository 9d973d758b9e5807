#pragma once

#include <Eigen/Core>
#include <cassert>
#include <cstdint>
#include <vector>

namespace gelslam {

/// Row-major dense pixel grid. (u, v) = (column, row).
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, T fill = T{})
      : width_(width), height_(height), data_(size_t(width) * height, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }
  size_t size() const { return data_.size(); }

  T& at(int u, int v) { return data_[size_t(v) * width_ + u]; }
  const T& at(int u, int v) const { return data_[size_t(v) * width_ + u]; }

  bool inside(int u, int v) const {
    return u >= 0 && u < width_ && v >= 0 && v < height_;
  }
  bool inside(double u, double v) const {
    return u >= 0.0 && u <= width_ - 1.0 && v >= 0.0 && v <= height_ - 1.0;
  }

  /// Bilinear sample; caller guarantees inside(u, v).
  T sample(double u, double v) const {
    int u0 = int(u), v0 = int(v);
    if (u0 >= width_ - 1) u0 = width_ - 2;
    if (v0 >= height_ - 1) v0 = height_ - 2;
    if (u0 < 0) u0 = 0;
    if (v0 < 0) v0 = 0;
    double fu = u - u0, fv = v - v0;
    const T& a = at(u0, v0);
    const T& b = at(u0 + 1, v0);
    const T& c = at(u0, v0 + 1);
    const T& d = at(u0 + 1, v0 + 1);
    return a * ((1 - fu) * (1 - fv)) + b * (fu * (1 - fv)) + c * ((1 - fu) * fv) +
           d * (fu * fv);
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool same_shape(int w, int h) const { return width_ == w && height_ == h; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using ImageF = Image<double>;
using ImageV3 = Image<Eigen::Vector3d>;
using MaskImage = Image<uint8_t>;

/// Separable Gaussian blur with an odd kernel of the given size.
ImageF gaussian_blur(const ImageF& in, int ksize, double sigma);

/// Morphological open (erode then dilate) with a 3x3 square element.
MaskImage morph_open3(const MaskImage& in);

/// Euclidean-ish distance (in px) from each true pixel to the nearest
/// false pixel or image border, via two-pass 3-4 chamfer transform.
ImageF distance_to_boundary(const MaskImage& mask);

int count_nonzero(const MaskImage& mask);

}  // namespace gelslam
