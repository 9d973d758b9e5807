#include "gelslam/image.hpp"

#include <algorithm>
#include <cmath>

namespace gelslam {

ImageF gaussian_blur(const ImageF& in, int ksize, double sigma) {
  assert(ksize % 2 == 1);
  int r = ksize / 2;
  std::vector<double> k(ksize);
  double sum = 0;
  for (int i = 0; i < ksize; ++i) {
    double x = i - r;
    k[i] = std::exp(-0.5 * x * x / (sigma * sigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;

  int W = in.width(), H = in.height();
  ImageF tmp(W, H), out(W, H);
  // horizontal, clamped borders
  for (int v = 0; v < H; ++v) {
    for (int u = 0; u < W; ++u) {
      double acc = 0;
      for (int i = -r; i <= r; ++i) {
        int uu = std::clamp(u + i, 0, W - 1);
        acc += k[i + r] * in.at(uu, v);
      }
      tmp.at(u, v) = acc;
    }
  }
  for (int v = 0; v < H; ++v) {
    for (int u = 0; u < W; ++u) {
      double acc = 0;
      for (int i = -r; i <= r; ++i) {
        int vv = std::clamp(v + i, 0, H - 1);
        acc += k[i + r] * tmp.at(u, vv);
      }
      out.at(u, v) = acc;
    }
  }
  return out;
}

MaskImage morph_open3(const MaskImage& in) {
  int W = in.width(), H = in.height();
  MaskImage eroded(W, H, 0), out(W, H, 0);
  for (int v = 0; v < H; ++v) {
    for (int u = 0; u < W; ++u) {
      bool all = true;
      for (int dv = -1; dv <= 1 && all; ++dv) {
        for (int du = -1; du <= 1 && all; ++du) {
          int uu = u + du, vv = v + dv;
          if (!in.inside(uu, vv) || !in.at(uu, vv)) all = false;
        }
      }
      eroded.at(u, v) = all ? 1 : 0;
    }
  }
  for (int v = 0; v < H; ++v) {
    for (int u = 0; u < W; ++u) {
      bool any = false;
      for (int dv = -1; dv <= 1 && !any; ++dv) {
        for (int du = -1; du <= 1 && !any; ++du) {
          int uu = u + du, vv = v + dv;
          if (eroded.inside(uu, vv) && eroded.at(uu, vv)) any = true;
        }
      }
      out.at(u, v) = any ? 1 : 0;
    }
  }
  return out;
}

ImageF distance_to_boundary(const MaskImage& mask) {
  int W = mask.width(), H = mask.height();
  const double INF = 1e18, D1 = 1.0, D2 = std::sqrt(2.0);
  ImageF d(W, H, 0.0);
  for (int v = 0; v < H; ++v)
    for (int u = 0; u < W; ++u) d.at(u, v) = mask.at(u, v) ? INF : 0.0;

  auto relax = [&](int u, int v, int du, int dv, double w) {
    int uu = u + du, vv = v + dv;
    double nb = d.inside(uu, vv) ? d.at(uu, vv) : 0.0;  // border counts as boundary
    if (nb + w < d.at(u, v)) d.at(u, v) = nb + w;
  };
  for (int v = 0; v < H; ++v) {
    for (int u = 0; u < W; ++u) {
      if (!mask.at(u, v)) continue;
      relax(u, v, -1, 0, D1);
      relax(u, v, 0, -1, D1);
      relax(u, v, -1, -1, D2);
      relax(u, v, 1, -1, D2);
    }
  }
  for (int v = H - 1; v >= 0; --v) {
    for (int u = W - 1; u >= 0; --u) {
      if (!mask.at(u, v)) continue;
      relax(u, v, 1, 0, D1);
      relax(u, v, 0, 1, D1);
      relax(u, v, 1, 1, D2);
      relax(u, v, -1, 1, D2);
    }
  }
  return d;
}

int count_nonzero(const MaskImage& mask) {
  int n = 0;
  for (uint8_t m : mask.data()) n += m ? 1 : 0;
  return n;
}

}  // namespace gelslam
