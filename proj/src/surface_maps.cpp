#include "gelslam/surface_maps.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>

namespace gelslam {

namespace {

std::mutex g_fftw_plan_mutex;  // FFTW planning is not thread-safe

// Central-difference divergence of (gu, gv); clamped borders.
ImageF divergence(const GradientMap& g) {
  int W = g.gu.width(), H = g.gu.height();
  ImageF div(W, H, 0.0);
  for (int v = 0; v < H; ++v) {
    for (int u = 0; u < W; ++u) {
      int up = std::min(u + 1, W - 1), um = std::max(u - 1, 0);
      int vp = std::min(v + 1, H - 1), vm = std::max(v - 1, 0);
      double du = (g.gu.at(up, v) - g.gu.at(um, v)) / double(up - um);
      double dv = (g.gv.at(u, vp) - g.gv.at(u, vm)) / double(vp - vm);
      div.at(u, v) = du + dv;
    }
  }
  return div;
}

}  // namespace

HeightMap integrate_height(const GradientMap& g, const ContactMask& /*mask*/) {
  int W = g.gu.width(), H = g.gu.height();
  HeightMap out(W, H, 0.0);
  int nu = W - 2, nv = H - 2;  // interior size; border held at zero
  if (nu <= 0 || nv <= 0) return out;

  ImageF f = divergence(g);
  std::vector<double> buf(size_t(nu) * nv);
  for (int v = 0; v < nv; ++v)
    for (int u = 0; u < nu; ++u) buf[size_t(v) * nu + u] = f.at(u + 1, v + 1);

  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(g_fftw_plan_mutex);
    plan = fftw_plan_r2r_2d(nv, nu, buf.data(), buf.data(), FFTW_RODFT00,
                            FFTW_RODFT00, FFTW_ESTIMATE);
  }
  fftw_execute(plan);

  // Divide by the 5-point Laplacian eigenvalues, then inverse DST.
  double norm = 4.0 * (nu + 1) * (nv + 1);
  for (int v = 0; v < nv; ++v) {
    double lv = 2.0 * std::cos(M_PI * (v + 1) / (nv + 1)) - 2.0;
    for (int u = 0; u < nu; ++u) {
      double lu = 2.0 * std::cos(M_PI * (u + 1) / (nu + 1)) - 2.0;
      buf[size_t(v) * nu + u] /= (lu + lv) * norm;
    }
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(g_fftw_plan_mutex);
    fftw_destroy_plan(plan);
  }

  for (int v = 0; v < nv; ++v)
    for (int u = 0; u < nu; ++u) out.at(u + 1, v + 1) = buf[size_t(v) * nu + u];
  return out;
}

CurvatureMap compute_curvature(const GradientMap& g,
                               const SurfaceMapParams& params) {
  ImageF div = divergence(g);
  for (double& x : div.data()) x = -x;  // convex indentations positive
  return gaussian_blur(div, 7, params.curvature_blur_sigma);
}

ContactMask compute_contact_mask(const HeightMap& h, const ImageF* rgb_delta,
                                 const SurfaceMapParams& params) {
  int W = h.width(), H = h.height();
  ContactMask mask(W, H, 0);
  for (int v = 0; v < H; ++v) {
    for (int u = 0; u < W; ++u) {
      bool c = h.at(u, v) > params.height_thresh_px;
      if (c && rgb_delta) c = rgb_delta->at(u, v) > params.rgb_delta_thresh;
      mask.at(u, v) = c ? 1 : 0;
    }
  }
  return morph_open3(mask);
}

NormalMap normals_from_gradients(const GradientMap& g) {
  int W = g.gu.width(), H = g.gu.height();
  NormalMap n(W, H, Vec3(0, 0, -1));
  for (int v = 0; v < H; ++v) {
    for (int u = 0; u < W; ++u) {
      Vec3 raw(g.gu.at(u, v), g.gv.at(u, v), -1.0);
      n.at(u, v) = raw.normalized();
    }
  }
  return n;
}

GradientMap gradients_from_normals(const NormalMap& n) {
  int W = n.width(), H = n.height();
  GradientMap g{ImageF(W, H, 0.0), ImageF(W, H, 0.0)};
  for (int v = 0; v < H; ++v) {
    for (int u = 0; u < W; ++u) {
      const Vec3& p = n.at(u, v);
      if (std::abs(p.z()) < 1e-3) throw DegenerateNormal{};
      g.gu.at(u, v) = -p.x() / p.z();
      g.gv.at(u, v) = -p.y() / p.z();
    }
  }
  return g;
}

Frame frame_from_normals(int id, double timestamp, const NormalMap& normal,
                         const SurfaceMapParams& params) {
  Frame f;
  f.id = id;
  f.timestamp = timestamp;
  f.normal = normal;
  GradientMap g = gradients_from_normals(normal);
  f.height = integrate_height(g, ContactMask{});
  f.curvature = compute_curvature(g, params);
  f.mask = compute_contact_mask(f.height, nullptr, params);
  return f;
}

}  // namespace gelslam
