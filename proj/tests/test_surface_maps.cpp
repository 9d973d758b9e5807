#include <doctest.h>

#include <cmath>
#include <random>

#include "gelslam/surface_maps.hpp"

using namespace gelslam;

namespace {

constexpr int W = 128, H = 96;

// Analytic spherical cap: indentation depth at radius r px from the center,
// for a sphere of radius R px pressed to depth d px. Positive inside contact.
double cap_height(double r, double R, double d) {
  double h = std::sqrt(std::max(0.0, R * R - r * r)) - (R - d);
  return std::max(0.0, h);
}

// Analytic gradients of the cap height (chain rule on sqrt(R^2 - r^2)).
GradientMap cap_gradients(double R, double d, double cu, double cv) {
  GradientMap g{ImageF(W, H, 0.0), ImageF(W, H, 0.0)};
  double a2 = R * R - (R - d) * (R - d);  // contact radius squared
  for (int v = 0; v < H; ++v)
    for (int u = 0; u < W; ++u) {
      double du = u - cu, dv = v - cv;
      double r2 = du * du + dv * dv;
      if (r2 >= a2) continue;
      double s = std::sqrt(R * R - r2);
      g.gu.at(u, v) = -du / s;
      g.gv.at(u, v) = -dv / s;
    }
  return g;
}

// Random smooth gradient field: low-order sine/cosine series, zero near the
// border so the Dirichlet assumption holds.
GradientMap random_smooth_gradients(uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp(-0.5, 0.5);
  GradientMap g{ImageF(W, H, 0.0), ImageF(W, H, 0.0)};
  for (int m = 1; m <= 3; ++m)
    for (int n = 1; n <= 3; ++n) {
      double a = amp(rng), b = amp(rng);
      for (int v = 0; v < H; ++v)
        for (int u = 0; u < W; ++u) {
          double su = std::sin(M_PI * m * (u + 1.0) / (W + 1.0));
          double sv = std::sin(M_PI * n * (v + 1.0) / (H + 1.0));
          g.gu.at(u, v) += a * su * sv;
          g.gv.at(u, v) += b * su * sv;
        }
    }
  return g;
}

// Central-difference divergence, matching the solver's discretization.
ImageF divergence(const GradientMap& g) {
  ImageF d(W, H, 0.0);
  for (int v = 1; v < H - 1; ++v)
    for (int u = 1; u < W - 1; ++u)
      d.at(u, v) = 0.5 * (g.gu.at(u + 1, v) - g.gu.at(u - 1, v)) +
                   0.5 * (g.gv.at(u, v + 1) - g.gv.at(u, v - 1));
  return d;
}

// 5-point discrete Laplacian with zero Dirichlet outside the image.
double laplacian_at(const ImageF& h, int u, int v) {
  auto val = [&](int x, int y) { return h.inside(x, y) ? h.at(x, y) : 0.0; };
  return val(u + 1, v) + val(u - 1, v) + val(u, v + 1) + val(u, v - 1) -
         4.0 * val(u, v);
}

}  // namespace

TEST_CASE("integrate_height: zero gradients give zero height") {
  GradientMap g{ImageF(W, H, 0.0), ImageF(W, H, 0.0)};
  HeightMap h = integrate_height(g, ContactMask(W, H, 1));
  for (double x : h.data()) CHECK(std::abs(x) < 1e-9);
}

TEST_CASE("integrate_height: analytic spherical cap recovered within 0.1 px") {
  double R = 50.0, d = 8.0, cu = (W - 1) * 0.5, cv = (H - 1) * 0.5;
  GradientMap g = cap_gradients(R, d, cu, cv);
  HeightMap h = integrate_height(g, ContactMask(W, H, 1));
  double a = std::sqrt(R * R - (R - d) * (R - d));
  double max_err = 0.0;
  for (int v = 0; v < H; ++v)
    for (int u = 0; u < W; ++u) {
      double r = std::hypot(u - cu, v - cv);
      if (r > a - 2.0) continue;  // cap interior
      max_err = std::max(max_err, std::abs(h.at(u, v) - cap_height(r, R, d)));
    }
  CHECK(max_err < 0.1);
}

TEST_CASE("integrate_height: Poisson residual < 1e-6 on random smooth fields") {
  for (uint64_t seed = 0; seed < 50; ++seed) {
    GradientMap g = random_smooth_gradients(seed);
    HeightMap h = integrate_height(g, ContactMask(W, H, 1));
    ImageF div = divergence(g);
    double worst = 0.0;
    for (int v = 1; v < H - 1; ++v)
      for (int u = 1; u < W - 1; ++u)
        worst = std::max(worst, std::abs(laplacian_at(h, u, v) - div.at(u, v)));
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("compute_curvature: planar patch is zero") {
  GradientMap g{ImageF(W, H, 0.3), ImageF(W, H, -0.7)};
  CurvatureMap c = compute_curvature(g);
  for (double x : c.data()) CHECK(std::abs(x) < 1e-9);
}

TEST_CASE("compute_curvature: spherical cap interior is ~2/R, positive") {
  double R = 50.0, d = 8.0, cu = (W - 1) * 0.5, cv = (H - 1) * 0.5;
  CurvatureMap c = compute_curvature(cap_gradients(R, d, cu, cv));
  double a = std::sqrt(R * R - (R - d) * (R - d));
  for (int v = 0; v < H; ++v)
    for (int u = 0; u < W; ++u) {
      double r = std::hypot(u - cu, v - cv);
      if (r > a * 0.5) continue;  // away from the contact boundary
      CHECK(c.at(u, v) > 0.0);
      CHECK(c.at(u, v) == doctest::Approx(2.0 / R).epsilon(0.15));
    }
}

TEST_CASE("compute_curvature: 90-degree rotation equivariance") {
  // Square grid; rotating the gradient field by 90 degrees rotates the
  // curvature map exactly (the operator has no preferred axis).
  const int N = 96;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> amp(-0.4, 0.4);
  ImageF height(N, N, 0.0);
  for (int m = 1; m <= 4; ++m)
    for (int n = 1; n <= 4; ++n) {
      double a = amp(rng);
      for (int v = 0; v < N; ++v)
        for (int u = 0; u < N; ++u)
          height.at(u, v) +=
              a * std::sin(M_PI * m * (u + 1.0) / (N + 1.0)) *
              std::sin(M_PI * n * (v + 1.0) / (N + 1.0));
    }
  auto grads = [&](const ImageF& h) {
    GradientMap g{ImageF(N, N, 0.0), ImageF(N, N, 0.0)};
    for (int v = 1; v < N - 1; ++v)
      for (int u = 1; u < N - 1; ++u) {
        g.gu.at(u, v) = 0.5 * (h.at(u + 1, v) - h.at(u - 1, v));
        g.gv.at(u, v) = 0.5 * (h.at(u, v + 1) - h.at(u, v - 1));
      }
    return g;
  };
  // rotate height 90 deg CCW: h'(u, v) = h(N-1-v, u)
  ImageF rot(N, N, 0.0);
  for (int v = 0; v < N; ++v)
    for (int u = 0; u < N; ++u) rot.at(u, v) = height.at(N - 1 - v, u);
  CurvatureMap c = compute_curvature(grads(height));
  CurvatureMap cr = compute_curvature(grads(rot));
  for (int v = 4; v < N - 4; ++v)
    for (int u = 4; u < N - 4; ++u)
      CHECK(cr.at(u, v) == doctest::Approx(c.at(N - 1 - v, u)).epsilon(1e-9).scale(1.0));
}

TEST_CASE("compute_curvature: integer-pixel translation invariance") {
  double R = 50.0, d = 8.0;
  CurvatureMap c0 = compute_curvature(cap_gradients(R, d, 50.0, 40.0));
  CurvatureMap c1 = compute_curvature(cap_gradients(R, d, 57.0, 45.0));
  for (int v = 10; v < H - 10; ++v)
    for (int u = 10; u < W - 10; ++u) {
      if (!c1.inside(u + 7, v + 5)) continue;
      CHECK(c1.at(u + 7, v + 5) == doctest::Approx(c0.at(u, v)).epsilon(1e-9).scale(1.0));
    }
}

TEST_CASE("compute_contact_mask basics") {
  HeightMap zero(W, H, 0.0);
  CHECK(count_nonzero(compute_contact_mask(zero)) == 0);

  double R = 50.0, d = 8.0, cu = (W - 1) * 0.5, cv = (H - 1) * 0.5;
  GradientMap g = cap_gradients(R, d, cu, cv);
  HeightMap h = integrate_height(g, ContactMask(W, H, 1));
  ContactMask m = compute_contact_mask(h);
  double a = std::sqrt(R * R - (R - d) * (R - d));
  // disc radius from mask area
  double r_measured = std::sqrt(count_nonzero(m) / M_PI);
  CHECK(std::abs(r_measured - a) < 2.0);

  // monotonicity: raising the threshold never adds pixels
  SurfaceMapParams strict;
  strict.height_thresh_px = 1.5;
  ContactMask m2 = compute_contact_mask(h, nullptr, strict);
  for (int i = 0; i < W * H; ++i) CHECK(m2.data()[i] <= m.data()[i]);
}

TEST_CASE("normals_from_gradients closed forms and unit norm") {
  GradientMap g{ImageF(4, 3, 0.0), ImageF(4, 3, 0.0)};
  g.gu.at(1, 1) = 1.0;
  NormalMap n = normals_from_gradients(g);
  CHECK((n.at(0, 0) - Vec3(0, 0, -1)).norm() < 1e-12);
  Vec3 expect = Vec3(1, 0, -1) / std::sqrt(2.0);
  CHECK((n.at(1, 1) - expect).norm() < 1e-12);
  for (const Vec3& v : n.data()) {
    CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(v.z() < 0.0);
  }
}

TEST_CASE("gradients_from_normals round trip and degenerate guard") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  GradientMap g{ImageF(8, 6, 0.0), ImageF(8, 6, 0.0)};
  for (int i = 0; i < 48; ++i) {
    g.gu.data()[i] = u(rng);
    g.gv.data()[i] = u(rng);
  }
  NormalMap n = normals_from_gradients(g);
  GradientMap back = gradients_from_normals(n);
  for (int i = 0; i < 48; ++i) {
    CHECK(back.gu.data()[i] == doctest::Approx(g.gu.data()[i]).epsilon(1e-9));
    CHECK(back.gv.data()[i] == doctest::Approx(g.gv.data()[i]).epsilon(1e-9));
  }

  NormalMap bad(2, 2, Vec3(0, 0, -1));
  bad.at(0, 0) = Vec3(1.0, 0.0, -1e-4).normalized();
  CHECK_THROWS_AS(gradients_from_normals(bad), DegenerateNormal);
}

TEST_CASE("frame_from_normals: flat map gives empty mask, zero curvature") {
  NormalMap flat(W, H, Vec3(0, 0, -1));
  Frame f = frame_from_normals(7, 1.25, flat);
  CHECK(f.id == 7);
  CHECK(f.timestamp == 1.25);
  CHECK(count_nonzero(f.mask) == 0);
  for (double c : f.curvature.data()) CHECK(std::abs(c) < 1e-9);
}

TEST_CASE("frame_from_normals: analytic cap heights within 0.15 px RMS") {
  double R = 50.0, d = 8.0, cu = (W - 1) * 0.5, cv = (H - 1) * 0.5;
  NormalMap n = normals_from_gradients(cap_gradients(R, d, cu, cv));
  Frame f = frame_from_normals(0, 0.0, n);
  double sq = 0.0;
  int count = 0;
  for (int v = 0; v < H; ++v)
    for (int u = 0; u < W; ++u) {
      if (!f.mask.at(u, v)) continue;
      double r = std::hypot(u - cu, v - cv);
      double e = f.height.at(u, v) - cap_height(r, R, d);
      sq += e * e;
      ++count;
    }
  REQUIRE(count > 500);
  CHECK(std::sqrt(sq / count) < 0.15);

  // normals round trip through the stored frame
  GradientMap g2 = gradients_from_normals(f.normal);
  NormalMap n2 = normals_from_gradients(g2);
  for (size_t i = 0; i < n.size(); ++i)
    CHECK((n2.data()[i] - f.normal.data()[i]).norm() < 1e-9);
}
