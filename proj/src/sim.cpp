#include "gelslam/sim.hpp"

#include <cmath>
#include <random>

namespace gelslam {

// --- objects ---------------------------------------------------------------

Vec3 SyntheticObject::sdf_gradient(const Vec3& p) const {
  const double h = 1e-4;
  Vec3 g;
  for (int i = 0; i < 3; ++i) {
    Vec3 d = Vec3::Zero();
    d[i] = h;
    g[i] = (sdf_(p + d) - sdf_(p - d)) / (2.0 * h);
  }
  return g;
}

void SyntheticObject::surface_point(const Vec3& dir, Vec3* point, Vec3* normal) const {
  Vec3 d = dir.normalized();
  double lo = 1e-3, hi = bound_radius_ * 1.5;
  // star-shaped about the origin: sdf < 0 near the center, > 0 outside
  for (int i = 0; i < 60; ++i) {
    double mid = 0.5 * (lo + hi);
    if (sdf_(mid * d) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  *point = 0.5 * (lo + hi) * d;
  *normal = sdf_gradient(*point).normalized();
}

SyntheticObject SyntheticObject::sphere(double radius_mm) {
  return SyntheticObject([radius_mm](const Vec3& p) { return p.norm() - radius_mm; },
                         radius_mm, "sphere");
}

SyntheticObject SyntheticObject::bumpy_sphere(double radius_mm, double amplitude_mm,
                                              double frequency) {
  // Aperiodic texture: a fixed bank of random-direction plane waves evaluated
  // on the sphere surface. A periodic lat/long pattern would make distant
  // patches indistinguishable and defeat loop-closure verification.
  constexpr int kWaves = 24;
  std::mt19937_64 rng(0x9e3779b97f4a7c15ull);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, 2.0 * M_PI);
  std::vector<Vec3> wavevec(kWaves);
  std::vector<double> phase(kWaves);
  for (int i = 0; i < kWaves; ++i) {
    Vec3 dir(gauss(rng), gauss(rng), gauss(rng));
    // spread spatial frequencies over [0.5, 1.0] * frequency cycles/mm
    double f = frequency * (0.5 + 0.5 * i / double(kWaves - 1));
    wavevec[i] = dir.normalized() * (2.0 * M_PI * f);
    phase[i] = uni(rng);
  }
  double norm = amplitude_mm / std::sqrt(0.5 * kWaves);  // unit RMS -> amplitude
  auto sdf = [=](const Vec3& p) {
    double r = p.norm();
    if (r < 1e-9) return -radius_mm;
    Vec3 s = (radius_mm / r) * p;  // project onto the base sphere
    double bump = 0.0;
    for (int i = 0; i < kWaves; ++i) bump += std::cos(wavevec[i].dot(s) + phase[i]);
    return r - (radius_mm + norm * bump);
  };
  return SyntheticObject(sdf, radius_mm + 4.0 * amplitude_mm, "bumpy_sphere");
}

SyntheticObject SyntheticObject::superellipsoid(double a_mm, double b_mm, double c_mm,
                                                double exponent) {
  double scale = std::min({a_mm, b_mm, c_mm});
  auto sdf = [=](const Vec3& p) {
    double f = std::pow(std::abs(p.x() / a_mm), exponent) +
               std::pow(std::abs(p.y() / b_mm), exponent) +
               std::pow(std::abs(p.z() / c_mm), exponent);
    return (std::pow(f, 1.0 / exponent) - 1.0) * scale;
  };
  return SyntheticObject(sdf, std::max({a_mm, b_mm, c_mm}) * 1.1, "superellipsoid");
}

SyntheticObject SyntheticObject::cube(double side_mm) {
  double h = side_mm * 0.5;
  auto sdf = [h](const Vec3& p) {
    Vec3 q = p.cwiseAbs() - Vec3(h, h, h);
    Vec3 qp = q.cwiseMax(0.0);
    return qp.norm() + std::min(q.maxCoeff(), 0.0);
  };
  return SyntheticObject(sdf, side_mm, "cube");
}

// --- photometric model -----------------------------------------------------

Vec3 PhotometricModel::light_dir(int channel) const {
  double az = channel * 2.0 * M_PI / 3.0;
  double el = elevation_deg * M_PI / 180.0;
  return {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
}

Vec3 PhotometricModel::shade(const Vec3& normal) const {
  Vec3 m = -normal.normalized();  // outward, m_z > 0
  Vec3 rgb;
  for (int c = 0; c < 3; ++c) {
    double d = std::max(0.0, m.dot(light_dir(c)));
    rgb[c] = std::clamp(ambient + (1.0 - ambient) * d, 0.0, 1.0);
  }
  return rgb;
}

Vec3 PhotometricModel::unshade(const Vec3& rgb) const {
  Mat3 L;
  Vec3 y;
  for (int c = 0; c < 3; ++c) {
    L.row(c) = light_dir(c).transpose();
    y[c] = (rgb[c] - ambient) / (1.0 - ambient);
  }
  Vec3 m = L.colPivHouseholderQr().solve(y);
  if (m.z() <= 1e-9) return Vec3(0, 0, -1);
  return -m.normalized();
}

// --- rendering -------------------------------------------------------------

namespace {

// Topmost surface crossing along -z above the pixel; returns false if the
// object never reaches above z_bot.
bool surface_height(const SyntheticObject& obj, const TransformSE3& pose, double x,
                    double y, double z_top, double z_bot, double* h_out) {
  double z = z_top;
  double z_prev = z_top;
  double s_prev = obj.sdf(pose.apply(Vec3(x, y, z)));
  if (s_prev <= 0.0) {  // already inside at the top of the probe range
    *h_out = z_top;
    return true;
  }
  while (z > z_bot) {
    double step = std::max(0.6 * s_prev, 0.02);
    z_prev = z;
    z -= step;
    double s = obj.sdf(pose.apply(Vec3(x, y, z)));
    if (s <= 0.0) {
      double lo = z, hi = z_prev;
      for (int i = 0; i < 40; ++i) {
        double mid = 0.5 * (lo + hi);
        if (obj.sdf(pose.apply(Vec3(x, y, mid))) <= 0.0)
          lo = mid;
        else
          hi = mid;
      }
      *h_out = 0.5 * (lo + hi);
      return true;
    }
    s_prev = s;
  }
  return false;
}

void add_normal_noise(NormalMap& n, double sigma_deg, uint64_t seed) {
  if (sigma_deg <= 0.0) return;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> angle_dist(0.0, sigma_deg * M_PI / 180.0);
  std::uniform_real_distribution<double> az_dist(0.0, 2.0 * M_PI);
  for (auto& v : n.data()) {
    // rotate about a random axis in the tangent plane of v
    Vec3 t1 = v.cross(std::abs(v.z()) < 0.9 ? Vec3(0, 0, 1) : Vec3(1, 0, 0)).normalized();
    Vec3 t2 = v.cross(t1);
    double az = az_dist(rng);
    Vec3 axis = std::cos(az) * t1 + std::sin(az) * t2;
    v = so3_exp(axis * angle_dist(rng)) * v;
    if (v.z() > -1e-3) v.z() = -1e-3;  // keep within the representable cone
    v.normalize();
  }
}

}  // namespace

RenderedFrame render_frame(const SyntheticObject& obj, const TransformSE3& pose,
                           const SensorSpec& spec, const PhotometricModel& photo,
                           const RenderOptions& opts) {
  int W = spec.width, H = spec.height;
  RenderedFrame out;
  out.gt_mask = ContactMask(W, H, 0);

  // quick reject: object far from the sensing volume
  double diag = 0.5 * std::hypot(W * spec.pitch_mm, H * spec.pitch_mm);
  Vec3 center = pose.apply(
      Vec3((W - 1) * 0.5 * spec.pitch_mm, (H - 1) * 0.5 * spec.pitch_mm, 0.0));
  bool maybe_contact = obj.sdf(center) < diag + spec.max_indentation_mm + 1.0;

  ImageF indent(W, H, 0.0);  // mm, unblurred
  double z_top = spec.max_indentation_mm + 0.5;
  bool any = false;
  if (maybe_contact) {
    for (int v = 0; v < H; ++v) {
      for (int u = 0; u < W; ++u) {
        double h;
        if (surface_height(obj, pose, u * spec.pitch_mm, v * spec.pitch_mm, z_top,
                           -1.0, &h) &&
            h > 0.0) {
          indent.at(u, v) = std::min(h, spec.max_indentation_mm);
          out.gt_mask.at(u, v) = 1;
          any = true;
        }
      }
    }
  }
  if (!any && !opts.allow_empty) throw NoContact{};

  ImageF smoothed = gaussian_blur(indent, 7, opts.gel_blur_sigma_px);
  out.gt_height = HeightMap(W, H, 0.0);
  for (size_t i = 0; i < smoothed.size(); ++i)
    out.gt_height.data()[i] = smoothed.data()[i] / spec.pitch_mm;

  // normals from central differences of the smoothed height (px units)
  GradientMap g{ImageF(W, H, 0.0), ImageF(W, H, 0.0)};
  for (int v = 0; v < H; ++v) {
    for (int u = 0; u < W; ++u) {
      int up = std::min(u + 1, W - 1), um = std::max(u - 1, 0);
      int vp = std::min(v + 1, H - 1), vm = std::max(v - 1, 0);
      g.gu.at(u, v) = (out.gt_height.at(up, v) - out.gt_height.at(um, v)) / double(up - um);
      g.gv.at(u, v) = (out.gt_height.at(u, vp) - out.gt_height.at(u, vm)) / double(vp - vm);
    }
  }
  out.normal = normals_from_gradients(g);
  add_normal_noise(out.normal, opts.normal_noise_deg, opts.noise_seed);

  out.rgb = Image<Vec3>(W, H, Vec3::Zero());
  for (int v = 0; v < H; ++v)
    for (int u = 0; u < W; ++u) out.rgb.at(u, v) = photo.shade(out.normal.at(u, v));
  return out;
}

// --- ball press dataset ----------------------------------------------------

std::vector<BallPressImage> generate_ball_press_dataset(
    const SensorSpec& spec, const PhotometricModel& photo, double ball_diameter_mm,
    int n_images, uint64_t seed) {
  std::vector<BallPressImage> out;
  if (n_images <= 0) return out;
  std::mt19937_64 rng(seed);
  int W = spec.width, H = spec.height;
  double r = 0.5 * ball_diameter_mm;
  std::uniform_real_distribution<double> cu(0.25 * W, 0.75 * W);
  std::uniform_real_distribution<double> cv(0.25 * H, 0.75 * H);
  std::uniform_real_distribution<double> cd(0.3, std::min(0.8 * spec.max_indentation_mm, 0.8 * r));

  for (int k = 0; k < n_images; ++k) {
    double u0 = cu(rng), v0 = cv(rng), depth = cd(rng);
    double rho_c = std::sqrt(r * r - (r - depth) * (r - depth));  // contact radius, mm
    double rho_c_px = rho_c / spec.pitch_mm;

    BallPressImage img;
    img.gt_gradient = GradientMap{ImageF(W, H, 0.0), ImageF(W, H, 0.0)};
    img.label_mask = MaskImage(W, H, 0);
    ImageF indent(W, H, 0.0);
    for (int v = 0; v < H; ++v) {
      for (int u = 0; u < W; ++u) {
        double x = (u - u0) * spec.pitch_mm, y = (v - v0) * spec.pitch_mm;
        double rho2 = x * x + y * y;
        if (rho2 < r * r) {
          double s = std::sqrt(r * r - rho2);
          double h = s - (r - depth);
          if (h > 0.0) indent.at(u, v) = h;
        }
        double rho_px = std::sqrt(rho2) / spec.pitch_mm;
        if (rho_px < rho_c_px - 4.0) {
          double s = std::sqrt(r * r - rho2);
          img.gt_gradient.gu.at(u, v) = -x / s;
          img.gt_gradient.gv.at(u, v) = -y / s;
          img.label_mask.at(u, v) = 1;
        } else if (rho_px > rho_c_px + 6.0) {
          img.label_mask.at(u, v) = 1;  // background label (0, 0)
        }
      }
    }
    ImageF smoothed = gaussian_blur(indent, 7, 1.0);
    GradientMap g{ImageF(W, H, 0.0), ImageF(W, H, 0.0)};
    for (int v = 0; v < H; ++v) {
      for (int u = 0; u < W; ++u) {
        int up = std::min(u + 1, W - 1), um = std::max(u - 1, 0);
        int vp = std::min(v + 1, H - 1), vm = std::max(v - 1, 0);
        g.gu.at(u, v) = (smoothed.at(up, v) - smoothed.at(um, v)) /
                        (double(up - um) * spec.pitch_mm);
        g.gv.at(u, v) = (smoothed.at(u, vp) - smoothed.at(u, vm)) /
                        (double(vp - vm) * spec.pitch_mm);
      }
    }
    NormalMap n = normals_from_gradients(g);
    img.rgb = Image<Vec3>(W, H, Vec3::Zero());
    for (int v = 0; v < H; ++v)
      for (int u = 0; u < W; ++u) img.rgb.at(u, v) = photo.shade(n.at(u, v));
    out.push_back(std::move(img));
  }
  return out;
}

std::vector<CalibrationSample> calibration_samples(
    const std::vector<BallPressImage>& images, const SensorSpec& spec, int stride) {
  std::vector<CalibrationSample> samples;
  int W = spec.width, H = spec.height;
  long count = 0;
  for (const auto& img : images) {
    for (int v = 0; v < H; ++v) {
      for (int u = 0; u < W; ++u) {
        if (!img.label_mask.at(u, v)) continue;
        if (count++ % stride != 0) continue;
        CalibrationSample s;
        const Vec3& rgb = img.rgb.at(u, v);
        s.input << rgb.x(), rgb.y(), rgb.z(), double(u) / (W - 1), double(v) / (H - 1);
        s.target << img.gt_gradient.gu.at(u, v), img.gt_gradient.gv.at(u, v);
        samples.push_back(s);
      }
    }
  }
  return samples;
}

NormalMap normals_from_rgb(const CalibrationNet& net, const Image<Vec3>& rgb) {
  int W = rgb.width(), H = rgb.height();
  Eigen::Matrix<double, 5, Eigen::Dynamic> X(5, size_t(W) * H);
  for (int v = 0; v < H; ++v) {
    for (int u = 0; u < W; ++u) {
      const Vec3& c = rgb.at(u, v);
      X.col(size_t(v) * W + u) << c.x(), c.y(), c.z(), double(u) / (W - 1),
          double(v) / (H - 1);
    }
  }
  Eigen::Matrix2Xd G = net.forward_batch(X);
  GradientMap g{ImageF(W, H, 0.0), ImageF(W, H, 0.0)};
  for (size_t i = 0; i < size_t(W) * H; ++i) {
    g.gu.data()[i] = G(0, i);
    g.gv.data()[i] = G(1, i);
  }
  return normals_from_gradients(g);
}

// --- trajectories ----------------------------------------------------------

static Vec3 dir_from_angles(double theta, double phi) {
  return {std::sin(phi) * std::cos(theta), std::sin(phi) * std::sin(theta),
          std::cos(phi)};
}

TransformSE3 contact_pose(const SyntheticObject& obj, const SensorSpec& spec,
                          const Vec3& dir, double press_depth_mm, double roll_rad,
                          double tilt_rad, double tilt_azimuth_rad) {
  Vec3 point, normal;
  obj.surface_point(dir, &point, &normal);

  // Align the sensor axis with the (smooth) view ray rather than the local
  // surface normal so that fine surface texture does not jitter the pose.
  Vec3 zs = dir.normalized();
  Vec3 ref = std::abs(zs.z()) < 0.9 ? Vec3(0, 0, 1) : Vec3(1, 0, 0);
  Vec3 t1 = ref.cross(zs).normalized();
  Vec3 t2 = zs.cross(t1);
  Vec3 xs = std::cos(roll_rad) * t1 + std::sin(roll_rad) * t2;
  Vec3 ys = zs.cross(xs);

  if (tilt_rad != 0.0) {
    Vec3 axis = std::cos(tilt_azimuth_rad) * xs + std::sin(tilt_azimuth_rad) * ys;
    Mat3 R = so3_exp(axis * tilt_rad);
    xs = R * xs;
    ys = R * ys;
    zs = R * zs;
  }

  TransformSE3 S;
  S.rotation.col(0) = xs;
  S.rotation.col(1) = ys;
  S.rotation.col(2) = zs;
  Vec3 origin_centered = point - press_depth_mm * zs;
  // shift from the image-centered frame to the pixel-origin frame
  Vec3 c((spec.width - 1) * 0.5 * spec.pitch_mm, (spec.height - 1) * 0.5 * spec.pitch_mm,
         0.0);
  S.translation = origin_centered - S.rotation * c;
  return S;
}

ScanTrajectory make_random_walk(const SyntheticObject& obj, const SensorSpec& spec,
                                const WalkParams& p) {
  std::mt19937_64 rng(p.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double theta = gauss(rng), phi = M_PI / 2 + 0.3 * gauss(rng);
  double vtheta = 0, vphi = 0, roll = gauss(rng), vroll = 0;
  double tilt = 0, tilt_az = gauss(rng);
  double max_tilt = p.max_tilt_deg * M_PI / 180.0;

  ScanTrajectory traj;
  int break_countdown = 0;
  std::vector<int> breaks = p.break_frames;
  for (int k = 0; k < p.n_frames; ++k) {
    vtheta += -p.ou_theta * vtheta + p.step_rate * gauss(rng);
    vphi += -p.ou_theta * vphi + p.step_rate * gauss(rng);
    vroll += -p.ou_theta * vroll + 0.3 * p.step_rate * gauss(rng);
    theta += vtheta;
    phi = std::clamp(phi + vphi, 0.25 * M_PI, 0.75 * M_PI);
    roll += vroll;
    tilt = std::clamp(tilt + 0.2 * p.step_rate * gauss(rng), -max_tilt, max_tilt);
    tilt_az += 0.1 * gauss(rng);
    double depth =
        p.press_depth_mm + p.depth_jitter_mm * std::sin(0.13 * k + double(p.seed % 7));

    if (std::find(breaks.begin(), breaks.end(), k) != breaks.end())
      break_countdown = p.break_length;

    TimedPose tp;
    tp.timestamp = k / spec.frame_rate_hz;
    tp.in_contact = break_countdown <= 0;
    if (break_countdown > 0) --break_countdown;
    tp.pose = contact_pose(obj, spec, dir_from_angles(theta, phi),
                           tp.in_contact ? depth : -5.0, roll, tilt, tilt_az);
    traj.push_back(tp);
  }
  return traj;
}

ScanTrajectory make_orbit(const SyntheticObject& obj, const SensorSpec& spec,
                          int n_frames, double latitude_rad, double press_depth_mm,
                          uint64_t seed) {
  ScanTrajectory traj;
  double phi = M_PI / 2 - latitude_rad;
  for (int k = 0; k < n_frames; ++k) {
    double t = double(k) / double(n_frames - 1);
    double theta = 2.0 * M_PI * t;
    TimedPose tp;
    tp.timestamp = k / spec.frame_rate_hz;
    tp.in_contact = true;
    double depth = press_depth_mm + 0.1 * std::sin(2.0 * M_PI * t + double(seed % 5));
    tp.pose = contact_pose(obj, spec, dir_from_angles(theta, phi), depth,
                           0.2 * std::sin(4.0 * M_PI * t), 0.0, 0.0);
    traj.push_back(tp);
  }
  return traj;
}

ScanTrajectory make_figure_eight(const SyntheticObject& obj, const SensorSpec& spec,
                                 int n_frames, double extent_rad,
                                 double press_depth_mm, uint64_t seed) {
  ScanTrajectory traj;
  double theta0 = double(seed % 11) * 0.3, phi0 = M_PI / 2;
  for (int k = 0; k < n_frames; ++k) {
    double s = 2.0 * M_PI * double(k) / double(n_frames - 1);
    double theta = theta0 + extent_rad * std::sin(s);
    double phi = phi0 + 0.6 * extent_rad * std::sin(s) * std::cos(s);
    TimedPose tp;
    tp.timestamp = k / spec.frame_rate_hz;
    tp.in_contact = true;
    tp.pose = contact_pose(obj, spec, dir_from_angles(theta, phi), press_depth_mm,
                           0.0, 0.0, 0.0);
    traj.push_back(tp);
  }
  return traj;
}

ScanTrajectory make_spiral_scan(const SyntheticObject& obj, const SensorSpec& spec,
                                int n_frames, int n_turns, double press_depth_mm,
                                uint64_t seed) {
  ScanTrajectory traj;
  for (int k = 0; k < n_frames; ++k) {
    double t = double(k) / double(n_frames - 1);
    double phi = 0.06 * M_PI + t * 0.88 * M_PI;
    double theta = n_turns * 2.0 * M_PI * t + double(seed % 13) * 0.1;
    TimedPose tp;
    tp.timestamp = k / spec.frame_rate_hz;
    tp.in_contact = true;
    tp.pose = contact_pose(obj, spec, dir_from_angles(theta, phi), press_depth_mm,
                           0.3 * std::sin(7.0 * t), 0.0, 0.0);
    traj.push_back(tp);
  }
  return traj;
}

// --- sequence synthesis ----------------------------------------------------

void synthesize_sequence(const SyntheticObject& obj, const ScanTrajectory& traj,
                         const SensorSpec& spec, const PhotometricModel& photo,
                         const SynthesisOptions& opts,
                         const std::function<void(const SequenceFrame&)>& sink) {
  if (traj.empty()) return;
  if (opts.use_photometric && !opts.net)
    throw std::runtime_error("photometric synthesis requires a calibration net");

  TransformSE3 first_inv = traj.front().pose.inverse();
  for (size_t k = 0; k < traj.size(); ++k) {
    RenderOptions ropts = opts.render;
    ropts.noise_seed = opts.render.noise_seed * 1000003ull + k;
    ropts.allow_empty = true;

    SequenceFrame f;
    f.index = int(k);
    f.timestamp = traj[k].timestamp;
    f.gt_pose = first_inv * traj[k].pose;
    f.in_contact = traj[k].in_contact;

    RenderedFrame r = render_frame(obj, traj[k].pose, spec, photo, ropts);
    if (opts.use_photometric)
      f.normal = normals_from_rgb(*opts.net, r.rgb);
    else
      f.normal = std::move(r.normal);
    if (opts.keep_rgb) f.rgb = std::move(r.rgb);
    sink(f);
  }
}

std::vector<SequenceFrame> synthesize_sequence_vec(
    const SyntheticObject& obj, const ScanTrajectory& traj, const SensorSpec& spec,
    const PhotometricModel& photo, const SynthesisOptions& opts) {
  std::vector<SequenceFrame> out;
  synthesize_sequence(obj, traj, spec, photo, opts,
                      [&](const SequenceFrame& f) { out.push_back(f); });
  return out;
}

}  // namespace gelslam
