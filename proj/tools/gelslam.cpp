// Command-line front end: simulate / calibrate / slam / reconstruct / evaluate.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "gelslam/config.hpp"
#include "gelslam/evaluation.hpp"
#include "gelslam/gts_io.hpp"
#include "gelslam/mesh.hpp"
#include "gelslam/pipeline.hpp"
#include "gelslam/sim.hpp"

namespace fs = std::filesystem;
using namespace gelslam;

namespace {

struct GlobalFlags {
  std::string config_path;
  std::string mode, solver, profile;
  int64_t seed = -1;
};

// precedence: CLI flag > config file > built-in default
PipelineConfig resolve_config(const GlobalFlags& g) {
  PipelineConfig cfg;
  if (!g.config_path.empty()) cfg = PipelineConfig::load(g.config_path);
  if (!g.mode.empty()) cfg.mode = g.mode;
  if (!g.solver.empty()) cfg.solver = g.solver;
  if (!g.profile.empty()) cfg.profile = g.profile;
  if (g.seed >= 0) cfg.seed = uint64_t(g.seed);
  cfg.validate();
  return cfg;
}

SyntheticObject make_object(const std::string& kind, double radius, double amp,
                            double freq) {
  if (kind == "sphere") return SyntheticObject::sphere(radius);
  if (kind == "bumpy_sphere") return SyntheticObject::bumpy_sphere(radius, amp, freq);
  if (kind == "cube") return SyntheticObject::cube(2.0 * radius);
  if (kind == "superellipsoid")
    return SyntheticObject::superellipsoid(radius, radius * 0.8, radius * 0.65, 4.0);
  throw CLI::ValidationError("--object", "unknown object kind: " + kind);
}

ScanTrajectory make_trajectory(const std::string& kind, const SyntheticObject& obj,
                               const SensorSpec& spec, int frames, double depth,
                               uint64_t seed) {
  if (kind == "orbit") return make_orbit(obj, spec, frames, 0.35, depth, seed);
  if (kind == "figure8") return make_figure_eight(obj, spec, frames, 0.6, depth, seed);
  if (kind == "spiral") {
    int turns = std::max(4, frames / 60);
    return make_spiral_scan(obj, spec, frames, turns, depth, seed);
  }
  if (kind == "walk") {
    WalkParams p;
    p.n_frames = frames;
    p.press_depth_mm = depth;
    p.seed = seed;
    return make_random_walk(obj, spec, p);
  }
  throw CLI::ValidationError("--trajectory", "unknown trajectory kind: " + kind);
}

int cmd_simulate(const PipelineConfig& cfg, const std::string& object_kind,
                 double radius, double amp, double freq,
                 const std::string& traj_kind, int frames, double depth,
                 const std::string& payload, const std::string& net_path,
                 const std::string& out_gts, const std::string& out_traj,
                 const std::string& out_mesh) {
  SensorSpec spec = cfg.sensor();
  SyntheticObject obj = make_object(object_kind, radius, amp, freq);
  ScanTrajectory traj =
      make_trajectory(traj_kind, obj, spec, frames, depth, cfg.seed);
  PhotometricModel photo;

  SynthesisOptions opts;
  opts.render.gel_blur_sigma_px = cfg.gel_blur_sigma_px;
  opts.render.normal_noise_deg = cfg.normal_noise_deg;
  opts.render.noise_seed = cfg.seed;
  bool rgb = payload == "rgb";
  opts.keep_rgb = rgb;

  GtsHeader header;
  header.width = uint32_t(spec.width);
  header.height = uint32_t(spec.height);
  header.payload = rgb ? GtsPayload::Rgb : GtsPayload::Normals;
  header.pitch_mm = spec.pitch_mm;
  header.frame_rate_hz = spec.frame_rate_hz;
  GtsWriter writer(out_gts, header);

  std::vector<TrajectoryEntry> gt;
  synthesize_sequence(obj, traj, spec, photo, opts, [&](const SequenceFrame& f) {
    if (rgb)
      writer.write_rgb(f.timestamp, f.rgb);
    else
      writer.write_normals(f.timestamp, f.normal);
    if (f.in_contact) gt.push_back({f.index, f.timestamp, f.gt_pose});
  });
  writer.close();
  save_trajectory(out_traj, gt);

  if (!out_mesh.empty()) {
    double r = obj.bound_radius() + 1.0;
    TriMesh mesh = marching_cubes([&](const Vec3& p) { return obj.sdf(p); },
                                  Vec3::Constant(-r), Vec3::Constant(r), 0.1);
    save_ply(largest_component(mesh), out_mesh);
  }
  std::cout << "wrote " << writer.frames_written() << " frames to " << out_gts
            << "\n";
  (void)net_path;
  return 0;
}

int cmd_calibrate(const PipelineConfig& cfg, int n_images, double ball_diameter,
                  const std::string& out_net) {
  SensorSpec spec = cfg.sensor();
  PhotometricModel photo;
  auto images =
      generate_ball_press_dataset(spec, photo, ball_diameter, n_images, cfg.seed + 1);
  auto samples = calibration_samples(images, spec, 4);
  CalibrationNet net(cfg.seed + 42);
  TrainReport rep = train_calibration(net, samples, cfg.train_params());
  net.save(out_net);
  std::cout << "trained on " << samples.size() << " samples over " << rep.epochs_run
            << " epochs\n"
            << "holdout mse " << rep.holdout_mse << ", holdout angular error "
            << rep.holdout_mean_angular_error_deg << " deg\n"
            << "saved net to " << out_net << "\n";
  return 0;
}

int cmd_slam(const PipelineConfig& cfg, const std::string& in_gts,
             const std::string& net_path, const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::optional<CalibrationNet> net;
  if (!net_path.empty()) net = CalibrationNet::load(net_path);

  PipelineResult res = run_slam(in_gts, cfg, net ? &*net : nullptr);

  save_trajectory((fs::path(out_dir) / "trajectory.txt").string(), res.trajectory);
  res.graph.save((fs::path(out_dir) / "graph.txt").string());
  if (!res.fused.mesh.empty())
    save_ply(res.fused.mesh, (fs::path(out_dir) / "fused.ply").string());
  if (!res.watertight.mesh.empty())
    save_ply(res.watertight.mesh, (fs::path(out_dir) / "watertight.ply").string());
  {
    std::ofstream f(fs::path(out_dir) / "metrics.txt");
    f << res.metrics.serialized();
  }
  if (!res.skipped_keyframes.empty()) {
    std::cout << "skipped loop detection on " << res.skipped_keyframes.size()
              << " keyframes:";
    for (int id : res.skipped_keyframes) std::cout << ' ' << id;
    std::cout << "\n";
  }
  if (res.watertight.open_scan && !res.watertight.mesh.empty())
    std::cout << "warning: scan is not closed; watertight remesh is open\n";
  std::cout << res.metrics.text_table();
  return 0;
}

int cmd_reconstruct(const PipelineConfig& cfg, const std::string& in_gts,
                    const std::string& graph_path, const std::string& out_dir) {
  fs::create_directories(out_dir);
  PoseGraph graph = PoseGraph::load(graph_path);

  GtsReader reader(in_gts);
  if (reader.header().payload != GtsPayload::Normals)
    throw ConfigError("reconstruct expects a normals sequence");

  PipelineConfig c = cfg;
  c.pitch_mm = reader.header().pitch_mm;

  std::vector<FusionInput> inputs;
  double ts;
  ImageV3 normals;
  Image<Vec3> rgb;
  int id = 0;
  while (reader.next(ts, normals, rgb)) {
    if (graph.has_node(id)) {
      auto frame = std::make_shared<Frame>(
          frame_from_normals(id, ts, normals, c.surface_params()));
      inputs.push_back({id, frame, graph.pose(id)});
    }
    ++id;
  }
  if (inputs.empty()) throw NoPoses();

  FusedSurface fused = fuse_fast(inputs, c.pitch_mm, c.fusion_params());
  WatertightMesh wt = remesh_watertight(fused, c.remesh_params());
  save_ply(fused.mesh, (fs::path(out_dir) / "fused.ply").string());
  save_ply(wt.mesh, (fs::path(out_dir) / "watertight.ply").string());
  std::cout << "fused " << inputs.size() << " keyframes; watertight: "
            << (wt.open_scan ? "no (open scan)" : "yes") << "\n";
  return 0;
}

int cmd_evaluate(const PipelineConfig& cfg, const std::string& est_traj,
                 const std::string& gt_traj, const std::string& est_mesh,
                 const std::string& gt_mesh, const std::string& out_report) {
  MetricsReport rep;
  if (!est_traj.empty() && !gt_traj.empty())
    rep = trajectory_mae(load_trajectory(est_traj), load_trajectory(gt_traj));
  if (!est_mesh.empty() && !gt_mesh.empty()) {
    TriMesh a = load_ply(est_mesh), b = load_ply(gt_mesh);
    TransformSE3 T = align_meshes(a, b);
    for (auto& v : a.vertices) v = T.apply(v);
    rep.cd_mm = chamfer_distance(a, b, cfg.cd_samples, unsigned(cfg.seed) + 1);
    NcdParams ncd;
    ncd.n_contacts = cfg.ncd_contacts;
    ncd.seed = unsigned(cfg.seed) + 3;
    rep.ncd = normal_cosine_distance(a, b, cfg.sensor(), ncd);
  }
  if (!out_report.empty()) {
    std::ofstream f(out_report);
    f << rep.serialized();
  }
  std::cout << rep.text_table();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tactile-only SLAM and surface reconstruction toolkit"};
  app.require_subcommand(1);

  GlobalFlags g;
  app.add_option("--config", g.config_path, "key=value config file");
  app.add_option("--seed", g.seed, "master random seed");
  app.add_option("--mode", g.mode, "online|offline")
      ->check(CLI::IsMember({"online", "offline"}));
  app.add_option("--solver", g.solver, "lm|gnc")
      ->check(CLI::IsMember({"lm", "gnc"}));
  app.add_option("--profile", g.profile, "tracking|reconstruction")
      ->check(CLI::IsMember({"tracking", "reconstruction"}));

  // simulate
  auto* sim = app.add_subcommand("simulate", "render a synthetic scan sequence");
  std::string object_kind = "bumpy_sphere", traj_kind = "orbit", payload = "normals";
  double radius = 8.0, amp = 0.1, freq = 1.2, depth = 1.0;
  int frames = 300;
  std::string out_gts = "scan.gts", out_traj = "gt_trajectory.txt", out_mesh,
              net_path;
  sim->add_option("--object", object_kind, "sphere|bumpy_sphere|superellipsoid|cube");
  sim->add_option("--radius", radius, "object radius / half-side (mm)");
  sim->add_option("--texture-amplitude", amp, "bump amplitude (mm)");
  sim->add_option("--texture-frequency", freq, "bump frequency (cycles/mm)");
  sim->add_option("--trajectory", traj_kind, "orbit|figure8|spiral|walk");
  sim->add_option("--frames", frames, "number of frames");
  sim->add_option("--depth", depth, "press depth (mm)");
  sim->add_option("--payload", payload, "normals|rgb")
      ->check(CLI::IsMember({"normals", "rgb"}));
  sim->add_option("--out-gts", out_gts, "output sequence path");
  sim->add_option("--out-trajectory", out_traj, "ground-truth trajectory path");
  sim->add_option("--out-mesh", out_mesh, "ground-truth mesh path (PLY)");

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "train the photometric net");
  int n_images = 50;
  double ball_diameter = 6.31;
  std::string out_net = "calibration.net";
  cal->add_option("--images", n_images, "number of ball presses");
  cal->add_option("--ball-diameter", ball_diameter, "ball diameter (mm)");
  cal->add_option("--out", out_net, "output net path");

  // slam
  auto* slam = app.add_subcommand("slam", "run the full pipeline on a .gts");
  std::string in_gts, out_dir = "slam_out", slam_net;
  slam->add_option("--in", in_gts, "input .gts sequence")->required();
  slam->add_option("--net", slam_net, "calibration net (required for RGB input)");
  slam->add_option("--out-dir", out_dir, "output directory");

  // reconstruct
  auto* rec = app.add_subcommand("reconstruct",
                                 "re-run fusion/remesh from a graph dump");
  std::string rec_gts, rec_graph, rec_out = "recon_out";
  rec->add_option("--in", rec_gts, "input .gts sequence")->required();
  rec->add_option("--graph", rec_graph, "pose graph dump")->required();
  rec->add_option("--out-dir", rec_out, "output directory");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "trajectory / mesh metrics");
  std::string e_traj, g_traj, e_mesh, g_mesh, out_report;
  ev->add_option("--est-trajectory", e_traj, "estimated trajectory");
  ev->add_option("--gt-trajectory", g_traj, "ground-truth trajectory");
  ev->add_option("--est-mesh", e_mesh, "estimated mesh (PLY)");
  ev->add_option("--gt-mesh", g_mesh, "ground-truth mesh (PLY)");
  ev->add_option("--out", out_report, "machine-readable report path");

  CLI11_PARSE(app, argc, argv);

  try {
    PipelineConfig cfg = resolve_config(g);
    if (sim->parsed())
      return cmd_simulate(cfg, object_kind, radius, amp, freq, traj_kind, frames,
                          depth, payload, net_path, out_gts, out_traj, out_mesh);
    if (cal->parsed()) return cmd_calibrate(cfg, n_images, ball_diameter, out_net);
    if (slam->parsed()) return cmd_slam(cfg, in_gts, slam_net, out_dir);
    if (rec->parsed()) return cmd_reconstruct(cfg, rec_gts, rec_graph, rec_out);
    if (ev->parsed())
      return cmd_evaluate(cfg, e_traj, g_traj, e_mesh, g_mesh, out_report);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
