#include "gelslam/gts_io.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

namespace gelslam {

namespace {

// All numeric fields little-endian; this code assumes a little-endian host.
template <typename T>
void put(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& f) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

const char kMagic[4] = {'G', 'T', 'S', '1'};
// magic(4) + version + width + height + count + payload (5 x u32) + pitch + rate
const std::streamoff kCountOffset = 4 + 3 * 4;

void write_header(std::ofstream& f, const GtsHeader& h) {
  f.write(kMagic, 4);
  put<uint32_t>(f, h.version);
  put<uint32_t>(f, h.width);
  put<uint32_t>(f, h.height);
  put<uint32_t>(f, h.frame_count);
  put<uint32_t>(f, uint32_t(h.payload));
  put<double>(f, h.pitch_mm);
  put<double>(f, h.frame_rate_hz);
}

}  // namespace

GtsWriter::GtsWriter(const std::string& path, const GtsHeader& header)
    : f_(path, std::ios::binary), header_(header) {
  if (!f_) throw GtsFormatError("cannot write " + path);
  header_.frame_count = 0;
  write_header(f_, header_);
  open_ = true;
}

GtsWriter::~GtsWriter() {
  if (open_) close();
}

void GtsWriter::write_normals(double timestamp, const ImageV3& normals) {
  if (header_.payload != GtsPayload::Normals)
    throw GtsFormatError("sequence declared RGB payload");
  if (!normals.same_shape(int(header_.width), int(header_.height)))
    throw GtsFormatError("frame shape mismatch");
  put<double>(f_, timestamp);
  std::vector<float> row(header_.width * 3);
  for (uint32_t v = 0; v < header_.height; ++v) {
    for (uint32_t u = 0; u < header_.width; ++u) {
      const Vec3& n = normals.at(int(u), int(v));
      row[u * 3 + 0] = float(n.x());
      row[u * 3 + 1] = float(n.y());
      row[u * 3 + 2] = float(n.z());
    }
    f_.write(reinterpret_cast<const char*>(row.data()),
             std::streamsize(row.size() * sizeof(float)));
  }
  ++count_;
}

void GtsWriter::write_rgb(double timestamp, const Image<Vec3>& rgb) {
  if (header_.payload != GtsPayload::Rgb)
    throw GtsFormatError("sequence declared normals payload");
  if (!rgb.same_shape(int(header_.width), int(header_.height)))
    throw GtsFormatError("frame shape mismatch");
  put<double>(f_, timestamp);
  std::vector<uint8_t> row(header_.width * 3);
  for (uint32_t v = 0; v < header_.height; ++v) {
    for (uint32_t u = 0; u < header_.width; ++u) {
      const Vec3& c = rgb.at(int(u), int(v));
      for (int k = 0; k < 3; ++k)
        row[u * 3 + k] = uint8_t(std::clamp(c[k], 0.0, 1.0) * 255.0 + 0.5);
    }
    f_.write(reinterpret_cast<const char*>(row.data()),
             std::streamsize(row.size()));
  }
  ++count_;
}

void GtsWriter::close() {
  if (!open_) return;
  f_.seekp(kCountOffset);
  put<uint32_t>(f_, count_);
  f_.close();
  open_ = false;
}

GtsReader::GtsReader(const std::string& path) : f_(path, std::ios::binary) {
  if (!f_) throw GtsFormatError("cannot read " + path);
  char magic[4];
  f_.read(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw GtsFormatError("bad magic");
  header_.version = get<uint32_t>(f_);
  header_.width = get<uint32_t>(f_);
  header_.height = get<uint32_t>(f_);
  header_.frame_count = get<uint32_t>(f_);
  uint32_t payload = get<uint32_t>(f_);
  if (payload > 1) throw GtsFormatError("unknown payload kind");
  header_.payload = GtsPayload(payload);
  header_.pitch_mm = get<double>(f_);
  header_.frame_rate_hz = get<double>(f_);
  if (!f_) throw GtsFormatError("truncated header");
}

bool GtsReader::next(double& timestamp, ImageV3& normals, Image<Vec3>& rgb) {
  if (read_ >= header_.frame_count) return false;
  timestamp = get<double>(f_);
  int W = int(header_.width), H = int(header_.height);
  if (header_.payload == GtsPayload::Normals) {
    normals = ImageV3(W, H, Vec3::Zero());
    std::vector<float> row(header_.width * 3);
    for (int v = 0; v < H; ++v) {
      f_.read(reinterpret_cast<char*>(row.data()),
              std::streamsize(row.size() * sizeof(float)));
      for (int u = 0; u < W; ++u)
        normals.at(u, v) = Vec3(row[u * 3], row[u * 3 + 1], row[u * 3 + 2]);
    }
  } else {
    rgb = Image<Vec3>(W, H, Vec3::Zero());
    std::vector<uint8_t> row(header_.width * 3);
    for (int v = 0; v < H; ++v) {
      f_.read(reinterpret_cast<char*>(row.data()), std::streamsize(row.size()));
      for (int u = 0; u < W; ++u)
        rgb.at(u, v) = Vec3(row[u * 3], row[u * 3 + 1], row[u * 3 + 2]) / 255.0;
    }
  }
  if (!f_) throw GtsFormatError("truncated frame payload");
  ++read_;
  return true;
}

void concatenate_gts(const std::vector<std::string>& inputs,
                     const std::string& output) {
  if (inputs.empty()) throw GtsFormatError("no input sequences");
  GtsReader first(inputs[0]);
  GtsHeader h = first.header();
  GtsWriter writer(output, h);
  double dt = h.frame_rate_hz > 0 ? 1.0 / h.frame_rate_hz : 0.0;
  double t = 0.0;
  for (const auto& path : inputs) {
    GtsReader r(path);
    const GtsHeader& hi = r.header();
    if (hi.width != h.width || hi.height != h.height || hi.payload != h.payload ||
        hi.pitch_mm != h.pitch_mm)
      throw GtsFormatError("incompatible sequence geometry: " + path);
    double ts;
    ImageV3 normals;
    Image<Vec3> rgb;
    while (r.next(ts, normals, rgb)) {
      if (h.payload == GtsPayload::Normals)
        writer.write_normals(t, normals);
      else
        writer.write_rgb(t, rgb);
      t += dt;
    }
  }
  writer.close();
}

// --- trajectories -----------------------------------------------------------

void save_trajectory(const std::string& path,
                     const std::vector<TrajectoryEntry>& entries) {
  std::ofstream f(path);
  if (!f) throw GtsFormatError("cannot write " + path);
  f << "# frame_id timestamp tx ty tz qx qy qz qw\n";
  f.precision(17);
  for (const auto& e : entries) {
    Eigen::Quaterniond q(e.pose.rotation);
    q.normalize();
    if (q.w() < 0) q.coeffs() *= -1.0;
    f << e.frame_id << ' ' << e.timestamp << ' ' << e.pose.translation.x() << ' '
      << e.pose.translation.y() << ' ' << e.pose.translation.z() << ' ' << q.x()
      << ' ' << q.y() << ' ' << q.z() << ' ' << q.w() << '\n';
  }
}

std::vector<TrajectoryEntry> load_trajectory(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw GtsFormatError("cannot read " + path);
  std::vector<TrajectoryEntry> out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream is(line);
    TrajectoryEntry e;
    double qx, qy, qz, qw;
    is >> e.frame_id >> e.timestamp >> e.pose.translation.x() >>
        e.pose.translation.y() >> e.pose.translation.z() >> qx >> qy >> qz >> qw;
    if (!is) throw GtsFormatError("malformed trajectory line: " + line);
    e.pose.rotation = Eigen::Quaterniond(qw, qx, qy, qz).normalized().toRotationMatrix();
    out.push_back(e);
  }
  return out;
}

}  // namespace gelslam
