#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "gelslam/geometry.hpp"
#include "gelslam/image.hpp"

namespace gelslam {

struct GtsFormatError : std::runtime_error {
  explicit GtsFormatError(const std::string& what) : std::runtime_error(what) {}
};

enum class GtsPayload : uint32_t { Normals = 0, Rgb = 1 };

struct GtsHeader {
  uint32_t version = 1;
  uint32_t width = 0;
  uint32_t height = 0;
  uint32_t frame_count = 0;
  GtsPayload payload = GtsPayload::Normals;
  double pitch_mm = 0.0625;
  double frame_rate_hz = 25.0;
};

/// Streaming sequence writer. The frame count in the header is patched on
/// close, so the frame total need not be known up front.
class GtsWriter {
 public:
  GtsWriter(const std::string& path, const GtsHeader& header);
  ~GtsWriter();

  void write_normals(double timestamp, const ImageV3& normals);
  /// RGB in [0, 1], quantized to uint8.
  void write_rgb(double timestamp, const Image<Vec3>& rgb);
  void close();

  uint32_t frames_written() const { return count_; }

 private:
  std::ofstream f_;
  GtsHeader header_;
  uint32_t count_ = 0;
  bool open_ = false;
};

class GtsReader {
 public:
  explicit GtsReader(const std::string& path);

  const GtsHeader& header() const { return header_; }

  /// Sequential read; false at end of sequence. Exactly one of the outputs
  /// is filled depending on the payload kind.
  bool next(double& timestamp, ImageV3& normals, Image<Vec3>& rgb);

 private:
  std::ifstream f_;
  GtsHeader header_;
  uint32_t read_ = 0;
};

/// Joins sequences with identical geometry; timestamps re-based so the
/// output is monotone at the declared frame rate.
void concatenate_gts(const std::vector<std::string>& inputs,
                     const std::string& output);

// --- trajectories -----------------------------------------------------------

struct TrajectoryEntry {
  int frame_id = 0;
  double timestamp = 0.0;
  TransformSE3 pose;  // sensor-to-object T_i
};

/// Text lines `frame_id timestamp tx ty tz qx qy qz qw`.
void save_trajectory(const std::string& path,
                     const std::vector<TrajectoryEntry>& entries);
std::vector<TrajectoryEntry> load_trajectory(const std::string& path);

}  // namespace gelslam
