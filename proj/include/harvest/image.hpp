#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace harvest {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  bool operator==(const Rgb&) const = default;
};

/// Interleaved 8-bit RGB plus metric depth in meters (0 = invalid).
struct Frame {
  int width = 0;
  int height = 0;
  std::int64_t index = 0;
  std::vector<std::uint8_t> rgb;
  std::vector<float> depth;

  Frame() = default;
  Frame(int w, int h, std::int64_t idx = 0);

  bool consistent() const;
  float depth_at(int u, int v) const { return depth[static_cast<size_t>(v) * width + u]; }
  Rgb rgb_at(int u, int v) const;
  void set_rgb(int u, int v, Rgb c);
};

class ImageIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Binary P6 (8-bit RGB) and P5 (16-bit big-endian, depth in millimeters).
void write_ppm(const std::filesystem::path& path, const Frame& f);
void write_depth_pgm(const std::filesystem::path& path, const Frame& f);
void read_ppm(const std::filesystem::path& path, Frame& f);
void read_depth_pgm(const std::filesystem::path& path, Frame& f);

/// frame_NNNNNN_rgb.ppm / frame_NNNNNN_depth.pgm
std::string frame_stem(std::int64_t index);
void save_frame(const std::filesystem::path& dir, const Frame& f);
Frame load_frame(const std::filesystem::path& dir, std::int64_t index);

}  // namespace harvest
