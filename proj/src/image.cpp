#include "harvest/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace harvest {

Frame::Frame(int w, int h, std::int64_t idx)
    : width(w), height(h), index(idx), rgb(static_cast<size_t>(w) * h * 3, 0), depth(static_cast<size_t>(w) * h, 0.0f) {}

bool Frame::consistent() const {
  return width > 0 && height > 0 && rgb.size() == static_cast<size_t>(width) * height * 3 &&
         depth.size() == static_cast<size_t>(width) * height;
}

Rgb Frame::rgb_at(int u, int v) const {
  const size_t i = (static_cast<size_t>(v) * width + u) * 3;
  return {rgb[i], rgb[i + 1], rgb[i + 2]};
}

void Frame::set_rgb(int u, int v, Rgb c) {
  const size_t i = (static_cast<size_t>(v) * width + u) * 3;
  rgb[i] = c.r;
  rgb[i + 1] = c.g;
  rgb[i + 2] = c.b;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageIoError("cannot open " + path.string() + " for writing");
  return out;
}

// Reads "P?\n<w> <h>\n<maxval>\n", skipping comment lines.
void read_header(std::ifstream& in, const std::string& magic, int& w, int& h, int& maxval,
                 const std::filesystem::path& path) {
  std::string m;
  in >> m;
  if (m != magic) throw ImageIoError(path.string() + ": expected " + magic);
  int* fields[3] = {&w, &h, &maxval};
  for (int* field : fields) {
    in >> std::ws;
    while (in.peek() == '#') {
      std::string skip;
      std::getline(in, skip);
      in >> std::ws;
    }
    in >> *field;
  }
  in.get();
  if (!in || w <= 0 || h <= 0) throw ImageIoError(path.string() + ": malformed header");
}

}  // namespace

void write_ppm(const std::filesystem::path& path, const Frame& f) {
  auto out = open_out(path);
  out << "P6\n" << f.width << ' ' << f.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(f.rgb.data()), static_cast<std::streamsize>(f.rgb.size()));
  if (!out) throw ImageIoError("write failed: " + path.string());
}

void write_depth_pgm(const std::filesystem::path& path, const Frame& f) {
  auto out = open_out(path);
  out << "P5\n" << f.width << ' ' << f.height << "\n65535\n";
  std::vector<unsigned char> buf(f.depth.size() * 2);
  for (size_t i = 0; i < f.depth.size(); ++i) {
    const double mm = std::isfinite(f.depth[i]) ? std::round(f.depth[i] * 1000.0) : 0.0;
    const auto v = static_cast<std::uint16_t>(std::clamp(mm, 0.0, 65535.0));
    buf[2 * i] = static_cast<unsigned char>(v >> 8);
    buf[2 * i + 1] = static_cast<unsigned char>(v & 0xff);
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw ImageIoError("write failed: " + path.string());
}

void read_ppm(const std::filesystem::path& path, Frame& f) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageIoError("cannot open " + path.string());
  int w = 0, h = 0, maxval = 0;
  read_header(in, "P6", w, h, maxval, path);
  if (maxval != 255) throw ImageIoError(path.string() + ": only 8-bit PPM is supported");
  f.width = w;
  f.height = h;
  f.rgb.assign(static_cast<size_t>(w) * h * 3, 0);
  in.read(reinterpret_cast<char*>(f.rgb.data()), static_cast<std::streamsize>(f.rgb.size()));
  if (!in) throw ImageIoError(path.string() + ": truncated pixel data");
}

void read_depth_pgm(const std::filesystem::path& path, Frame& f) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageIoError("cannot open " + path.string());
  int w = 0, h = 0, maxval = 0;
  read_header(in, "P5", w, h, maxval, path);
  if (maxval != 65535) throw ImageIoError(path.string() + ": only 16-bit PGM is supported");
  if ((f.width != 0 && f.width != w) || (f.height != 0 && f.height != h))
    throw ImageIoError(path.string() + ": depth size differs from color size");
  f.width = w;
  f.height = h;
  std::vector<unsigned char> buf(static_cast<size_t>(w) * h * 2);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!in) throw ImageIoError(path.string() + ": truncated pixel data");
  f.depth.resize(static_cast<size_t>(w) * h);
  for (size_t i = 0; i < f.depth.size(); ++i) {
    const int mm = (buf[2 * i] << 8) | buf[2 * i + 1];
    f.depth[i] = static_cast<float>(mm / 1000.0);
  }
}

std::string frame_stem(std::int64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%06lld", static_cast<long long>(index));
  return buf;
}

void save_frame(const std::filesystem::path& dir, const Frame& f) {
  const std::string stem = frame_stem(f.index);
  write_ppm(dir / (stem + "_rgb.ppm"), f);
  write_depth_pgm(dir / (stem + "_depth.pgm"), f);
}

Frame load_frame(const std::filesystem::path& dir, std::int64_t index) {
  Frame f;
  f.index = index;
  const std::string stem = frame_stem(index);
  read_ppm(dir / (stem + "_rgb.ppm"), f);
  read_depth_pgm(dir / (stem + "_depth.pgm"), f);
  return f;
}

}  // namespace harvest
