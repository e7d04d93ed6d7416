#include "tlapse/io.h"

#include <png.h>

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include "json.hpp"

#include "tlapse/errors.h"
#include "json_codec.h"

namespace tlapse {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return f;
}

}  // namespace

RgbImage read_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw Error(ErrorCode::kIo, "cannot read PNG " + path.string() + ": " +
                                    image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    throw Error(ErrorCode::kIo, "cannot decode PNG " + path.string());
  }
  const int w = static_cast<int>(image.width);
  const int h = static_cast<int>(image.height);
  RgbImage out(w, h);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = Rgb(buffer[3 * i], buffer[3 * i + 1], buffer[3 * i + 2]) / 255.0;
  }
  return out;
}

void write_png(const std::filesystem::path& path, const RgbImage& img) {
  std::vector<png_byte> buffer(img.size() * 3);
  for (std::size_t i = 0; i < img.size(); ++i) {
    for (int c = 0; c < 3; ++c) {
      const double v = std::clamp(img[i][c], 0.0, 1.0);
      buffer[3 * i + c] = static_cast<png_byte>(std::floor(v * 255.0 + 0.5));
    }
  }
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, buffer.data(), 0, nullptr)) {
    throw Error(ErrorCode::kIo, "cannot write PNG " + path.string());
  }
}

Raster<double> read_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::string magic;
  int w = 0, h = 0;
  double scale = 0.0;
  in >> magic >> w >> h >> scale;
  in.get();
  if (magic != "Pf" || w <= 0 || h <= 0 || !in) {
    throw Error(ErrorCode::kIo, path.string() + " is not a single-channel PFM");
  }
  const bool little = scale < 0.0;
  Raster<double> out(w, h);
  std::vector<float> row(w);
  for (int y = h - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(row.data()), sizeof(float) * w);
    if (!in) throw Error(ErrorCode::kIo, "truncated PFM " + path.string());
    for (int x = 0; x < w; ++x) {
      float v = row[x];
      if (little != (std::endian::native == std::endian::little)) {
        v = std::bit_cast<float>(__builtin_bswap32(std::bit_cast<std::uint32_t>(v)));
      }
      out(x, y) = v;
    }
  }
  return out;
}

void write_pfm(const std::filesystem::path& path, const Raster<double>& image) {
  static_assert(std::endian::native == std::endian::little);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << "Pf\n" << image.width() << " " << image.height() << "\n-1.0\n";
  std::vector<float> row(image.width());
  for (int y = image.height() - 1; y >= 0; --y) {
    for (int x = 0; x < image.width(); ++x) row[x] = static_cast<float>(image(x, y));
    out.write(reinterpret_cast<const char*>(row.data()), sizeof(float) * row.size());
  }
}

std::string manifest_to_string(const Manifest& manifest) {
  nlohmann::json j;
  j["photos"] = nlohmann::json::array();
  for (const auto& p : manifest.photos) {
    nlohmann::json e = camera_to_json(p.camera);
    e["path"] = p.image;
    e["timestamp"] = p.timestamp;
    j["photos"].push_back(std::move(e));
  }
  j["points"] = nlohmann::json::array();
  for (const auto& pt : manifest.points) {
    j["points"].push_back({{"position", {pt.position.x(), pt.position.y(), pt.position.z()}},
                           {"observers", pt.observers}});
  }
  if (manifest.reference) j["reference"] = camera_to_json(*manifest.reference);
  return j.dump(2) + "\n";
}

Manifest manifest_from_string(const std::string& text) {
  Manifest m;
  try {
    const auto j = nlohmann::json::parse(text);
    for (const auto& e : j.at("photos")) {
      ManifestPhoto p;
      p.image = e.at("path").get<std::string>();
      p.camera = camera_from_json(e);
      p.timestamp = e.at("timestamp").get<double>();
      m.photos.push_back(std::move(p));
    }
    if (j.contains("points")) {
      for (const auto& e : j.at("points")) {
        SparsePoint pt;
        const auto pos = e.at("position").get<std::vector<double>>();
        if (pos.size() != 3) throw Error(ErrorCode::kIo, "point position needs 3 values");
        pt.position = Eigen::Vector3d(pos[0], pos[1], pos[2]);
        pt.observers = e.at("observers").get<std::vector<int>>();
        m.points.push_back(std::move(pt));
      }
    }
    if (j.contains("reference")) m.reference = camera_from_json(j.at("reference"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kIo, std::string("malformed manifest: ") + e.what());
  }
  return m;
}

Manifest read_manifest(const std::filesystem::path& path) {
  return manifest_from_string(read_text(path));
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  write_text(path, manifest_to_string(manifest));
}

std::vector<PosedImage> load_photos(const Manifest& manifest,
                                    const std::filesystem::path& manifest_dir) {
  std::vector<PosedImage> photos(manifest.photos.size());
  for (std::size_t i = 0; i < photos.size(); ++i) {
    const auto& p = manifest.photos[i];
    photos[i].camera = p.camera;
    photos[i].timestamp = p.timestamp;
    photos[i].image = read_png(manifest_dir / p.image);
    if (photos[i].image.width() != p.camera.width ||
        photos[i].image.height() != p.camera.height) {
      throw Error(ErrorCode::kDimensionMismatch,
                  p.image + " does not match its camera size");
    }
  }
  return photos;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

}  // namespace tlapse
