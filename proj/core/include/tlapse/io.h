#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tlapse/camera.h"
#include "tlapse/cost_volume.h"
#include "tlapse/raster.h"

namespace tlapse {

// 8-bit RGB PNG <-> [0, 1] floats. Writing rounds half up.
RgbImage read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const RgbImage& image);

// Single-channel little-endian PFM ("Pf", scale -1.0), bottom row first.
Raster<double> read_pfm(const std::filesystem::path& path);
void write_pfm(const std::filesystem::path& path, const Raster<double>& image);

struct ManifestPhoto {
  std::string image;  // relative to the manifest's directory
  Camera camera;
  double timestamp = 0.0;
};

struct Manifest {
  std::vector<ManifestPhoto> photos;
  std::vector<SparsePoint> points;
  std::optional<Camera> reference;
};

std::string manifest_to_string(const Manifest& manifest);
Manifest manifest_from_string(const std::string& text);
Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

// Loads every photo listed in the manifest.
std::vector<PosedImage> load_photos(const Manifest& manifest,
                                    const std::filesystem::path& manifest_dir);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace tlapse
