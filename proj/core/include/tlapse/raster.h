#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace tlapse {

// Row-major 2D grid. Pixel (x, y) has its center at integer coordinates.
template <typename T>
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, const T& fill = T{})
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(width) * height, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  bool operator==(const Raster&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using Rgb = Eigen::Vector3d;
using RgbImage = Raster<Rgb>;
using GrayImage = Raster<double>;

// Bilinear lookup; nullopt when (x, y) is outside [0, W-1] x [0, H-1].
std::optional<double> sample_bilinear(const GrayImage& image, double x, double y);
std::optional<Rgb> sample_bilinear(const RgbImage& image, double x, double y);

// Same lookup with the coordinates clamped into the raster.
double sample_bilinear_clamped(const GrayImage& image, double x, double y);
Rgb sample_bilinear_clamped(const RgbImage& image, double x, double y);

GrayImage to_gray(const RgbImage& image);

// Area-average downsampling by an integer factor (trailing partial blocks
// are dropped).
RgbImage downsample(const RgbImage& image, int factor);

}  // namespace tlapse
