#include "tlapse/raster.h"

#include <algorithm>
#include <cmath>

#include "tlapse/errors.h"

namespace tlapse {
namespace {

struct BilinearCell {
  int x0, y0, x1, y1;
  double fx, fy;
};

std::optional<BilinearCell> locate(int width, int height, double x, double y) {
  if (!(x >= 0.0 && y >= 0.0 && x <= width - 1 && y <= height - 1)) {
    return std::nullopt;
  }
  BilinearCell c;
  c.x0 = std::min(static_cast<int>(x), std::max(width - 2, 0));
  c.y0 = std::min(static_cast<int>(y), std::max(height - 2, 0));
  c.x1 = std::min(c.x0 + 1, width - 1);
  c.y1 = std::min(c.y0 + 1, height - 1);
  c.fx = x - c.x0;
  c.fy = y - c.y0;
  return c;
}

template <typename T>
T blend(const Raster<T>& im, const BilinearCell& c) {
  return (1.0 - c.fy) * ((1.0 - c.fx) * im(c.x0, c.y0) + c.fx * im(c.x1, c.y0)) +
         c.fy * ((1.0 - c.fx) * im(c.x0, c.y1) + c.fx * im(c.x1, c.y1));
}

}  // namespace

std::optional<double> sample_bilinear(const GrayImage& image, double x, double y) {
  const auto cell = locate(image.width(), image.height(), x, y);
  if (!cell) return std::nullopt;
  return blend(image, *cell);
}

std::optional<Rgb> sample_bilinear(const RgbImage& image, double x, double y) {
  const auto cell = locate(image.width(), image.height(), x, y);
  if (!cell) return std::nullopt;
  return Rgb(blend(image, *cell));
}

double sample_bilinear_clamped(const GrayImage& image, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(image.width() - 1));
  y = std::clamp(y, 0.0, static_cast<double>(image.height() - 1));
  return *sample_bilinear(image, x, y);
}

Rgb sample_bilinear_clamped(const RgbImage& image, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(image.width() - 1));
  y = std::clamp(y, 0.0, static_cast<double>(image.height() - 1));
  return *sample_bilinear(image, x, y);
}

GrayImage to_gray(const RgbImage& image) {
  GrayImage gray(image.width(), image.height());
  for (std::size_t i = 0; i < image.size(); ++i) {
    const Rgb& c = image[i];
    gray[i] = 0.299 * c.x() + 0.587 * c.y() + 0.114 * c.z();
  }
  return gray;
}

RgbImage downsample(const RgbImage& image, int factor) {
  if (factor < 1) {
    throw Error(ErrorCode::kInvalidArgument, "downsample factor must be >= 1");
  }
  if (factor == 1) return image;
  const int w = image.width() / factor;
  const int h = image.height() / factor;
  RgbImage out(w, h, Rgb::Zero());
  const double norm = 1.0 / (factor * factor);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      Rgb sum = Rgb::Zero();
      for (int dy = 0; dy < factor; ++dy) {
        for (int dx = 0; dx < factor; ++dx) {
          sum += image(x * factor + dx, y * factor + dy);
        }
      }
      out(x, y) = sum * norm;
    }
  }
  return out;
}

}  // namespace tlapse
