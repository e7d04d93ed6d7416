#pragma once

#include <cstdint>

#include "tlapse/raster.h"

namespace tlapse {

// Mean over all pixels and channels. Throws DimensionMismatch.
double mse(const RgbImage& a, const RgbImage& b);

// 10 log10(1 / MSE) for images in [0, 1]; capped at 99 dB.
double psnr(const RgbImage& a, const RgbImage& b);

struct DepthError {
  double rmse = 0.0;          // over every compared pixel
  double trimmed_rmse = 0.0;  // over the best `keep` fraction
  std::size_t count = 0;
};

// Compares two rasters (e.g. disparities in plane units) where `mask` is
// nonzero, or everywhere when the mask is empty. Throws DimensionMismatch.
DepthError depth_error(const Raster<double>& estimate, const Raster<double>& truth,
                       const Raster<std::uint8_t>& mask = {}, double keep = 0.95);

}  // namespace tlapse
