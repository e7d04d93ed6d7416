#include "tlapse/metrics.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "tlapse/errors.h"

namespace tlapse {

double mse(const RgbImage& a, const RgbImage& b) {
  if (a.width() != b.width() || a.height() != b.height() || a.size() == 0) {
    throw Error(ErrorCode::kDimensionMismatch, "images differ in size");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]).squaredNorm();
  return sum / (3.0 * static_cast<double>(a.size()));
}

double psnr(const RgbImage& a, const RgbImage& b) {
  const double e = mse(a, b);
  if (e < 1e-10) return 99.0;
  return std::min(99.0, -10.0 * std::log10(e));
}

DepthError depth_error(const Raster<double>& estimate, const Raster<double>& truth,
                       const Raster<std::uint8_t>& mask, double keep) {
  if (estimate.width() != truth.width() || estimate.height() != truth.height()) {
    throw Error(ErrorCode::kDimensionMismatch, "depth rasters differ in size");
  }
  const bool masked = mask.size() != 0;
  if (masked && (mask.width() != truth.width() || mask.height() != truth.height())) {
    throw Error(ErrorCode::kDimensionMismatch, "mask differs in size");
  }
  std::vector<double> sq;
  sq.reserve(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (masked && !mask[i]) continue;
    const double d = estimate[i] - truth[i];
    sq.push_back(d * d);
  }
  DepthError out;
  out.count = sq.size();
  if (sq.empty()) return out;
  std::sort(sq.begin(), sq.end());
  double total = 0.0;
  for (double v : sq) total += v;
  out.rmse = std::sqrt(total / sq.size());
  const std::size_t n =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(keep * sq.size())));
  double part = 0.0;
  for (std::size_t i = 0; i < n; ++i) part += sq[i];
  out.trimmed_rmse = std::sqrt(part / n);
  return out;
}

}  // namespace tlapse
