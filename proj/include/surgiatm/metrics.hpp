#pragma once

#include <span>

#include "surgiatm/color.hpp"
#include "surgiatm/image.hpp"

namespace surgiatm {

/// Full-reference quality scores for one frame pair (or an aggregate).
struct MetricReport {
  double ciede2000 = 0.0;
  double psnr = 0.0;
  double rmse = 0.0;
  double ssim = 0.0;
};

/// PSNR reported for identical frames.
inline constexpr double kPsnrCap = 99.0;

double rmse(const ImageBuffer& a, const ImageBuffer& b);

/// 10 log10(1 / MSE) with peak 1; identical frames report kPsnrCap.
double psnr(const ImageBuffer& a, const ImageBuffer& b);

/// Single-scale SSIM on BT.601 luma: 11x11 Gaussian window (sigma 1.5),
/// K1 = 0.01, K2 = 0.03, mean over valid (unpadded) window positions.
/// Frames smaller than the window -> ArgumentError.
double ssim(const ImageBuffer& a, const ImageBuffer& b);

/// CIEDE2000 color difference (kL = kC = kH = 1).
double delta_e2000(const LabPixel& x, const LabPixel& y) noexcept;

/// Mean per-pixel CIEDE2000 between two sRGB frames.
double ciede2000(const ImageBuffer& a, const ImageBuffer& b);

/// All four metrics for one pair.
MetricReport evaluate_metrics(const ImageBuffer& pred, const ImageBuffer& truth);

/// Field-wise arithmetic mean, accumulated in the given order.
MetricReport mean_report(std::span<const MetricReport> reports);

/// ITU-R BT.601 luma (or the single channel as-is), flattened row-major.
std::vector<double> luma(const ImageBuffer& img);

}  // namespace surgiatm
