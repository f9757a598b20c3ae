#pragma once

#include <vector>

#include "surgiatm/image.hpp"

namespace surgiatm {

/// CIE 1976 L*a*b* under the D65 reference white.
struct LabPixel {
  double L = 0.0;
  double a = 0.0;
  double b = 0.0;
};

struct LabRaster {
  int width = 0;
  int height = 0;
  std::vector<LabPixel> pixels;
};

/// sRGB-encoded triple in [0,1] -> L*a*b* (sRGB EOTF, IEC 61966-2-1 matrix, D65).
LabPixel srgb_to_lab(double r, double g, double b) noexcept;

/// Per-pixel conversion; single-channel input raises ShapeError.
LabRaster srgb_to_lab(const ImageBuffer& img);

/// Reference white used by the conversion (X, Y, Z with Y = 1).
inline constexpr double kWhiteX = 0.95047;
inline constexpr double kWhiteY = 1.0;
inline constexpr double kWhiteZ = 1.08883;

}  // namespace surgiatm
