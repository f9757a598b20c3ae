#include "surgiatm/color.hpp"

#include <algorithm>
#include <cmath>

#include "surgiatm/errors.hpp"

namespace surgiatm {

namespace {

double srgb_to_linear(double v) noexcept {
  return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

double lab_f(double t) noexcept {
  constexpr double kEpsilon = 216.0 / 24389.0;  // (6/29)^3
  constexpr double kKappa = 24389.0 / 27.0;
  return t > kEpsilon ? std::cbrt(t) : (kKappa * t + 16.0) / 116.0;
}

}  // namespace

LabPixel srgb_to_lab(double r, double g, double b) noexcept {
  const double rl = srgb_to_linear(r);
  const double gl = srgb_to_linear(g);
  const double bl = srgb_to_linear(b);

  const double x = 0.412453 * rl + 0.357580 * gl + 0.180423 * bl;
  const double y = 0.212671 * rl + 0.715160 * gl + 0.072169 * bl;
  const double z = 0.019334 * rl + 0.119193 * gl + 0.950227 * bl;

  const double fx = lab_f(x / kWhiteX);
  const double fy = lab_f(y / kWhiteY);
  const double fz = lab_f(z / kWhiteZ);

  LabPixel lab;
  lab.L = std::clamp(116.0 * fy - 16.0, 0.0, 100.0);
  lab.a = 500.0 * (fx - fy);
  lab.b = 200.0 * (fy - fz);
  return lab;
}

LabRaster srgb_to_lab(const ImageBuffer& img) {
  require_channels(img, 3, "srgb_to_lab");
  LabRaster out;
  out.width = img.width();
  out.height = img.height();
  out.pixels.resize(img.pixel_count());
  auto d = img.data();
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    out.pixels[i] = srgb_to_lab(d[3 * i], d[3 * i + 1], d[3 * i + 2]);
  }
  return out;
}

}  // namespace surgiatm
