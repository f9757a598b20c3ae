#include "surgiatm/resize.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "surgiatm/errors.hpp"

namespace surgiatm {

namespace {

struct Tap {
  int lo;
  int hi;
  double frac;
};

std::vector<Tap> make_taps(int src, int dst) {
  std::vector<Tap> taps(static_cast<std::size_t>(dst));
  const double scale = static_cast<double>(src) / static_cast<double>(dst);
  for (int i = 0; i < dst; ++i) {
    double pos = (static_cast<double>(i) + 0.5) * scale - 0.5;
    pos = std::clamp(pos, 0.0, static_cast<double>(src - 1));
    const int lo = static_cast<int>(std::floor(pos));
    const int hi = std::min(lo + 1, src - 1);
    taps[static_cast<std::size_t>(i)] = {lo, hi, pos - lo};
  }
  return taps;
}

}  // namespace

ImageBuffer resize_bilinear(const ImageBuffer& img, int width, int height) {
  if (width < 1 || height < 1) throw ArgumentError("resize target must be at least 1x1");
  if (img.width() < 1 || img.height() < 1) throw ArgumentError("cannot resize an empty image");
  if (width == img.width() && height == img.height()) return img;

  const auto xs = make_taps(img.width(), width);
  const auto ys = make_taps(img.height(), height);
  const int channels = img.channels();
  Raster out(width, height, channels);
  for (int y = 0; y < height; ++y) {
    const Tap& ty = ys[static_cast<std::size_t>(y)];
    for (int x = 0; x < width; ++x) {
      const Tap& tx = xs[static_cast<std::size_t>(x)];
      for (int c = 0; c < channels; ++c) {
        const double top = img.at(tx.lo, ty.lo, c) * (1.0 - tx.frac) + img.at(tx.hi, ty.lo, c) * tx.frac;
        const double bottom = img.at(tx.lo, ty.hi, c) * (1.0 - tx.frac) + img.at(tx.hi, ty.hi, c) * tx.frac;
        out.at(x, y, c) = top * (1.0 - ty.frac) + bottom * ty.frac;
      }
    }
  }
  // Convex combinations can overshoot [0,1] by an ulp.
  return ImageBuffer::clamped(std::move(out));
}

}  // namespace surgiatm
