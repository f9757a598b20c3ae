#include "surgiatm/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "surgiatm/errors.hpp"

namespace surgiatm {

namespace {

std::size_t checked_extent(int width, int height, int channels) {
  if (width < 0 || height < 0 || channels < 1) {
    throw ArgumentError("raster dimensions must be non-negative with at least one channel");
  }
  return static_cast<std::size_t>(width) * static_cast<std::size_t>(height) *
         static_cast<std::size_t>(channels);
}

std::string shape_string(int w, int h, int c) {
  return std::to_string(w) + "x" + std::to_string(h) + "x" + std::to_string(c);
}

}  // namespace

Raster::Raster(int width, int height, int channels, double fill)
    : width_(width),
      height_(height),
      channels_(channels),
      data_(checked_extent(width, height, channels), fill) {}

Raster::Raster(int width, int height, int channels, std::vector<double> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  if (data_.size() != checked_extent(width, height, channels)) {
    throw ShapeError("raster data length " + std::to_string(data_.size()) +
                     " does not match " + shape_string(width, height, channels));
  }
}

ImageBuffer::ImageBuffer(int width, int height, int channels, double fill)
    : ImageBuffer(Raster(width, height, channels, fill)) {}

ImageBuffer::ImageBuffer(Raster raster) : raster_(std::move(raster)) {
  if (raster_.channels() != 1 && raster_.channels() != 3) {
    throw ArgumentError("image must have 1 or 3 channels, got " +
                        std::to_string(raster_.channels()));
  }
  for (double v : raster_.data()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw DomainError("image intensity outside [0,1]: " + std::to_string(v));
    }
  }
}

ImageBuffer ImageBuffer::clamped(Raster raster) {
  for (double& v : raster.data()) {
    if (!std::isfinite(v)) throw DomainError("non-finite intensity cannot be clamped");
    v = std::clamp(v, 0.0, 1.0);
  }
  return ImageBuffer(std::move(raster));
}

ScalarField::ScalarField(int width, int height, double fill)
    : width_(width), height_(height), data_(checked_extent(width, height, 1), fill) {}

ScalarField::ScalarField(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (data_.size() != checked_extent(width, height, 1)) {
    throw ShapeError("field data length " + std::to_string(data_.size()) +
                     " does not match " + shape_string(width, height, 1));
  }
}

void require_same_shape(const Raster& a, const Raster& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape " +
                     shape_string(a.width(), a.height(), a.channels()) + " vs " +
                     shape_string(b.width(), b.height(), b.channels()));
  }
}

void require_same_shape(const ImageBuffer& a, const ImageBuffer& b, const char* what) {
  require_same_shape(a.raster(), b.raster(), what);
}

void require_same_extent(const ImageBuffer& img, const ScalarField& field, const char* what) {
  if (img.width() != field.width() || img.height() != field.height()) {
    throw ShapeError(std::string(what) + ": image " + std::to_string(img.width()) + "x" +
                     std::to_string(img.height()) + " vs field " +
                     std::to_string(field.width()) + "x" + std::to_string(field.height()));
  }
}

void require_channels(const ImageBuffer& img, int channels, const char* what) {
  if (img.channels() != channels) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(channels) +
                     " channels, got " + std::to_string(img.channels()));
  }
}

}  // namespace surgiatm
