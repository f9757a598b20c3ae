#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace surgiatm {

/// Unconstrained H x W x C raster of doubles, interleaved row-major.
///
/// Carries quantities that may leave [0,1]: raw predictor outputs, signed
/// error fields, gradients and the unclamped layer output.
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, int channels, double fill = 0.0);
  Raster(int width, int height, int channels, std::vector<double> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }

  std::size_t index(int x, int y, int c) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(c);
  }
  double& at(int x, int y, int c) noexcept { return data_[index(x, y, c)]; }
  double at(int x, int y, int c) const noexcept { return data_[index(x, y, c)]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool same_shape(const Raster& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_ &&
           channels_ == other.channels_;
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// Normalized intensity image: 1 or 3 channels, every sample finite and in [0,1].
class ImageBuffer {
 public:
  ImageBuffer() = default;
  ImageBuffer(int width, int height, int channels, double fill = 0.0);
  /// Validates range and channel count; throws DomainError / ArgumentError.
  explicit ImageBuffer(Raster raster);

  /// Clamps into [0,1]. Non-finite samples still raise DomainError.
  static ImageBuffer clamped(Raster raster);

  int width() const noexcept { return raster_.width(); }
  int height() const noexcept { return raster_.height(); }
  int channels() const noexcept { return raster_.channels(); }
  std::size_t size() const noexcept { return raster_.size(); }
  std::size_t pixel_count() const noexcept { return raster_.pixel_count(); }
  double at(int x, int y, int c) const noexcept { return raster_.at(x, y, c); }
  std::span<const double> data() const noexcept { return raster_.data(); }
  const Raster& raster() const noexcept { return raster_; }

  bool same_shape(const ImageBuffer& other) const noexcept {
    return raster_.same_shape(other.raster_);
  }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  Raster raster_;
};

/// Single-channel H x W field (dark channels, transmission, gates, densities).
class ScalarField {
 public:
  ScalarField() = default;
  ScalarField(int width, int height, double fill = 0.0);
  ScalarField(int width, int height, std::vector<double> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& at(int x, int y) noexcept {
    return data_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                 static_cast<std::size_t>(x)];
  }
  double at(int x, int y) const noexcept {
    return data_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                 static_cast<std::size_t>(x)];
  }
  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  std::span<double> row(int y) noexcept {
    return std::span<double>(data_).subspan(static_cast<std::size_t>(y) * width_, width_);
  }
  std::span<const double> row(int y) const noexcept {
    return std::span<const double>(data_).subspan(static_cast<std::size_t>(y) * width_, width_);
  }

  friend bool operator==(const ScalarField&, const ScalarField&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

/// Throws ShapeError with `what` as context when the shapes differ.
void require_same_shape(const Raster& a, const Raster& b, const char* what);
void require_same_shape(const ImageBuffer& a, const ImageBuffer& b, const char* what);
void require_same_extent(const ImageBuffer& img, const ScalarField& field, const char* what);
void require_channels(const ImageBuffer& img, int channels, const char* what);

}  // namespace surgiatm
