#pragma once

#include <array>

#include "surgiatm/image.hpp"

namespace surgiatm {

/// Classic dark-channel-prior restoration settings.
struct DcpConfig {
  int z = 15;                       ///< square window side, odd
  double t0 = 0.1;                  ///< transmission floor, (0,1)
  double airlight_fraction = 0.001; ///< share of brightest dark-channel pixels used for A

  /// Throws ArgumentError if any field is out of range.
  void validate() const;
};

/// Per-channel atmospheric light; every component strictly positive.
class Airlight {
 public:
  explicit Airlight(std::array<double, 3> a);
  static Airlight uniform(double v) { return Airlight({v, v, v}); }

  double operator[](int c) const noexcept { return a_[static_cast<std::size_t>(c)]; }
  const std::array<double, 3>& values() const noexcept { return a_; }

  friend bool operator==(const Airlight&, const Airlight&) = default;

 private:
  std::array<double, 3> a_;
};

/// Floor applied per channel by estimate_airlight.
inline constexpr double kAirlightFloor = 1e-3;

/// z x z sliding minimum with replicated borders, separable (rows then
/// columns) using the van Herk / Gil-Werman block decomposition: three
/// comparisons per sample regardless of z. Even or non-positive z -> ArgumentError.
ScalarField window_min(const ScalarField& field, int z, int workers = 1);

/// Per-pixel channel minimum, no windowing.
ScalarField channel_min(const ImageBuffer& img);

/// Airlight-normalized dark channel: window min of min_c I/A, clamped to [0,1].
ScalarField dark_channel(const ImageBuffer& img, const Airlight& airlight, int z, int workers = 1);

/// Airlight-free dark channel: window min of min_c I on raw intensities.
ScalarField denorm_dark_channel(const ImageBuffer& img, int z, int workers = 1);

/// Mean input color over the top `fraction` of pixels ranked by the
/// airlight-free dark channel (ties broken by raster order), floored at
/// kAirlightFloor per channel.
Airlight estimate_airlight(const ImageBuffer& img, int z, double fraction);

/// J = (I - A) / max(1 - D, t0) + A, clamped to [0,1]. Airlight estimated from `img`.
ImageBuffer dcp_restore(const ImageBuffer& img, const DcpConfig& cfg, int workers = 1);
/// Same, with a caller-supplied airlight.
ImageBuffer dcp_restore(const ImageBuffer& img, const DcpConfig& cfg, const Airlight& airlight,
                        int workers = 1);

}  // namespace surgiatm
