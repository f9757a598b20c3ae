#pragma once

#include "surgiatm/image.hpp"

namespace surgiatm {

/// Bilinear resampling with pixel-center alignment and edge clamping.
/// Same-size requests return a bitwise copy. Zero target dimension -> ArgumentError.
ImageBuffer resize_bilinear(const ImageBuffer& img, int width, int height);

}  // namespace surgiatm
