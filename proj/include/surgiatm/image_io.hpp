#pragma once

#include <cstdint>
#include <filesystem>

#include "surgiatm/image.hpp"

namespace surgiatm {

/// Reads an 8-bit PNG (gray or RGB, palette expanded) or binary PPM/PGM.
/// Samples map to v / 255. Alpha, 16-bit and maxval != 255 raise FormatError.
ImageBuffer load_image(const std::filesystem::path& path);

/// Writes 8-bit PNG, or P6/P5 when the extension is .ppm/.pgm.
/// Quantization rounds half to even.
void save_image(const ImageBuffer& img, const std::filesystem::path& path);

/// The quantization rule used by save_image.
std::uint8_t quantize_unit(double v) noexcept;

/// True for extensions load_image understands (.png, .ppm, .pgm; case-insensitive).
bool is_image_path(const std::filesystem::path& path);

}  // namespace surgiatm
