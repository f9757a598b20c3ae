#include "surgiatm/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "surgiatm/errors.hpp"

namespace surgiatm {

namespace fs = std::filesystem;

namespace {

std::string lower_extension(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return ext;
}

bool is_netpbm(const fs::path& path) {
  const std::string ext = lower_extension(path);
  return ext == ".ppm" || ext == ".pgm";
}

ImageBuffer from_bytes(int width, int height, int channels, const std::vector<std::uint8_t>& bytes) {
  Raster r(width, height, channels);
  auto out = r.data();
  for (std::size_t i = 0; i < bytes.size(); ++i) out[i] = static_cast<double>(bytes[i]) / 255.0;
  return ImageBuffer(std::move(r));
}

std::vector<std::uint8_t> to_bytes(const ImageBuffer& img) {
  std::vector<std::uint8_t> bytes(img.size());
  auto in = img.data();
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = quantize_unit(in[i]);
  return bytes;
}

// Netpbm header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
  std::string token;
  int ch = in.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
    } else if (std::isspace(ch)) {
      if (!token.empty()) break;
    } else {
      token.push_back(static_cast<char>(ch));
    }
    ch = in.get();
  }
  return token;
}

int parse_header_int(const std::string& token, const fs::path& path) {
  if (token.empty() || !std::all_of(token.begin(), token.end(), ::isdigit)) {
    throw FormatError("malformed netpbm header in " + path.string());
  }
  return std::stoi(token);
}

ImageBuffer load_netpbm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string magic = next_token(in);
  int channels = 0;
  if (magic == "P6") {
    channels = 3;
  } else if (magic == "P5") {
    channels = 1;
  } else {
    throw FormatError("unsupported netpbm variant '" + magic + "' in " + path.string());
  }
  const int width = parse_header_int(next_token(in), path);
  const int height = parse_header_int(next_token(in), path);
  const int maxval = parse_header_int(next_token(in), path);
  if (maxval != 255) {
    throw FormatError("only 8-bit netpbm (maxval 255) is supported: " + path.string());
  }
  if (width < 1 || height < 1) throw FormatError("empty netpbm raster in " + path.string());
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(width) * height * channels);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw IoError("truncated netpbm payload in " + path.string());
  }
  return from_bytes(width, height, channels, bytes);
}

void save_netpbm(const ImageBuffer& img, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << (img.channels() == 3 ? "P6" : "P5") << '\n'
      << img.width() << ' ' << img.height() << "\n255\n";
  const auto bytes = to_bytes(img);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

struct PngImageGuard {
  png_image image{};
  PngImageGuard() {
    image.version = PNG_IMAGE_VERSION;
  }
  ~PngImageGuard() { png_image_free(&image); }
  PngImageGuard(const PngImageGuard&) = delete;
  PngImageGuard& operator=(const PngImageGuard&) = delete;
};

ImageBuffer load_png(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("no such file: " + path.string());
  PngImageGuard guard;
  png_image& image = guard.image;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    throw IoError("cannot decode " + path.string() + ": " + image.message);
  }
  if (image.format & PNG_FORMAT_FLAG_LINEAR) {
    throw FormatError("16-bit PNG is not supported: " + path.string());
  }
  if (image.format & PNG_FORMAT_FLAG_ALPHA) {
    throw FormatError("PNG with alpha is not supported: " + path.string());
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int channels = color ? 3 : 1;
  std::vector<std::uint8_t> bytes(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, bytes.data(), 0, nullptr)) {
    throw IoError("cannot decode " + path.string() + ": " + image.message);
  }
  return from_bytes(static_cast<int>(image.width), static_cast<int>(image.height), channels, bytes);
}

void save_png(const ImageBuffer& img, const fs::path& path) {
  PngImageGuard guard;
  png_image& image = guard.image;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = img.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const auto bytes = to_bytes(img);
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, bytes.data(), 0, nullptr)) {
    throw IoError("cannot write " + path.string() + ": " + image.message);
  }
}

}  // namespace

std::uint8_t quantize_unit(double v) noexcept {
  const double scaled = std::nearbyint(std::clamp(v, 0.0, 1.0) * 255.0);
  return static_cast<std::uint8_t>(scaled);
}

bool is_image_path(const fs::path& path) {
  const std::string ext = lower_extension(path);
  return ext == ".png" || ext == ".ppm" || ext == ".pgm";
}

ImageBuffer load_image(const fs::path& path) {
  return is_netpbm(path) ? load_netpbm(path) : load_png(path);
}

void save_image(const ImageBuffer& img, const fs::path& path) {
  if (img.width() < 1 || img.height() < 1) throw ArgumentError("cannot save an empty image");
  if (is_netpbm(path)) {
    if ((lower_extension(path) == ".ppm") != (img.channels() == 3)) {
      throw ArgumentError(".ppm holds RGB and .pgm holds gray: " + path.string());
    }
    save_netpbm(img, path);
  } else {
    save_png(img, path);
  }
}

}  // namespace surgiatm
