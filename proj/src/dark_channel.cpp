#include "surgiatm/dark_channel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "surgiatm/errors.hpp"
#include "surgiatm/parallel.hpp"

namespace surgiatm {

namespace {

void require_window(int z) {
  if (z < 1 || z % 2 == 0) {
    throw ArgumentError("window size must be odd and >= 1, got " + std::to_string(z));
  }
}

// Scratch buffers for one 1-D pass; reused across lines of a chunk.
struct LineScratch {
  std::vector<double> padded;
  std::vector<double> prefix;
  std::vector<double> suffix;
};

// out[j] = min(in[j - r .. j + r]) with in[] replicated past both ends.
void sliding_min_line(std::span<const double> in, std::span<double> out, int z, LineScratch& s) {
  const std::size_t n = in.size();
  const std::size_t r = static_cast<std::size_t>(z / 2);
  const std::size_t k = static_cast<std::size_t>(z);
  const std::size_t m = n + 2 * r;
  s.padded.resize(m);
  s.prefix.resize(m);
  s.suffix.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t src = i < r ? 0 : std::min(i - r, n - 1);
    s.padded[i] = in[src];
  }
  for (std::size_t start = 0; start < m; start += k) {
    const std::size_t end = std::min(start + k, m);
    s.prefix[start] = s.padded[start];
    for (std::size_t i = start + 1; i < end; ++i) s.prefix[i] = std::min(s.prefix[i - 1], s.padded[i]);
    s.suffix[end - 1] = s.padded[end - 1];
    for (std::size_t i = end - 1; i > start; --i) s.suffix[i - 1] = std::min(s.suffix[i], s.padded[i - 1]);
  }
  for (std::size_t j = 0; j < n; ++j) out[j] = std::min(s.suffix[j], s.prefix[j + k - 1]);
}

}  // namespace

void DcpConfig::validate() const {
  require_window(z);
  if (!(t0 > 0.0 && t0 < 1.0)) throw ArgumentError("t0 must lie in (0,1)");
  if (!(airlight_fraction > 0.0 && airlight_fraction <= 1.0)) {
    throw ArgumentError("airlight_fraction must lie in (0,1]");
  }
}

Airlight::Airlight(std::array<double, 3> a) : a_(a) {
  for (double v : a_) {
    if (!(v > 0.0 && v <= 1.0)) {
      throw DomainError("airlight components must lie in (0,1], got " + std::to_string(v));
    }
  }
}

ScalarField window_min(const ScalarField& field, int z, int workers) {
  require_window(z);
  const int w = field.width();
  const int h = field.height();
  if (z == 1 || w == 0 || h == 0) return field;

  ScalarField rows(w, h);
  parallel_for(static_cast<std::size_t>(h), workers, [&](std::size_t begin, std::size_t end) {
    LineScratch scratch;
    for (std::size_t y = begin; y < end; ++y) {
      sliding_min_line(field.row(static_cast<int>(y)), rows.row(static_cast<int>(y)), z, scratch);
    }
  });

  // Vertical pass on strips of columns, whole row segments at a time, so the
  // inner loops run along contiguous memory.
  constexpr int kStrip = 16;
  const std::size_t strips = static_cast<std::size_t>((w + kStrip - 1) / kStrip);
  const int r = z / 2;
  const int m = h + 2 * r;
  ScalarField out(w, h);
  parallel_for(strips, workers, [&](std::size_t begin, std::size_t end) {
    std::vector<double> prefix(static_cast<std::size_t>(m) * kStrip);
    std::vector<double> suffix(static_cast<std::size_t>(m) * kStrip);
    for (std::size_t strip = begin; strip < end; ++strip) {
      const int x0 = static_cast<int>(strip) * kStrip;
      const int len = std::min(kStrip, w - x0);
      // Padded row i replicates the border rows past both ends.
      const auto padded = [&](int i) { return rows.row(std::clamp(i - r, 0, h - 1)).data() + x0; };
      const auto pre = [&](int i) { return prefix.data() + static_cast<std::size_t>(i) * kStrip; };
      const auto suf = [&](int i) { return suffix.data() + static_cast<std::size_t>(i) * kStrip; };
      for (int start = 0; start < m; start += z) {
        const int stop = std::min(start + z, m);
        std::copy_n(padded(start), len, pre(start));
        for (int i = start + 1; i < stop; ++i) {
          const double* src = padded(i);
          const double* prev = pre(i - 1);
          double* dst = pre(i);
          for (int x = 0; x < len; ++x) dst[x] = std::min(prev[x], src[x]);
        }
        std::copy_n(padded(stop - 1), len, suf(stop - 1));
        for (int i = stop - 1; i > start; --i) {
          const double* src = padded(i - 1);
          const double* next = suf(i);
          double* dst = suf(i - 1);
          for (int x = 0; x < len; ++x) dst[x] = std::min(next[x], src[x]);
        }
      }
      for (int y = 0; y < h; ++y) {
        const double* a = suf(y);
        const double* b = pre(y + z - 1);
        double* dst = out.row(y).data() + x0;
        for (int x = 0; x < len; ++x) dst[x] = std::min(a[x], b[x]);
      }
    }
  });
  return out;
}

ScalarField channel_min(const ImageBuffer& img) {
  const int channels = img.channels();
  ScalarField out(img.width(), img.height());
  auto d = img.data();
  auto o = out.data();
  if (channels == 3) {
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = std::min({d[3 * i], d[3 * i + 1], d[3 * i + 2]});
    return out;
  }
  for (std::size_t i = 0; i < o.size(); ++i) {
    double m = d[i * channels];
    for (int c = 1; c < channels; ++c) m = std::min(m, d[i * channels + c]);
    o[i] = m;
  }
  return out;
}

ScalarField dark_channel(const ImageBuffer& img, const Airlight& airlight, int z, int workers) {
  require_channels(img, 3, "dark_channel");
  require_window(z);
  ScalarField normalized(img.width(), img.height());
  auto d = img.data();
  auto o = normalized.data();
  for (std::size_t i = 0; i < o.size(); ++i) {
    double m = d[3 * i] / airlight[0];
    m = std::min(m, d[3 * i + 1] / airlight[1]);
    m = std::min(m, d[3 * i + 2] / airlight[2]);
    o[i] = m;
  }
  ScalarField out = window_min(normalized, z, workers);
  for (double& v : out.data()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

ScalarField denorm_dark_channel(const ImageBuffer& img, int z, int workers) {
  require_channels(img, 3, "denorm_dark_channel");
  return window_min(channel_min(img), z, workers);
}

Airlight estimate_airlight(const ImageBuffer& img, int z, double fraction) {
  require_channels(img, 3, "estimate_airlight");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ArgumentError("airlight fraction must lie in (0,1]");
  const std::size_t n = img.pixel_count();
  if (n == 0) throw ArgumentError("cannot estimate airlight of an empty image");

  const ScalarField dark = denorm_dark_channel(img, z);
  auto dv = dark.data();
  const auto take = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n))), 1, n);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return dv[a] != dv[b] ? dv[a] > dv[b] : a < b;
                    });

  std::array<double, 3> sum{0.0, 0.0, 0.0};
  auto d = img.data();
  for (std::size_t k = 0; k < take; ++k) {
    for (int c = 0; c < 3; ++c) sum[static_cast<std::size_t>(c)] += d[3 * order[k] + static_cast<std::size_t>(c)];
  }
  std::array<double, 3> a{};
  for (std::size_t c = 0; c < 3; ++c) {
    a[c] = std::max(sum[c] / static_cast<double>(take), kAirlightFloor);
  }
  return Airlight(a);
}

ImageBuffer dcp_restore(const ImageBuffer& img, const DcpConfig& cfg, int workers) {
  cfg.validate();
  return dcp_restore(img, cfg, estimate_airlight(img, cfg.z, cfg.airlight_fraction), workers);
}

ImageBuffer dcp_restore(const ImageBuffer& img, const DcpConfig& cfg, const Airlight& airlight,
                        int workers) {
  cfg.validate();
  const ScalarField dark = dark_channel(img, airlight, cfg.z, workers);
  Raster out(img.width(), img.height(), 3);
  auto in = img.data();
  auto o = out.data();
  auto dv = dark.data();
  for (std::size_t i = 0; i < dv.size(); ++i) {
    const double t = std::max(1.0 - dv[i], cfg.t0);
    // (I - A)/t + A rewritten so that t == 1 returns I exactly.
    const double gain = (1.0 - t) / t;
    for (std::size_t c = 0; c < 3; ++c) {
      const double a = airlight[static_cast<int>(c)];
      o[3 * i + c] = in[3 * i + c] + (in[3 * i + c] - a) * gain;
    }
  }
  return ImageBuffer::clamped(std::move(out));
}

}  // namespace surgiatm
