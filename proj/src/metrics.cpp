#include "surgiatm/metrics.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "surgiatm/errors.hpp"

namespace surgiatm {

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimK1 = 0.01;
constexpr double kSsimK2 = 0.03;

double mse(const ImageBuffer& a, const ImageBuffer& b) {
  require_same_shape(a, b, "metric");
  if (a.size() == 0) throw ArgumentError("metric on an empty image");
  auto x = a.data();
  auto y = b.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sum += (x[i] - y[i]) * (x[i] - y[i]);
  return sum / static_cast<double>(x.size());
}

std::array<double, kSsimWindow> gaussian_taps() {
  std::array<double, kSsimWindow> taps{};
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - kSsimWindow / 2;
    taps[static_cast<std::size_t>(i)] = std::exp(-(d * d) / (2.0 * kSsimSigma * kSsimSigma));
    sum += taps[static_cast<std::size_t>(i)];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

// Valid-mode separable filtering of a w x h plane; output (w-10) x (h-10).
std::vector<double> filter_valid(const std::vector<double>& src, int w, int h,
                                 const std::array<double, kSsimWindow>& taps) {
  const int ow = w - kSsimWindow + 1;
  const int oh = h - kSsimWindow + 1;
  std::vector<double> rows(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) acc += taps[static_cast<std::size_t>(k)] * src[static_cast<std::size_t>(y) * w + x + k];
      rows[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) acc += taps[static_cast<std::size_t>(k)] * rows[static_cast<std::size_t>(y + k) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  return out;
}

double deg(double rad) noexcept { return rad * 180.0 / std::numbers::pi; }
double rad(double degrees) noexcept { return degrees * std::numbers::pi / 180.0; }

}  // namespace

std::vector<double> luma(const ImageBuffer& img) {
  std::vector<double> y(img.pixel_count());
  auto d = img.data();
  if (img.channels() == 1) {
    y.assign(d.begin(), d.end());
    return y;
  }
  for (std::size_t p = 0; p < y.size(); ++p) {
    y[p] = 0.299 * d[3 * p] + 0.587 * d[3 * p + 1] + 0.114 * d[3 * p + 2];
  }
  return y;
}

double rmse(const ImageBuffer& a, const ImageBuffer& b) { return std::sqrt(mse(a, b)); }

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
  const double m = mse(a, b);
  if (m == 0.0) return kPsnrCap;
  return 10.0 * std::log10(1.0 / m);
}

double ssim(const ImageBuffer& a, const ImageBuffer& b) {
  require_same_shape(a, b, "ssim");
  const int w = a.width();
  const int h = a.height();
  if (w < kSsimWindow || h < kSsimWindow) {
    throw ArgumentError("ssim needs frames of at least 11x11");
  }
  const auto x = luma(a);
  const auto y = luma(b);
  std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto taps = gaussian_taps();
  const auto mx = filter_valid(x, w, h, taps);
  const auto my = filter_valid(y, w, h, taps);
  const auto sxx = filter_valid(xx, w, h, taps);
  const auto syy = filter_valid(yy, w, h, taps);
  const auto sxy = filter_valid(xy, w, h, taps);

  constexpr double c1 = (kSsimK1 * 1.0) * (kSsimK1 * 1.0);
  constexpr double c2 = (kSsimK2 * 1.0) * (kSsimK2 * 1.0);
  double total = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = sxx[i] - mx[i] * mx[i];
    const double vy = syy[i] - my[i] * my[i];
    const double cov = sxy[i] - mx[i] * my[i];
    const double num = (2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2);
    const double den = (mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2);
    total += num / den;
  }
  return total / static_cast<double>(mx.size());
}

double delta_e2000(const LabPixel& x, const LabPixel& y) noexcept {
  const double c1 = std::hypot(x.a, x.b);
  const double c2 = std::hypot(y.a, y.b);
  const double c_bar7 = std::pow(0.5 * (c1 + c2), 7.0);
  const double g = 0.5 * (1.0 - std::sqrt(c_bar7 / (c_bar7 + std::pow(25.0, 7.0))));
  const double a1p = (1.0 + g) * x.a;
  const double a2p = (1.0 + g) * y.a;
  const double c1p = std::hypot(a1p, x.b);
  const double c2p = std::hypot(a2p, y.b);

  const auto hue = [](double b, double ap) {
    if (b == 0.0 && ap == 0.0) return 0.0;
    double h = deg(std::atan2(b, ap));
    return h < 0.0 ? h + 360.0 : h;
  };
  const double h1p = hue(x.b, a1p);
  const double h2p = hue(y.b, a2p);

  const double dLp = y.L - x.L;
  const double dCp = c2p - c1p;
  double dhp = 0.0;
  if (c1p * c2p != 0.0) {
    dhp = h2p - h1p;
    if (dhp > 180.0) {
      dhp -= 360.0;
    } else if (dhp < -180.0) {
      dhp += 360.0;
    }
  }
  const double dHp = 2.0 * std::sqrt(c1p * c2p) * std::sin(rad(dhp / 2.0));

  const double l_bar = 0.5 * (x.L + y.L);
  const double c_bar_p = 0.5 * (c1p + c2p);
  double h_bar_p = h1p + h2p;
  if (c1p * c2p != 0.0) {
    if (std::abs(h1p - h2p) <= 180.0) {
      h_bar_p *= 0.5;
    } else if (h1p + h2p < 360.0) {
      h_bar_p = 0.5 * (h1p + h2p + 360.0);
    } else {
      h_bar_p = 0.5 * (h1p + h2p - 360.0);
    }
  }

  const double t = 1.0 - 0.17 * std::cos(rad(h_bar_p - 30.0)) + 0.24 * std::cos(rad(2.0 * h_bar_p)) +
                   0.32 * std::cos(rad(3.0 * h_bar_p + 6.0)) - 0.20 * std::cos(rad(4.0 * h_bar_p - 63.0));
  const double d_theta = 30.0 * std::exp(-std::pow((h_bar_p - 275.0) / 25.0, 2.0));
  const double c_bar_p7 = std::pow(c_bar_p, 7.0);
  const double rc = 2.0 * std::sqrt(c_bar_p7 / (c_bar_p7 + std::pow(25.0, 7.0)));
  const double l50 = (l_bar - 50.0) * (l_bar - 50.0);
  const double sl = 1.0 + 0.015 * l50 / std::sqrt(20.0 + l50);
  const double sc = 1.0 + 0.045 * c_bar_p;
  const double sh = 1.0 + 0.015 * c_bar_p * t;
  const double rt = -std::sin(rad(2.0 * d_theta)) * rc;

  const double tl = dLp / sl;
  const double tc = dCp / sc;
  const double th = dHp / sh;
  return std::sqrt(tl * tl + tc * tc + th * th + rt * tc * th);
}

double ciede2000(const ImageBuffer& a, const ImageBuffer& b) {
  require_same_shape(a, b, "ciede2000");
  require_channels(a, 3, "ciede2000");
  const LabRaster la = srgb_to_lab(a);
  const LabRaster lb = srgb_to_lab(b);
  if (la.pixels.empty()) throw ArgumentError("ciede2000 on an empty image");
  double sum = 0.0;
  for (std::size_t i = 0; i < la.pixels.size(); ++i) sum += delta_e2000(la.pixels[i], lb.pixels[i]);
  return sum / static_cast<double>(la.pixels.size());
}

MetricReport evaluate_metrics(const ImageBuffer& pred, const ImageBuffer& truth) {
  MetricReport r;
  r.ciede2000 = ciede2000(pred, truth);
  r.psnr = psnr(pred, truth);
  r.rmse = rmse(pred, truth);
  r.ssim = ssim(pred, truth);
  return r;
}

MetricReport mean_report(std::span<const MetricReport> reports) {
  MetricReport m;
  if (reports.empty()) return m;
  for (const auto& r : reports) {
    m.ciede2000 += r.ciede2000;
    m.psnr += r.psnr;
    m.rmse += r.rmse;
    m.ssim += r.ssim;
  }
  const double n = static_cast<double>(reports.size());
  m.ciede2000 /= n;
  m.psnr /= n;
  m.rmse /= n;
  m.ssim /= n;
  return m;
}

}  // namespace surgiatm
