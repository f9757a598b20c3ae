#include "surgiatm/smoke_sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "surgiatm/errors.hpp"
#include "surgiatm/random.hpp"

namespace surgiatm {

namespace {

class GradientNoise {
 public:
  explicit GradientNoise(std::mt19937_64& gen) {
    std::array<int, 256> p{};
    std::iota(p.begin(), p.end(), 0);
    for (std::size_t i = p.size() - 1; i > 0; --i) {
      std::swap(p[i], p[static_cast<std::size_t>(uniform_index(gen, i + 1))]);
    }
    for (std::size_t i = 0; i < 512; ++i) perm_[i] = p[i & 255];
  }

  // Improved Perlin noise in roughly [-1, 1]; zero on lattice points.
  double operator()(double x, double y) const noexcept {
    const double fx = std::floor(x);
    const double fy = std::floor(y);
    const int xi = static_cast<int>(static_cast<long long>(fx) & 255);
    const int yi = static_cast<int>(static_cast<long long>(fy) & 255);
    const double dx = x - fx;
    const double dy = y - fy;
    const double u = fade(dx);
    const double v = fade(dy);
    const int aa = perm_[perm_[xi] + yi];
    const int ab = perm_[perm_[xi] + yi + 1];
    const int ba = perm_[perm_[xi + 1] + yi];
    const int bb = perm_[perm_[xi + 1] + yi + 1];
    const double x1 = lerp(u, grad(aa, dx, dy), grad(ba, dx - 1.0, dy));
    const double x2 = lerp(u, grad(ab, dx, dy - 1.0), grad(bb, dx - 1.0, dy - 1.0));
    return lerp(v, x1, x2);
  }

 private:
  static double fade(double t) noexcept { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }
  static double lerp(double t, double a, double b) noexcept { return a + t * (b - a); }
  static double grad(int hash, double x, double y) noexcept {
    switch (hash & 7) {
      case 0: return x + y;
      case 1: return -x + y;
      case 2: return x - y;
      case 3: return -x - y;
      case 4: return x;
      case 5: return -x;
      case 6: return y;
      default: return -y;
    }
  }

  std::array<int, 512> perm_{};
};

double rmse_of(double sum_sq, std::size_t n) { return std::sqrt(sum_sq / static_cast<double>(n)); }

}  // namespace

void PerlinSpec::validate() const {
  if (octaves < 1) throw ArgumentError("perlin: octaves must be >= 1");
  if (!(base_frequency > 0.0)) throw ArgumentError("perlin: base_frequency must be positive");
  if (!(persistence > 0.0 && persistence < 1.0)) throw ArgumentError("perlin: persistence must lie in (0,1)");
  if (!(gain >= 0.0 && gain <= 1.0)) throw ArgumentError("perlin: gain must lie in [0,1]");
}

ScalarField perlin_field(int width, int height, const PerlinSpec& spec) {
  spec.validate();
  if (width < 1 || height < 1) throw ArgumentError("perlin: field must be at least 1x1");

  std::mt19937_64 gen(spec.seed);
  const GradientNoise noise(gen);
  std::vector<std::array<double, 2>> offsets(static_cast<std::size_t>(spec.octaves));
  for (auto& o : offsets) o = {uniform_in(gen, 0.0, 256.0), uniform_in(gen, 0.0, 256.0)};

  ScalarField field(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double sum = 0.0;
      double amplitude = 1.0;
      double frequency = spec.base_frequency / width;
      for (int o = 0; o < spec.octaves; ++o) {
        const auto& off = offsets[static_cast<std::size_t>(o)];
        sum += amplitude * noise((x + 0.5) * frequency + off[0], (y + 0.5) * frequency + off[1]);
        amplitude *= spec.persistence;
        frequency *= 2.0;
      }
      field.at(x, y) = sum;
    }
  }

  auto data = field.data();
  const auto [lo_it, hi_it] = std::minmax_element(data.begin(), data.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  for (double& v : data) {
    v = range > 0.0 ? std::clamp((v - lo) / range, 0.0, 1.0) * spec.gain : 0.0;
  }
  return field;
}

SmokeField::SmokeField(ScalarField density_in, Airlight airlight_in)
    : density(std::move(density_in)), airlight(airlight_in) {
  for (double v : density.data()) {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("smoke density outside [0,1]");
  }
}

ImageBuffer composite(const ImageBuffer& clean, const SmokeField& smoke) {
  require_channels(clean, 3, "composite");
  require_same_extent(clean, smoke.density, "composite");
  Raster out(clean.width(), clean.height(), 3);
  auto j = clean.data();
  auto s = smoke.density.data();
  auto o = out.data();
  for (std::size_t p = 0; p < s.size(); ++p) {
    for (std::size_t c = 0; c < 3; ++c) {
      o[3 * p + c] = j[3 * p + c] * (1.0 - s[p]) + smoke.airlight[static_cast<int>(c)] * s[p];
    }
  }
  return ImageBuffer::clamped(std::move(out));
}

ImageBuffer synthetic_tissue(int width, int height, std::uint64_t seed, bool zero_dark_channel) {
  std::mt19937_64 gen(seed);
  const ScalarField body = perlin_field(width, height, {gen(), 5, 2.5, 0.55, 1.0});
  const ScalarField detail = perlin_field(width, height, {gen(), 3, 9.0, 0.5, 1.0});
  const ScalarField vessels = perlin_field(width, height, {gen(), 2, 5.0, 0.4, 1.0});

  Raster out(width, height, 3);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double b = body.at(x, y);
      const double d = detail.at(x, y);
      // Narrow dark ridges where the vessel noise crosses its midline.
      const double ridge = std::exp(-std::pow((vessels.at(x, y) - 0.5) / 0.04, 2.0));
      const double shade = 1.0 - 0.45 * ridge;
      out.at(x, y, 0) = (0.48 + 0.38 * b + 0.08 * d) * shade;
      out.at(x, y, 1) = (0.14 + 0.22 * b * d + 0.06 * d) * shade;
      out.at(x, y, 2) = (0.10 + 0.14 * d + 0.06 * b) * shade;
      if (zero_dark_channel && (x + y) % 2 == 0) out.at(x, y, 2) = 0.0;
    }
  }
  return ImageBuffer::clamped(std::move(out));
}

SmokeSample make_smoke_sample(int width, int height, std::uint64_t seed, const SynthOptions& opts) {
  if (!(opts.gain_min >= 0.0 && opts.gain_min <= opts.gain_max && opts.gain_max <= 1.0)) {
    throw ArgumentError("smoke gain range must satisfy 0 <= min <= max <= 1");
  }
  std::mt19937_64 gen(seed);
  SmokeSample sample;
  sample.tissue_seed = gen();
  sample.spec.seed = gen();
  sample.spec.octaves = opts.octaves;
  sample.spec.base_frequency = opts.base_frequency;
  sample.spec.persistence = opts.persistence;
  sample.spec.gain = uniform_in(gen, opts.gain_min, opts.gain_max);
  sample.airlight = opts.airlight;

  sample.clean = synthetic_tissue(width, height, sample.tissue_seed, opts.zero_dark_channel);
  sample.density = perlin_field(width, height, sample.spec);
  sample.smoky = composite(sample.clean, SmokeField(sample.density, Airlight::uniform(opts.airlight)));
  return sample;
}

std::vector<SmokeSample> make_smoke_dataset(int count, int width, int height, std::uint64_t seed,
                                            const SynthOptions& opts) {
  if (count < 0) throw ArgumentError("sample count must be non-negative");
  std::mt19937_64 gen(seed);
  std::vector<SmokeSample> samples;
  samples.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) samples.push_back(make_smoke_sample(width, height, gen(), opts));
  return samples;
}

StratifiedGain density_stratified_gain(const ImageBuffer& pred_a, const ImageBuffer& pred_b,
                                       const ImageBuffer& truth, const ScalarField& d, int bins) {
  require_same_shape(pred_a, truth, "density_stratified_gain");
  require_same_shape(pred_b, truth, "density_stratified_gain");
  require_same_extent(truth, d, "density_stratified_gain");
  if (bins < 2) throw ArgumentError("density stratification needs at least 2 bins");

  const auto nb = static_cast<std::size_t>(bins);
  StratifiedGain result;
  result.edges.resize(nb + 1);
  for (std::size_t k = 0; k <= nb; ++k) result.edges[k] = static_cast<double>(k) / bins;
  result.counts.assign(nb, 0);
  std::vector<double> sq_a(nb, 0.0);
  std::vector<double> sq_b(nb, 0.0);

  const auto channels = static_cast<std::size_t>(truth.channels());
  auto a = pred_a.data();
  auto b = pred_b.data();
  auto t = truth.data();
  auto dv = d.data();
  for (std::size_t p = 0; p < dv.size(); ++p) {
    const double dc = std::clamp(dv[p], 0.0, 1.0);
    const auto k = std::min(static_cast<std::size_t>(dc * bins), nb - 1);
    ++result.counts[k];
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t i = p * channels + c;
      sq_a[k] += (a[i] - t[i]) * (a[i] - t[i]);
      sq_b[k] += (b[i] - t[i]) * (b[i] - t[i]);
    }
  }

  result.rmse_a.resize(nb);
  result.rmse_b.resize(nb);
  result.gain.resize(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    if (result.counts[k] == 0) continue;
    const double ra = rmse_of(sq_a[k], result.counts[k] * channels);
    const double rb = rmse_of(sq_b[k], result.counts[k] * channels);
    result.rmse_a[k] = ra;
    result.rmse_b[k] = rb;
    if (ra > 0.0) {
      result.gain[k] = (ra - rb) / ra;
    } else {
      result.gain[k] = rb == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
    }
  }
  return result;
}

double trimmed_mean(std::vector<double> values) {
  if (values.size() < 3) throw ArgumentError("trimmed mean needs at least 3 values");
  std::sort(values.begin(), values.end());
  const double sum = std::accumulate(values.begin() + 1, values.end() - 1, 0.0);
  return sum / static_cast<double>(values.size() - 2);
}

}  // namespace surgiatm
