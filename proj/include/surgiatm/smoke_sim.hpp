#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "surgiatm/dark_channel.hpp"
#include "surgiatm/image.hpp"

namespace surgiatm {

/// Fractal gradient-noise parameters.
struct PerlinSpec {
  std::uint64_t seed = 0;
  int octaves = 4;
  double base_frequency = 3.0;  ///< lattice cycles across the frame width
  double persistence = 0.5;     ///< amplitude ratio between successive octaves
  double gain = 1.0;            ///< output is mapped onto [0, gain]

  void validate() const;
};

/// Octave-summed Perlin noise mapped affinely onto [0, gain].
ScalarField perlin_field(int width, int height, const PerlinSpec& spec);

/// Smoke density s (= 1 - t) plus the smoke color.
struct SmokeField {
  SmokeField(ScalarField density, Airlight airlight);

  ScalarField density;
  Airlight airlight;
};

inline constexpr double kDefaultSmokeAirlight = 0.92;

/// I = J (1 - s) + A s per channel.
ImageBuffer composite(const ImageBuffer& clean, const SmokeField& smoke);

/// Procedural tissue-like clean frame (reddish, textured). With
/// `zero_dark_channel` the blue channel is zeroed on a period-2 checkerboard,
/// so every window with z >= 3 has dark channel exactly 0.
ImageBuffer synthetic_tissue(int width, int height, std::uint64_t seed, bool zero_dark_channel = false);

struct SynthOptions {
  int octaves = 4;
  double base_frequency = 3.0;
  double persistence = 0.5;
  double gain_min = 0.3;
  double gain_max = 0.9;
  double airlight = kDefaultSmokeAirlight;
  bool zero_dark_channel = false;
};

/// One generated training/evaluation pair and how it was made.
struct SmokeSample {
  ImageBuffer clean;
  ImageBuffer smoky;
  ScalarField density;
  PerlinSpec spec;
  double airlight = kDefaultSmokeAirlight;
  std::uint64_t tissue_seed = 0;
};

/// Deterministic in (width, height, seed, options): tissue seed, noise seed
/// and gain are all drawn from one generator seeded with `seed`.
SmokeSample make_smoke_sample(int width, int height, std::uint64_t seed, const SynthOptions& opts = {});

/// `count` samples with seeds derived from `seed`.
std::vector<SmokeSample> make_smoke_dataset(int count, int width, int height, std::uint64_t seed,
                                            const SynthOptions& opts = {});

/// Relative RMSE reduction of pred_b over pred_a, stratified by dark-channel value.
struct StratifiedGain {
  std::vector<double> edges;
  std::vector<std::size_t> counts;        ///< pixels per bin
  std::vector<std::optional<double>> rmse_a;
  std::vector<std::optional<double>> rmse_b;
  std::vector<std::optional<double>> gain;  ///< absent for empty bins
};

/// Pixels are binned by `d` on uniform bins over [0,1]; per bin
/// gain = (RMSE_a - RMSE_b) / RMSE_a, with 0/0 read as 0 and x/0 as -inf.
StratifiedGain density_stratified_gain(const ImageBuffer& pred_a, const ImageBuffer& pred_b,
                                       const ImageBuffer& truth, const ScalarField& d, int bins);

/// Mean after dropping one maximum and one minimum; needs >= 3 values.
double trimmed_mean(std::vector<double> values);

}  // namespace surgiatm
