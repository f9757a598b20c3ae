#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "surgiatm/image.hpp"

namespace surgiatm {

struct LaplaceParams {
  double mu = 0.0;
  double b = 1.0;  ///< scale, > 0; variance is 2 b^2
};

struct GaussParams {
  double mu = 0.0;
  double sigma = 1.0;
};

/// Smallest scale / standard deviation a fitter will report.
inline constexpr double kScaleFloor = 1e-9;

/// Signed per-element error pred - truth.
Raster error_field(const ImageBuffer& pred, const ImageBuffer& truth);

/// Maximum-likelihood Laplace fit: mu = lower median, b = mean |x - mu|.
/// Fewer than two samples, or all samples equal -> EstimationError.
LaplaceParams fit_laplace(std::span<const double> samples);

/// Mean and population standard deviation, same degeneracy rules as fit_laplace.
GaussParams fit_gauss(std::span<const double> samples);

double laplace_cdf(double x, const LaplaceParams& p) noexcept;
double gauss_cdf(double x, const GaussParams& p) noexcept;

/// Probability masses over uniform bins; `edges` has mass.size() + 1 entries.
struct Histogram {
  std::vector<double> edges;
  std::vector<double> mass;
};

/// Uniform bins spanning [min, max] of the samples, normalized to unit mass.
Histogram empirical_histogram(std::span<const double> samples, int bins);

/// Fitted densities discretized by CDF differences on `edges`; the tails
/// beyond the outer edges fold into the first and last bins so the masses sum to 1.
Histogram discretize_laplace(const LaplaceParams& p, std::span<const double> edges);
Histogram discretize_gauss(const GaussParams& p, std::span<const double> edges);

/// Jensen-Shannon divergence in bits, in [0,1]. Unequal lengths or masses
/// not summing to 1 (within 1e-9) -> ArgumentError.
double js_divergence(std::span<const double> p, std::span<const double> q);

struct DistributionFitReport {
  LaplaceParams laplace;
  GaussParams gauss;
  double js_gauss = 0.0;
  double js_laplace = 0.0;
  std::size_t samples = 0;
  int bins = 0;
};

/// Fit both families and score each against the empirical histogram.
/// Requires at least kMinFitReportSamples samples.
DistributionFitReport distribution_fit_report(std::span<const double> samples, int bins);
inline constexpr std::size_t kMinFitReportSamples = 1000;

/// Minimizer over W in [0,1] of Var + E^2 for the mixture W*e1 + (1-W)*e2 of
/// independent Laplace errors. Nonpositive scales -> ArgumentError.
double optimal_gate(const LaplaceParams& physics, const LaplaceParams& learned);
/// Same closed form before clipping.
double optimal_gate_unclipped(const LaplaceParams& physics, const LaplaceParams& learned);

/// Objective minimized by optimal_gate: 2(W^2 b1^2 + (1-W)^2 b2^2) + (W mu1 + (1-W) mu2)^2.
double gate_objective(double w, const LaplaceParams& physics, const LaplaceParams& learned) noexcept;

struct ErrorBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
  std::optional<LaplaceParams> laplace;
  std::optional<GaussParams> gauss;

  double midpoint() const noexcept { return 0.5 * (lower + upper); }
};

/// Error fits conditioned on dark-channel value.
struct BinnedErrorStats {
  std::vector<double> edges;
  std::vector<ErrorBin> bins;
};

inline constexpr int kDefaultErrorBins = 20;
inline constexpr std::size_t kDefaultMinBinSamples = 100;

/// Accumulates (dark channel, error) samples into uniform bins on [0,1].
class ErrorBinner {
 public:
  explicit ErrorBinner(int bins = kDefaultErrorBins);

  void add(double dark, double error);
  /// Adds every element of `errors`, conditioned on the dark value of its pixel.
  void add_frame(const ScalarField& dark, const Raster& errors);

  int bin_count() const noexcept { return static_cast<int>(samples_.size()); }
  int bin_of(double dark) const noexcept;
  const std::vector<double>& samples(int bin) const { return samples_.at(static_cast<std::size_t>(bin)); }
  std::vector<double> edges() const;

  /// Fits every bin holding at least `min_count` non-degenerate samples.
  BinnedErrorStats finalize(std::size_t min_count = kDefaultMinBinSamples) const;

 private:
  std::vector<std::vector<double>> samples_;
};

struct GateBin {
  double d_mid = 0.0;
  std::optional<double> w_star;
};

struct GateProfile {
  std::vector<GateBin> bins;

  /// Populated bins only, as (d_mid, w_star) pairs.
  std::vector<std::pair<double, double>> populated() const;
};

/// Per-bin optimal gate; bins missing Laplace fits on either side stay absent.
/// Different binnings -> ArgumentError.
GateProfile gate_profile(const BinnedErrorStats& physics, const BinnedErrorStats& learned);

/// Percentile bootstrap interval for one bin's W*: both sample sets are
/// resampled with replacement, refit, and gated.
std::pair<double, double> bootstrap_gate_interval(std::span<const double> physics_errors,
                                                  std::span<const double> learned_errors,
                                                  int resamples, std::uint64_t seed,
                                                  double level = 0.95);

/// Product-moment correlation. Unequal lengths -> ArgumentError; fewer than
/// two samples or zero variance -> EstimationError.
double pearson(std::span<const double> xs, std::span<const double> ys);

/// Deployed gate approximation 1 - d.
ScalarField approx_gate(const ScalarField& d);

}  // namespace surgiatm
