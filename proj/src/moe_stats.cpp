#include "surgiatm/moe_stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "surgiatm/errors.hpp"
#include "surgiatm/random.hpp"

namespace surgiatm {

namespace {

void require_fit_samples(std::span<const double> samples, const char* what) {
  if (samples.size() < 2) {
    throw EstimationError(std::string(what) + ": need at least two samples, got " +
                          std::to_string(samples.size()));
  }
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  if (*lo == *hi) throw EstimationError(std::string(what) + ": all samples are identical");
  for (double v : samples) {
    if (!std::isfinite(v)) throw EstimationError(std::string(what) + ": non-finite sample");
  }
}

void require_scales(const LaplaceParams& p1, const LaplaceParams& p2) {
  if (!(p1.b > 0.0) || !(p2.b > 0.0)) throw ArgumentError("Laplace scales must be positive");
}

Histogram discretize(std::span<const double> edges, auto&& cdf) {
  if (edges.size() < 2) throw ArgumentError("histogram needs at least one bin");
  Histogram h;
  h.edges.assign(edges.begin(), edges.end());
  const std::size_t bins = edges.size() - 1;
  h.mass.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    const double lo = k == 0 ? 0.0 : cdf(edges[k]);
    const double hi = k + 1 == bins ? 1.0 : cdf(edges[k + 1]);
    h.mass[k] = std::max(hi - lo, 0.0);
  }
  return h;
}

}  // namespace

Raster error_field(const ImageBuffer& pred, const ImageBuffer& truth) {
  require_same_shape(pred, truth, "error_field");
  Raster err(pred.width(), pred.height(), pred.channels());
  auto p = pred.data();
  auto t = truth.data();
  auto e = err.data();
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = p[i] - t[i];
  return err;
}

LaplaceParams fit_laplace(std::span<const double> samples) {
  require_fit_samples(samples, "fit_laplace");
  std::vector<double> sorted(samples.begin(), samples.end());
  const std::size_t mid = (sorted.size() - 1) / 2;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid), sorted.end());
  const double mu = sorted[mid];
  double sum = 0.0;
  for (double v : samples) sum += std::abs(v - mu);
  return {mu, std::max(sum / static_cast<double>(samples.size()), kScaleFloor)};
}

GaussParams fit_gauss(std::span<const double> samples) {
  require_fit_samples(samples, "fit_gauss");
  const double n = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  return {mean, std::max(std::sqrt(ss / n), kScaleFloor)};
}

double laplace_cdf(double x, const LaplaceParams& p) noexcept {
  const double z = (x - p.mu) / p.b;
  return z < 0.0 ? 0.5 * std::exp(z) : 1.0 - 0.5 * std::exp(-z);
}

double gauss_cdf(double x, const GaussParams& p) noexcept {
  return 0.5 * std::erfc(-(x - p.mu) / (p.sigma * std::sqrt(2.0)));
}

Histogram empirical_histogram(std::span<const double> samples, int bins) {
  if (bins < 1) throw ArgumentError("histogram needs at least one bin");
  if (samples.empty()) throw EstimationError("empirical_histogram: no samples");
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) throw EstimationError("empirical_histogram: samples span no range");

  Histogram h;
  h.edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int k = 0; k <= bins; ++k) h.edges[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / bins;
  h.edges.back() = hi;
  h.mass.assign(static_cast<std::size_t>(bins), 0.0);
  const double scale = bins / (hi - lo);
  for (double v : samples) {
    const int k = std::min(static_cast<int>((v - lo) * scale), bins - 1);
    h.mass[static_cast<std::size_t>(k)] += 1.0;
  }
  const double n = static_cast<double>(samples.size());
  for (double& m : h.mass) m /= n;
  return h;
}

Histogram discretize_laplace(const LaplaceParams& p, std::span<const double> edges) {
  return discretize(edges, [&](double x) { return laplace_cdf(x, p); });
}

Histogram discretize_gauss(const GaussParams& p, std::span<const double> edges) {
  return discretize(edges, [&](double x) { return gauss_cdf(x, p); });
}

double js_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size() || p.empty()) {
    throw ArgumentError("js_divergence: histograms must share a non-empty binning");
  }
  const double sp = std::accumulate(p.begin(), p.end(), 0.0);
  const double sq = std::accumulate(q.begin(), q.end(), 0.0);
  if (std::abs(sp - 1.0) > 1e-9 || std::abs(sq - 1.0) > 1e-9) {
    throw ArgumentError("js_divergence: histograms must be normalized");
  }
  double js = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] < 0.0 || q[k] < 0.0) throw ArgumentError("js_divergence: negative mass");
    const double m = 0.5 * (p[k] + q[k]);
    if (p[k] > 0.0) js += 0.5 * p[k] * std::log2(p[k] / m);
    if (q[k] > 0.0) js += 0.5 * q[k] * std::log2(q[k] / m);
  }
  return std::clamp(js, 0.0, 1.0);
}

DistributionFitReport distribution_fit_report(std::span<const double> samples, int bins) {
  if (samples.size() < kMinFitReportSamples) {
    throw EstimationError("distribution_fit_report: need at least " +
                          std::to_string(kMinFitReportSamples) + " samples, got " +
                          std::to_string(samples.size()));
  }
  DistributionFitReport report;
  report.laplace = fit_laplace(samples);
  report.gauss = fit_gauss(samples);
  report.samples = samples.size();
  report.bins = bins;
  const Histogram empirical = empirical_histogram(samples, bins);
  report.js_laplace = js_divergence(empirical.mass, discretize_laplace(report.laplace, empirical.edges).mass);
  report.js_gauss = js_divergence(empirical.mass, discretize_gauss(report.gauss, empirical.edges).mass);
  return report;
}

double optimal_gate_unclipped(const LaplaceParams& physics, const LaplaceParams& learned) {
  require_scales(physics, learned);
  const double b1 = physics.b;
  const double b2 = learned.b;
  const double dmu = physics.mu - learned.mu;
  return (2.0 * b2 * b2 - learned.mu * dmu) / (2.0 * b1 * b1 + 2.0 * b2 * b2 + dmu * dmu);
}

double optimal_gate(const LaplaceParams& physics, const LaplaceParams& learned) {
  return std::clamp(optimal_gate_unclipped(physics, learned), 0.0, 1.0);
}

double gate_objective(double w, const LaplaceParams& physics, const LaplaceParams& learned) noexcept {
  const double var = 2.0 * (w * w * physics.b * physics.b + (1.0 - w) * (1.0 - w) * learned.b * learned.b);
  const double mean = w * physics.mu + (1.0 - w) * learned.mu;
  return var + mean * mean;
}

ErrorBinner::ErrorBinner(int bins) {
  if (bins < 1) throw ArgumentError("error binning needs at least one bin");
  samples_.resize(static_cast<std::size_t>(bins));
}

int ErrorBinner::bin_of(double dark) const noexcept {
  const int bins = bin_count();
  const double d = std::clamp(dark, 0.0, 1.0);
  return std::min(static_cast<int>(d * bins), bins - 1);
}

void ErrorBinner::add(double dark, double error) {
  samples_[static_cast<std::size_t>(bin_of(dark))].push_back(error);
}

void ErrorBinner::add_frame(const ScalarField& dark, const Raster& errors) {
  if (dark.width() != errors.width() || dark.height() != errors.height()) {
    throw ShapeError("ErrorBinner: dark channel and error field extents differ");
  }
  auto d = dark.data();
  auto e = errors.data();
  const auto channels = static_cast<std::size_t>(errors.channels());
  for (std::size_t p = 0; p < d.size(); ++p) {
    auto& bucket = samples_[static_cast<std::size_t>(bin_of(d[p]))];
    for (std::size_t c = 0; c < channels; ++c) bucket.push_back(e[p * channels + c]);
  }
}

std::vector<double> ErrorBinner::edges() const {
  const int bins = bin_count();
  std::vector<double> edges(static_cast<std::size_t>(bins) + 1);
  for (int k = 0; k <= bins; ++k) edges[static_cast<std::size_t>(k)] = static_cast<double>(k) / bins;
  return edges;
}

BinnedErrorStats ErrorBinner::finalize(std::size_t min_count) const {
  BinnedErrorStats stats;
  stats.edges = edges();
  stats.bins.resize(samples_.size());
  for (std::size_t k = 0; k < samples_.size(); ++k) {
    ErrorBin& bin = stats.bins[k];
    bin.lower = stats.edges[k];
    bin.upper = stats.edges[k + 1];
    bin.count = samples_[k].size();
    if (bin.count < min_count) continue;
    try {
      bin.laplace = fit_laplace(samples_[k]);
      bin.gauss = fit_gauss(samples_[k]);
    } catch (const EstimationError&) {
      bin.laplace.reset();
      bin.gauss.reset();
    }
  }
  return stats;
}

std::vector<std::pair<double, double>> GateProfile::populated() const {
  std::vector<std::pair<double, double>> out;
  for (const auto& bin : bins) {
    if (bin.w_star) out.emplace_back(bin.d_mid, *bin.w_star);
  }
  return out;
}

GateProfile gate_profile(const BinnedErrorStats& physics, const BinnedErrorStats& learned) {
  if (physics.edges != learned.edges || physics.bins.size() != learned.bins.size()) {
    throw ArgumentError("gate_profile: operands use different binnings");
  }
  GateProfile profile;
  profile.bins.resize(physics.bins.size());
  for (std::size_t k = 0; k < physics.bins.size(); ++k) {
    profile.bins[k].d_mid = physics.bins[k].midpoint();
    if (physics.bins[k].laplace && learned.bins[k].laplace) {
      profile.bins[k].w_star = optimal_gate(*physics.bins[k].laplace, *learned.bins[k].laplace);
    }
  }
  return profile;
}

std::pair<double, double> bootstrap_gate_interval(std::span<const double> physics_errors,
                                                  std::span<const double> learned_errors,
                                                  int resamples, std::uint64_t seed, double level) {
  if (resamples < 1) throw ArgumentError("bootstrap needs at least one resample");
  if (!(level > 0.0 && level < 1.0)) throw ArgumentError("confidence level must lie in (0,1)");
  if (physics_errors.empty() || learned_errors.empty()) {
    throw EstimationError("bootstrap_gate_interval: empty sample set");
  }
  std::mt19937_64 gen(seed);
  std::vector<double> gates;
  gates.reserve(static_cast<std::size_t>(resamples));
  std::vector<double> a(physics_errors.size());
  std::vector<double> b(learned_errors.size());
  for (int r = 0; r < resamples; ++r) {
    for (double& v : a) v = physics_errors[uniform_index(gen, physics_errors.size())];
    for (double& v : b) v = learned_errors[uniform_index(gen, learned_errors.size())];
    try {
      gates.push_back(optimal_gate(fit_laplace(a), fit_laplace(b)));
    } catch (const EstimationError&) {
      // degenerate resample; skip
    }
  }
  if (gates.empty()) throw EstimationError("bootstrap_gate_interval: every resample was degenerate");
  std::sort(gates.begin(), gates.end());
  const double tail = 0.5 * (1.0 - level);
  const auto rank = [&](double q) {
    const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(gates.size() - 1) + 0.5));
    return gates[std::min(idx, gates.size() - 1)];
  };
  return {rank(tail), rank(1.0 - tail)};
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw ArgumentError("pearson: sequences differ in length");
  if (xs.size() < 2) throw EstimationError("pearson: need at least two pairs");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw EstimationError("pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

ScalarField approx_gate(const ScalarField& d) {
  ScalarField out = d;
  for (double& v : out.data()) v = 1.0 - v;
  return out;
}

}  // namespace surgiatm
