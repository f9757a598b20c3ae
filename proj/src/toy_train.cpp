#include "surgiatm/toy_train.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "surgiatm/dark_channel.hpp"
#include "surgiatm/errors.hpp"
#include "surgiatm/parallel.hpp"
#include "surgiatm/random.hpp"

namespace surgiatm {

namespace {

constexpr std::size_t kF = kToyFeatures;

SurgiAtmConfig training_layer(const SurgiAtmConfig& atm) {
  SurgiAtmConfig cfg = atm;
  cfg.apply_sigmoid = true;
  cfg.validate();
  return cfg;
}

struct FrameTerms {
  double loss_sum = 0.0;
  std::size_t elements = 0;
  ToyPredictor gradient;
};

FrameTerms frame_terms(const ToyPredictor& model, const PreparedFrame& frame, TrainMode mode,
                       TrainLoss loss, const SurgiAtmConfig& layer) {
  FrameTerms terms;
  const Raster raw = predict_raw(model, frame);
  terms.elements = raw.size();

  Raster grad_raw;
  if (mode == TrainMode::kSurgiAtm) {
    const AtmForwardState state = forward_with_dark(frame.smoky, frame.dark, raw, layer);
    if (loss == TrainLoss::kL2) {
      terms.loss_sum = loss_l2(state, frame.clean);
      grad_raw = backward_l2(state, frame.clean);
    } else {
      terms.loss_sum = loss_l1(state, frame.clean);
      grad_raw = backward_l1(state, frame.clean);
    }
  } else {
    grad_raw = Raster(raw.width(), raw.height(), raw.channels());
    auto r = raw.data();
    auto j = frame.clean.data();
    auto g = grad_raw.data();
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double diff = r[i] - j[i];
      if (loss == TrainLoss::kL2) {
        terms.loss_sum += 0.5 * diff * diff;
        g[i] = diff;
      } else {
        terms.loss_sum += std::abs(diff);
        g[i] = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
      }
    }
  }

  auto g = grad_raw.data();
  const std::size_t pixels = frame.smoky.pixel_count();
  for (std::size_t p = 0; p < pixels; ++p) {
    const double* f = frame.features.data() + p * kF;
    for (std::size_t c = 0; c < kToyOutputs; ++c) {
      const double gc = g[p * kToyOutputs + c];
      if (gc == 0.0) continue;
      auto& row = terms.gradient.weights[c];
      for (std::size_t k = 0; k < kF; ++k) row[k] += gc * f[k];
    }
  }
  return terms;
}

}  // namespace

ToyPredictor ToyPredictor::identity() {
  ToyPredictor m;
  for (std::size_t c = 0; c < kToyOutputs; ++c) m.weights[c][c] = 1.0;
  return m;
}

ToyPredictor ToyPredictor::seeded(std::uint64_t seed, double scale) {
  std::mt19937_64 gen(seed);
  ToyPredictor m;
  for (auto& row : m.weights) {
    for (double& w : row) w = uniform_in(gen, -scale, scale);
  }
  return m;
}

bool ToyPredictor::finite() const noexcept {
  for (const auto& row : weights) {
    for (double w : row) {
      if (!std::isfinite(w)) return false;
    }
  }
  return true;
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ArgumentError("learning rate must be finite and >= 0");
  }
  if (epochs < 0) throw ArgumentError("epochs must be >= 0");
}

std::vector<double> toy_features(const ImageBuffer& smoky, const ScalarField& dark) {
  require_channels(smoky, 3, "toy features");
  require_same_extent(smoky, dark, "toy features");
  const int w = smoky.width();
  const int h = smoky.height();
  std::vector<double> f(smoky.pixel_count() * kF);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double* out = f.data() + (static_cast<std::size_t>(y) * w + x) * kF;
      for (int c = 0; c < 3; ++c) out[c] = smoky.at(x, y, c);
      out[3] = dark.at(x, y);
      for (int c = 0; c < 3; ++c) {
        double sum = 0.0;
        for (int dy = -1; dy <= 1; ++dy) {
          const int yy = std::clamp(y + dy, 0, h - 1);
          for (int dx = -1; dx <= 1; ++dx) sum += smoky.at(std::clamp(x + dx, 0, w - 1), yy, c);
        }
        out[4 + c] = sum / 9.0;
      }
      out[7] = 1.0;
    }
  }
  return f;
}

PreparedFrame prepare_frame(const ImageBuffer& smoky, const ImageBuffer& clean, int z) {
  require_same_shape(smoky, clean, "training pair");
  PreparedFrame frame{smoky, clean, denorm_dark_channel(smoky, z), {}};
  frame.features = toy_features(smoky, frame.dark);
  return frame;
}

std::vector<PreparedFrame> prepare_frames(std::span<const FramePair> pairs, int z, int workers) {
  std::vector<PreparedFrame> frames(pairs.size());
  parallel_for(pairs.size(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) frames[i] = prepare_frame(pairs[i].smoky, pairs[i].clean, z);
  });
  return frames;
}

Raster predict_raw(const ToyPredictor& model, const PreparedFrame& frame) {
  Raster raw(frame.smoky.width(), frame.smoky.height(), kToyOutputs);
  auto r = raw.data();
  const std::size_t pixels = frame.smoky.pixel_count();
  for (std::size_t p = 0; p < pixels; ++p) {
    const double* f = frame.features.data() + p * kF;
    for (std::size_t c = 0; c < kToyOutputs; ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < kF; ++k) acc += model.weights[c][k] * f[k];
      r[p * kToyOutputs + c] = acc;
    }
  }
  return raw;
}

Raster predict_output(const ToyPredictor& model, const PreparedFrame& frame, TrainMode mode,
                      const SurgiAtmConfig& atm) {
  Raster raw = predict_raw(model, frame);
  if (mode == TrainMode::kDirect) return raw;
  return forward_with_dark(frame.smoky, frame.dark, raw, training_layer(atm)).output;
}

LossAndGradient loss_and_gradient(const ToyPredictor& model, std::span<const PreparedFrame> frames,
                                  TrainMode mode, TrainLoss loss, const SurgiAtmConfig& atm,
                                  int workers) {
  if (frames.empty()) throw ArgumentError("training needs at least one frame");
  const SurgiAtmConfig layer = training_layer(atm);
  std::vector<FrameTerms> per_frame(frames.size());
  parallel_for(frames.size(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) per_frame[i] = frame_terms(model, frames[i], mode, loss, layer);
  });

  LossAndGradient out;
  std::size_t elements = 0;
  for (const auto& t : per_frame) {
    out.loss += t.loss_sum;
    elements += t.elements;
    for (std::size_t c = 0; c < kToyOutputs; ++c) {
      for (std::size_t k = 0; k < kF; ++k) out.gradient.weights[c][k] += t.gradient.weights[c][k];
    }
  }
  const double n = static_cast<double>(elements);
  out.loss /= n;
  for (auto& row : out.gradient.weights) {
    for (double& g : row) g /= n;
  }
  return out;
}

TrainResult train(std::span<const PreparedFrame> frames, const TrainConfig& cfg, const SurgiAtmConfig& atm) {
  cfg.validate();
  if (frames.empty()) throw ArgumentError("training needs at least one frame");
  TrainResult result;
  switch (cfg.init) {
    case TrainInit::kSeeded: result.model = ToyPredictor::seeded(cfg.seed); break;
    case TrainInit::kZero: result.model = ToyPredictor::zero(); break;
    case TrainInit::kIdentity: result.model = ToyPredictor::identity(); break;
  }
  result.loss_trace.reserve(static_cast<std::size_t>(cfg.epochs) + 1);
  for (int epoch = 0; epoch <= cfg.epochs; ++epoch) {
    const LossAndGradient lg = loss_and_gradient(result.model, frames, cfg.mode, cfg.loss, atm, cfg.workers);
    if (!std::isfinite(lg.loss)) {
      throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch), epoch);
    }
    result.loss_trace.push_back(lg.loss);
    if (epoch == cfg.epochs) break;
    for (std::size_t c = 0; c < kToyOutputs; ++c) {
      for (std::size_t k = 0; k < kF; ++k) {
        result.model.weights[c][k] -= cfg.learning_rate * lg.gradient.weights[c][k];
      }
    }
    if (!result.model.finite()) {
      throw TrainingError("weights diverged at epoch " + std::to_string(epoch), epoch);
    }
  }
  return result;
}

TrainResult train(std::span<const FramePair> pairs, const TrainConfig& cfg, const SurgiAtmConfig& atm) {
  atm.validate();
  const auto frames = prepare_frames(pairs, atm.z, cfg.workers);
  return train(std::span<const PreparedFrame>(frames), cfg, atm);
}

ImageBuffer restore(const ToyPredictor& model, const ImageBuffer& smoky, TrainMode mode,
                    const SurgiAtmConfig& atm) {
  const PreparedFrame frame = prepare_frame(smoky, smoky, atm.z);
  return ImageBuffer::clamped(predict_output(model, frame, mode, atm));
}

MetricReport evaluate(const ToyPredictor& model, std::span<const PreparedFrame> frames, TrainMode mode,
                      const SurgiAtmConfig& atm) {
  std::vector<MetricReport> reports;
  reports.reserve(frames.size());
  for (const auto& frame : frames) {
    const ImageBuffer out = ImageBuffer::clamped(predict_output(model, frame, mode, atm));
    reports.push_back(evaluate_metrics(out, frame.clean));
  }
  return mean_report(reports);
}

double mean_rmse(const ToyPredictor& model, std::span<const PreparedFrame> frames, TrainMode mode,
                 const SurgiAtmConfig& atm) {
  if (frames.empty()) throw ArgumentError("mean_rmse over no frames");
  double sum = 0.0;
  for (const auto& frame : frames) {
    sum += rmse(ImageBuffer::clamped(predict_output(model, frame, mode, atm)), frame.clean);
  }
  return sum / static_cast<double>(frames.size());
}

std::vector<double> smooth_trace(std::span<const double> trace, int window) {
  if (window < 1) throw ArgumentError("smoothing window must be >= 1");
  std::vector<double> out(trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const std::size_t n = std::min(i + 1, static_cast<std::size_t>(window));
    double acc = 0.0;
    for (std::size_t k = i + 1 - n; k <= i; ++k) acc += trace[k];
    out[i] = acc / static_cast<double>(n);
  }
  return out;
}

}  // namespace surgiatm
