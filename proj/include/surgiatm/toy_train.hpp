#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "surgiatm/atm_layer.hpp"
#include "surgiatm/image.hpp"
#include "surgiatm/metrics.hpp"

namespace surgiatm {

/// Per-pixel features: input RGB, raw denormalized dark channel, 3x3 mean RGB, bias.
inline constexpr int kToyFeatures = 8;
inline constexpr int kToyOutputs = 3;

enum class TrainMode { kDirect, kSurgiAtm };
enum class TrainLoss { kL1, kL2 };
enum class TrainInit { kSeeded, kZero, kIdentity };

/// Affine map from the feature vector to three raw outputs.
///
/// Direct mode reads the raw outputs as the restored frame. SurgiATM mode
/// passes them through the sigmoid and the output layer.
struct ToyPredictor {
  std::array<std::array<double, kToyFeatures>, kToyOutputs> weights{};

  static ToyPredictor zero() { return {}; }
  /// raw output c = input channel c.
  static ToyPredictor identity();
  /// Small uniform weights in [-scale, scale].
  static ToyPredictor seeded(std::uint64_t seed, double scale = 0.01);

  bool finite() const noexcept;
  friend bool operator==(const ToyPredictor&, const ToyPredictor&) = default;
};

struct TrainConfig {
  double learning_rate = 1.0;
  int epochs = 100;
  TrainLoss loss = TrainLoss::kL2;
  TrainMode mode = TrainMode::kSurgiAtm;
  TrainInit init = TrainInit::kSeeded;
  std::uint64_t seed = 0;
  int workers = 1;

  void validate() const;
};

struct FramePair {
  ImageBuffer smoky;
  ImageBuffer clean;
};

/// A pair with its cached dark channel and feature matrix (pixels x kToyFeatures).
struct PreparedFrame {
  ImageBuffer smoky;
  ImageBuffer clean;
  ScalarField dark;
  std::vector<double> features;
};

/// Features depend on the dark-channel window, so frames are prepared per z.
PreparedFrame prepare_frame(const ImageBuffer& smoky, const ImageBuffer& clean, int z);
std::vector<PreparedFrame> prepare_frames(std::span<const FramePair> pairs, int z, int workers = 1);

std::vector<double> toy_features(const ImageBuffer& smoky, const ScalarField& dark);

/// Raw predictor output for one frame.
Raster predict_raw(const ToyPredictor& model, const PreparedFrame& frame);

/// Restored frame (unclamped) for the given mode.
Raster predict_output(const ToyPredictor& model, const PreparedFrame& frame, TrainMode mode,
                      const SurgiAtmConfig& atm);

struct LossAndGradient {
  double loss = 0.0;  ///< mean per-element loss over the batch
  ToyPredictor gradient;
};

/// Mean loss over every element of every frame and its gradient with respect
/// to the weights. Frames are processed in parallel and reduced in order.
LossAndGradient loss_and_gradient(const ToyPredictor& model, std::span<const PreparedFrame> frames,
                                  TrainMode mode, TrainLoss loss, const SurgiAtmConfig& atm,
                                  int workers = 1);

struct TrainResult {
  ToyPredictor model;
  std::vector<double> loss_trace;  ///< epochs + 1 entries; entry e is the loss before update e
};

/// Full-batch gradient descent. Non-finite loss -> TrainingError naming the epoch.
TrainResult train(std::span<const PreparedFrame> frames, const TrainConfig& cfg, const SurgiAtmConfig& atm);
TrainResult train(std::span<const FramePair> pairs, const TrainConfig& cfg, const SurgiAtmConfig& atm);

/// Clamped restoration of one frame.
ImageBuffer restore(const ToyPredictor& model, const ImageBuffer& smoky, TrainMode mode,
                    const SurgiAtmConfig& atm);

/// Mean metrics over the frames, restored with the given mode.
MetricReport evaluate(const ToyPredictor& model, std::span<const PreparedFrame> frames, TrainMode mode,
                      const SurgiAtmConfig& atm);

/// Mean over frames of the RMSE between the clamped restoration and the clean frame.
double mean_rmse(const ToyPredictor& model, std::span<const PreparedFrame> frames, TrainMode mode,
                 const SurgiAtmConfig& atm);

/// Trailing moving average with the given window (shorter at the start).
std::vector<double> smooth_trace(std::span<const double> trace, int window = 5);

}  // namespace surgiatm
