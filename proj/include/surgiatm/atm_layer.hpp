#pragma once

#include <cmath>

#include "surgiatm/image.hpp"

namespace surgiatm {

/// Output-layer settings.
struct SurgiAtmConfig {
  double eta = 0.1;           ///< dark-channel smoothing factor, >= 0
  int z = 15;                 ///< dark-channel window, odd
  bool apply_sigmoid = true;  ///< map raw predictor output through a logistic first

  void validate() const;
};

/// Operands cached by forward() for the backward pass.
struct AtmForwardState {
  ScalarField d_hat;   ///< smoothed denormalized dark channel, in [eta/(1+eta), 1]
  ImageBuffer rho;     ///< normalized radiance after the optional sigmoid
  ImageBuffer input;   ///< observed frame I
  Raster output;       ///< I - d_hat * (1 - rho), unclamped
  bool sigmoid_applied = false;

  /// Output clamped to [0,1] for display and saving.
  ImageBuffer display() const { return ImageBuffer::clamped(output); }
};

/// (d + eta) / (1 + eta) elementwise. Negative eta -> ArgumentError.
ScalarField smooth_dark_channel(const ScalarField& d, double eta);

inline double sigmoid(double x) noexcept {
  // 1 / (1 + e^-x) for x >= 0 and e^x / (1 + e^x) below, without a branch on
  // the sign so random-sign inputs do not mispredict.
  const double e = std::exp(-std::abs(x));
  const double num = x >= 0.0 ? 1.0 : e;
  return num / (1.0 + e);
}

/// Full layer: rho = sigmoid(rho_raw) (if configured), d_hat from the input
/// frame, output = I - d_hat * (1 - rho) with d_hat broadcast over channels.
AtmForwardState forward(const ImageBuffer& input, const Raster& rho_raw, const SurgiAtmConfig& cfg,
                        int workers = 1);

/// As forward(), reusing a precomputed raw (unsmoothed) denormalized dark channel of `input`.
AtmForwardState forward_with_dark(const ImageBuffer& input, const ScalarField& dark,
                                  const Raster& rho_raw, const SurgiAtmConfig& cfg);

/// Gradient of sum over elements of 0.5 * (J - Jhat)^2 with respect to the
/// raw predictor output (rho_raw when the sigmoid is applied, rho otherwise).
Raster backward_l2(const AtmForwardState& state, const ImageBuffer& target);

/// Gradient of sum |J - Jhat|, using sign(0) = 0.
Raster backward_l1(const AtmForwardState& state, const ImageBuffer& target);

/// Chain an upstream gradient dL/dJhat back to the raw predictor output.
Raster backward_from_output_grad(const AtmForwardState& state, const Raster& grad_output);

/// Scalar losses matching the backward passes (sums, not means).
double loss_l2(const AtmForwardState& state, const ImageBuffer& target);
double loss_l1(const AtmForwardState& state, const ImageBuffer& target);

}  // namespace surgiatm
