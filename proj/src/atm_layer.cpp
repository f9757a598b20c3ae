#include "surgiatm/atm_layer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "surgiatm/dark_channel.hpp"
#include "surgiatm/errors.hpp"

namespace surgiatm {

namespace {

void require_target(const AtmForwardState& state, const ImageBuffer& target) {
  require_same_shape(state.input, target, "SurgiATM target");
}

template <bool kSigmoid, typename Residual>
void backward_loop(const AtmForwardState& state, Residual&& residual_term, std::span<double> g) {
  auto rho = state.rho.data();
  auto dh = state.d_hat.data();
  for (std::size_t p = 0; p < dh.size(); ++p) {
    const double scale = -dh[p];
    for (std::size_t c = 0; c < 3; ++c) {
      const std::size_t i = 3 * p + c;
      // d(raw output)/d(rho_raw) is rho (1 - rho) through the sigmoid, 1 otherwise.
      const double chain = kSigmoid ? rho[i] * (1.0 - rho[i]) : 1.0;
      g[i] = scale * residual_term(i) * chain;
    }
  }
}

template <typename Residual>
Raster backward_impl(const AtmForwardState& state, Residual&& residual_term) {
  Raster grad(state.input.width(), state.input.height(), 3);
  if (state.sigmoid_applied) {
    backward_loop<true>(state, residual_term, grad.data());
  } else {
    backward_loop<false>(state, residual_term, grad.data());
  }
  return grad;
}

}  // namespace

void SurgiAtmConfig::validate() const {
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw ArgumentError("eta must be finite and >= 0");
  if (z < 1 || z % 2 == 0) throw ArgumentError("window size must be odd and >= 1, got " + std::to_string(z));
}

ScalarField smooth_dark_channel(const ScalarField& d, double eta) {
  if (!(eta >= 0.0)) throw ArgumentError("smoothing factor must be >= 0");
  ScalarField out = d;
  const double denom = 1.0 + eta;
  for (double& v : out.data()) v = (v + eta) / denom;
  return out;
}

AtmForwardState forward(const ImageBuffer& input, const Raster& rho_raw, const SurgiAtmConfig& cfg,
                        int workers) {
  cfg.validate();
  require_channels(input, 3, "SurgiATM input");
  return forward_with_dark(input, denorm_dark_channel(input, cfg.z, workers), rho_raw, cfg);
}

AtmForwardState forward_with_dark(const ImageBuffer& input, const ScalarField& dark,
                                  const Raster& rho_raw, const SurgiAtmConfig& cfg) {
  cfg.validate();
  require_channels(input, 3, "SurgiATM input");
  require_same_shape(input.raster(), rho_raw, "SurgiATM rho");
  require_same_extent(input, dark, "SurgiATM dark channel");

  // One pass: normalize rho and evaluate the output.
  ScalarField d_hat = smooth_dark_channel(dark, cfg.eta);
  Raster rho(input.width(), input.height(), 3);
  Raster output(input.width(), input.height(), 3);
  auto raw = rho_raw.data();
  auto r = rho.data();
  auto out = output.data();
  auto in = input.data();
  auto dh = d_hat.data();
  for (std::size_t p = 0; p < dh.size(); ++p) {
    const double d = dh[p];
    for (std::size_t c = 0; c < 3; ++c) {
      const std::size_t i = 3 * p + c;
      r[i] = cfg.apply_sigmoid ? sigmoid(raw[i]) : raw[i];
      out[i] = in[i] - d * (1.0 - r[i]);
    }
  }
  if (!cfg.apply_sigmoid) {
    for (double v : r) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw DomainError("rho outside [0,1] with the sigmoid disabled: " + std::to_string(v));
      }
    }
  }
  AtmForwardState state{std::move(d_hat), ImageBuffer(std::move(rho)), input, std::move(output), cfg.apply_sigmoid};
  return state;
}

Raster backward_l2(const AtmForwardState& state, const ImageBuffer& target) {
  require_target(state, target);
  auto j = target.data();
  auto out = state.output.data();
  return backward_impl(state, [&](std::size_t i) { return j[i] - out[i]; });
}

Raster backward_l1(const AtmForwardState& state, const ImageBuffer& target) {
  require_target(state, target);
  auto j = target.data();
  auto out = state.output.data();
  return backward_impl(state, [&](std::size_t i) {
    const double r = j[i] - out[i];
    return r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
  });
}

Raster backward_from_output_grad(const AtmForwardState& state, const Raster& grad_output) {
  require_same_shape(state.input.raster(), grad_output, "SurgiATM upstream gradient");
  auto g = grad_output.data();
  // dJhat/drho = d_hat, so dL/drho = -d_hat * (-dL/dJhat).
  return backward_impl(state, [&](std::size_t i) { return -g[i]; });
}

double loss_l2(const AtmForwardState& state, const ImageBuffer& target) {
  require_target(state, target);
  auto j = target.data();
  auto out = state.output.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const double r = j[i] - out[i];
    sum += 0.5 * r * r;
  }
  return sum;
}

double loss_l1(const AtmForwardState& state, const ImageBuffer& target) {
  require_target(state, target);
  auto j = target.data();
  auto out = state.output.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < j.size(); ++i) sum += std::abs(j[i] - out[i]);
  return sum;
}

}  // namespace surgiatm
