#include "surgiatm/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "surgiatm/dark_channel.hpp"
#include "surgiatm/errors.hpp"
#include "surgiatm/random.hpp"

namespace surgiatm {

namespace {

// Per-element loss terms; the scalar loss is their sum.
std::vector<double> loss_terms(const AtmForwardState& state, const ImageBuffer& target, bool l2) {
  auto j = target.data();
  auto out = state.output.data();
  std::vector<double> terms(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    const double r = j[i] - out[i];
    terms[i] = l2 ? 0.5 * r * r : std::abs(r);
  }
  return terms;
}

// L(+) - L(-) summed term by term so unchanged elements cancel exactly.
double loss_difference(const std::vector<double>& plus, const std::vector<double>& minus) {
  double diff = 0.0;
  for (std::size_t i = 0; i < plus.size(); ++i) diff += plus[i] - minus[i];
  return diff;
}

}  // namespace

double gradient_rel_error(double analytic, double numeric) noexcept {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), kRelFloor});
  return std::abs(analytic - numeric) / denom;
}

void gradcheck_case(const ImageBuffer& input, const Raster& rho_raw, const ImageBuffer& target,
                    const SurgiAtmConfig& cfg, const GradcheckOptions& opts, GradcheckReport& report) {
  const ScalarField dark = denorm_dark_channel(input, cfg.z);
  const AtmForwardState state = forward_with_dark(input, dark, rho_raw, cfg);
  Raster g2 = backward_l2(state, target);
  Raster g1 = backward_l1(state, target);
  if (opts.corrupt_sign) {
    for (double& v : g2.data()) v = -v;
    for (double& v : g1.data()) v = -v;
  }
  ++report.cases;

  Raster probe = rho_raw;
  auto p = probe.data();
  auto j = target.data();
  auto out = state.output.data();
  const int channels = input.channels();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double saved = p[i];
    p[i] = saved + opts.step;
    const AtmForwardState plus = forward_with_dark(input, dark, probe, cfg);
    p[i] = saved - opts.step;
    const AtmForwardState minus = forward_with_dark(input, dark, probe, cfg);
    p[i] = saved;

    const auto record = [&](const char* loss, double analytic, double numeric, double tol, double& max_rel) {
      const double rel = gradient_rel_error(analytic, numeric);
      max_rel = std::max(max_rel, rel);
      if (rel >= tol) {
        const auto pixel = static_cast<int>(i / static_cast<std::size_t>(channels));
        report.failures.push_back({loss, input.width(), cfg.eta, cfg.z, cfg.apply_sigmoid,
                                   pixel % input.width(), pixel / input.width(),
                                   static_cast<int>(i % static_cast<std::size_t>(channels)), analytic,
                                   numeric, rel});
      }
    };

    const double n2 = loss_difference(loss_terms(plus, target, true), loss_terms(minus, target, true)) /
                      (2.0 * opts.step);
    record("l2", g2.data()[i], n2, opts.l2_tolerance, report.max_rel_l2);
    ++report.checked_l2;

    // The central difference must not straddle the |J - Jhat| kink.
    const double residual = j[i] - out[i];
    const bool away = std::abs(residual) > opts.l1_kink_margin &&
                      std::signbit(j[i] - plus.output.data()[i]) == std::signbit(residual) &&
                      std::signbit(j[i] - minus.output.data()[i]) == std::signbit(residual);
    if (away) {
      const double n1 = loss_difference(loss_terms(plus, target, false), loss_terms(minus, target, false)) /
                        (2.0 * opts.step);
      record("l1", g1.data()[i], n1, opts.l1_tolerance, report.max_rel_l1);
      ++report.checked_l1;
    }
  }
}

GradcheckReport run_gradcheck(const GradcheckOptions& opts) {
  if (opts.sizes.empty() || opts.etas.empty() || opts.windows.empty()) {
    throw ArgumentError("gradcheck needs at least one size, eta and window");
  }
  if (!(opts.step > 0.0)) throw ArgumentError("gradcheck step must be positive");
  GradcheckReport report;
  std::mt19937_64 gen(opts.seed);
  for (int size : opts.sizes) {
    if (size < 1) throw ArgumentError("gradcheck sizes must be >= 1");
    for (double eta : opts.etas) {
      for (int z : opts.windows) {
        for (bool sig : {false, true}) {
          for (int rep = 0; rep < opts.cases_per_combo; ++rep) {
            SurgiAtmConfig cfg{eta, z, sig};
            cfg.validate();
            const double floor = uniform_in(gen, 0.0, 0.6);
            Raster in(size, size, 3);
            for (double& v : in.data()) v = uniform_in(gen, floor, 1.0);
            Raster rho(size, size, 3);
            for (double& v : rho.data()) v = sig ? uniform_in(gen, -4.0, 4.0) : unit_uniform(gen);
            Raster target(size, size, 3);
            for (double& v : target.data()) v = unit_uniform(gen);
            gradcheck_case(ImageBuffer(std::move(in)), rho, ImageBuffer(std::move(target)), cfg, opts, report);
          }
        }
      }
    }
  }

  // eta = 0 on an all-black frame: d_hat = 0, so the L2 gradient vanishes.
  for (int size : opts.sizes) {
    const ImageBuffer black(size, size, 3, 0.0);
    Raster rho(size, size, 3);
    for (double& v : rho.data()) v = uniform_in(gen, -2.0, 2.0);
    Raster target(size, size, 3);
    for (double& v : target.data()) v = unit_uniform(gen);
    const AtmForwardState state = forward(black, rho, {0.0, opts.windows.front(), true});
    Raster g = backward_l2(state, ImageBuffer(std::move(target)));
    if (opts.corrupt_sign) {
      for (double& v : g.data()) v = -v;
    }
    ++report.vanishing_cases;
    for (double v : g.data()) {
      if (v != 0.0) report.vanishing_ok = false;
    }
  }
  return report;
}

}  // namespace surgiatm
