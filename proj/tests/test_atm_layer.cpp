#include <gtest/gtest.h>

#include <cmath>

#include "surgiatm/atm_layer.hpp"
#include "surgiatm/dark_channel.hpp"
#include "surgiatm/errors.hpp"
#include "surgiatm/gradcheck.hpp"
#include "test_util.hpp"

using namespace surgiatm;
namespace st = surgiatm::testing;

namespace {

struct Case {
  ImageBuffer input;
  Raster rho_raw;
  ImageBuffer target;
};

Case random_case(std::mt19937_64& gen, int size, bool sigmoid) {
  const double floor = st::uniform(gen, 0.0, 0.6);
  return {st::random_image(gen, size, size, 3, floor, 1.0),
          sigmoid ? st::random_raster(gen, size, size, 3, -4.0, 4.0)
                  : st::random_raster(gen, size, size, 3, 0.0, 1.0),
          st::random_image(gen, size, size)};
}

// Central difference of a scalar loss built directly from the layer formula.
double fd_loss_grad(const Case& c, const SurgiAtmConfig& cfg, std::size_t i, bool l2, double h) {
  const ScalarField dark = st::brute_window_min(
      [&] {
        ScalarField m(c.input.width(), c.input.height());
        for (int y = 0; y < m.height(); ++y) {
          for (int x = 0; x < m.width(); ++x) {
            m.at(x, y) = std::min({c.input.at(x, y, 0), c.input.at(x, y, 1), c.input.at(x, y, 2)});
          }
        }
        return m;
      }(),
      cfg.z);
  const auto term = [&](double raw) {
    const double rho = cfg.apply_sigmoid ? 1.0 / (1.0 + std::exp(-raw)) : raw;
    const std::size_t p = i / 3;
    const double dh = (dark.data()[p] + cfg.eta) / (1.0 + cfg.eta);
    const double out = c.input.data()[i] - dh * (1.0 - rho);
    const double r = c.target.data()[i] - out;
    return l2 ? 0.5 * r * r : std::abs(r);
  };
  const double x = c.rho_raw.data()[i];
  return (term(x + h) - term(x - h)) / (2.0 * h);
}

}  // namespace

TEST(SmoothDarkChannel, PublishedDefaultAndLimits) {
  const ScalarField zero(2, 2, 0.0);
  for (double v : st::values(smooth_dark_channel(zero, 0.1))) EXPECT_NEAR(v, 0.0909091, 1e-7);
  std::mt19937_64 gen(1);
  const ScalarField f = st::random_field(gen, 5, 5);
  EXPECT_EQ(smooth_dark_channel(f, 0.0), f);
  for (double eta : {0.0, 0.1, 3.0, 1e6}) {
    for (double v : st::values(smooth_dark_channel(ScalarField(1, 1, 1.0), eta))) EXPECT_DOUBLE_EQ(v, 1.0);
  }
  EXPECT_THROW(smooth_dark_channel(f, -0.1), ArgumentError);
}

TEST(AtmForward, UnitRhoReturnsInput) {
  std::mt19937_64 gen(2);
  const ImageBuffer in = st::random_image(gen, 12, 12);
  const AtmForwardState s = forward(in, Raster(12, 12, 3, 1.0), {0.1, 5, false});
  for (std::size_t i = 0; i < in.size(); ++i) EXPECT_EQ(s.output.data()[i], in.data()[i]);
}

TEST(AtmForward, LargeEtaDegeneratesToResidualPrediction) {
  std::mt19937_64 gen(3);
  const ImageBuffer in = st::random_image(gen, 10, 10);
  const Raster rho = st::random_raster(gen, 10, 10, 3, 0.0, 1.0);
  const AtmForwardState s = forward(in, rho, {1e9, 3, false});
  for (std::size_t i = 0; i < in.size(); ++i) {
    EXPECT_NEAR(s.output.data()[i], in.data()[i] + rho.data()[i] - 1.0, 1e-8);
  }
}

TEST(AtmForward, MatchesPointwiseFormula) {
  std::mt19937_64 gen(4);
  const ImageBuffer in = st::random_image(gen, 24, 20, 3, 0.2, 1.0);
  const Raster raw = st::random_raster(gen, 24, 20, 3, -3.0, 3.0);
  const SurgiAtmConfig cfg{0.1, 15, true};
  const AtmForwardState s = forward(in, raw, cfg);
  const double one[3] = {1, 1, 1};
  const ScalarField dark = st::brute_dark_channel(in, 15, one);
  for (int y = 0; y < 20; ++y) {
    for (int x = 0; x < 24; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double rho = 1.0 / (1.0 + std::exp(-raw.at(x, y, c)));
        const double dh = (dark.at(x, y) + 0.1) / 1.1;
        EXPECT_NEAR(s.output.at(x, y, c), in.at(x, y, c) - dh * (1.0 - rho), 1e-7);
      }
    }
  }
  for (double v : s.d_hat.data()) {
    EXPECT_GE(v, 0.1 / 1.1 - 1e-15);
    EXPECT_LE(v, 1.0);
  }
}

TEST(AtmForward, ShapeAndDomainErrors) {
  const ImageBuffer in(4, 4, 3, 0.5);
  EXPECT_THROW(forward(in, Raster(4, 5, 3), {}), ShapeError);
  EXPECT_THROW(forward(in, Raster(4, 4, 3, 1.5), {0.1, 3, false}), DomainError);
  EXPECT_THROW(forward(ImageBuffer(4, 4, 1), Raster(4, 4, 1), {}), ShapeError);
  EXPECT_THROW(forward(in, Raster(4, 4, 3), {-1.0, 3, true}), ArgumentError);
  EXPECT_THROW(forward(in, Raster(4, 4, 3), {0.1, 4, true}), ArgumentError);
}

TEST(AtmForward, SmokelessConsistencyAndDeviationBound) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 20; ++trial) {
    Raster r = st::random_image(gen, 16, 16).raster();
    for (int y = 0; y < 16; y += 2) {
      for (int x = 0; x < 16; ++x) r.at(x, y, 1) = 0.0;  // rows with a zero channel
    }
    const ImageBuffer in(r);
    const Raster raw = st::random_raster(gen, 16, 16, 3, -5.0, 5.0);
    const AtmForwardState s0 = forward(in, raw, {0.0, 3, true});
    for (std::size_t p = 0; p < s0.d_hat.size(); ++p) {
      if (s0.d_hat.data()[p] != 0.0) continue;
      for (int c = 0; c < 3; ++c) EXPECT_EQ(s0.output.data()[3 * p + c], in.data()[3 * p + c]);
    }
    const AtmForwardState s1 = forward(in, raw, {0.1, 3, true});
    for (std::size_t i = 0; i < in.size(); ++i) {
      EXPECT_LE(std::abs(s1.output.data()[i] - in.data()[i]), s1.d_hat.data()[i / 3] + 1e-15);
    }
  }
}

TEST(AtmBackward, ZeroResidualGivesZeroGradient) {
  std::mt19937_64 gen(6);
  // With I >= 0.5 and rho >= 0.5 the output stays inside [0,1] and can serve as a target.
  const ImageBuffer in = st::random_image(gen, 8, 8, 3, 0.5, 1.0);
  const Raster rho = st::random_raster(gen, 8, 8, 3, 0.5, 1.0);
  const AtmForwardState s = forward(in, rho, {0.1, 3, false});
  const ImageBuffer target(s.output);
  for (double g : st::values(backward_l2(s, target))) EXPECT_EQ(g, 0.0);
  for (double g : st::values(backward_l1(s, target))) EXPECT_EQ(g, 0.0);
}

TEST(AtmBackward, DirectSubstitution) {
  // d_hat = 1 (all-white input), rho = 0.5: Jhat = 1 - 0.5 = 0.5; J = 1 gives J - Jhat = 0.5.
  const ImageBuffer in(1, 1, 3, 1.0);
  const AtmForwardState s = forward(in, Raster(1, 1, 3, 0.5), {0.1, 1, false});
  const ImageBuffer target(1, 1, 3, 1.0);
  for (double g : st::values(backward_l2(s, target))) EXPECT_DOUBLE_EQ(g, -0.5);
  for (double g : st::values(backward_l1(s, target))) EXPECT_DOUBLE_EQ(g, -1.0);  // J > Jhat: -d_hat
  const ImageBuffer below(1, 1, 3, 0.0);
  for (double g : st::values(backward_l1(s, below))) EXPECT_DOUBLE_EQ(g, 1.0);
}

TEST(AtmBackward, MatchesFiniteDifferences) {
  std::mt19937_64 gen(7);
  for (bool sig : {false, true}) {
    for (double eta : {0.0, 0.1, 1.0}) {
      for (int z : {1, 3, 5}) {
        const Case c = random_case(gen, 9, sig);
        const SurgiAtmConfig cfg{eta, z, sig};
        const AtmForwardState s = forward(c.input, c.rho_raw, cfg);
        const Raster g2 = backward_l2(s, c.target);
        const Raster g1 = backward_l1(s, c.target);
        for (std::size_t i = 0; i < c.input.size(); ++i) {
          const double n2 = fd_loss_grad(c, cfg, i, true, 1e-5);
          EXPECT_LT(gradient_rel_error(g2.data()[i], n2), 1e-5);
          const double residual = c.target.data()[i] - s.output.data()[i];
          if (std::abs(residual) > 1e-3) {
            const double n1 = fd_loss_grad(c, cfg, i, false, 1e-6);
            EXPECT_LT(gradient_rel_error(g1.data()[i], n1), 1e-4);
          }
        }
      }
    }
  }
}

TEST(AtmBackward, SignAgreementAndGradientFloor) {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 10; ++trial) {
    const Case c = random_case(gen, 10, false);
    const AtmForwardState s = forward(c.input, c.rho_raw, {0.1, 3, false});
    const Raster g2 = backward_l2(s, c.target);
    const Raster g1 = backward_l1(s, c.target);
    for (std::size_t i = 0; i < g2.size(); ++i) {
      if (c.target.data()[i] != s.output.data()[i]) {
        EXPECT_EQ(std::signbit(g2.data()[i]), std::signbit(g1.data()[i]));
        // |dJhat/drho| = d_hat >= eta / (1 + eta)
        EXPECT_GE(std::abs(g1.data()[i]), 0.1 / 1.1 - 1e-15);
      }
    }
  }
}

TEST(AtmBackward, UpstreamGradientChain) {
  std::mt19937_64 gen(9);
  const Case c = random_case(gen, 6, true);
  const AtmForwardState s = forward(c.input, c.rho_raw, {0.1, 3, true});
  Raster upstream(6, 6, 3);
  for (std::size_t i = 0; i < upstream.size(); ++i) upstream.data()[i] = s.output.data()[i] - c.target.data()[i];
  const Raster chained = backward_from_output_grad(s, upstream);
  const Raster direct = backward_l2(s, c.target);
  for (std::size_t i = 0; i < chained.size(); ++i) EXPECT_DOUBLE_EQ(chained.data()[i], direct.data()[i]);
  EXPECT_THROW(backward_l2(s, ImageBuffer(5, 6, 3)), ShapeError);
}

TEST(AtmBackward, DisplayClampDoesNotAffectGradients) {
  // Jhat = I - d_hat (1 - rho) can go negative; the loss uses the raw value.
  const ImageBuffer in(2, 2, 3, 0.05);
  const AtmForwardState s = forward(in, Raster(2, 2, 3, 0.0), {5.0, 1, false});
  for (double v : s.output.data()) EXPECT_LT(v, 0.0);
  for (double v : st::values(s.display())) EXPECT_EQ(v, 0.0);
  const ImageBuffer target(2, 2, 3, 0.0);
  for (std::size_t i = 0; i < 12; ++i) {
    EXPECT_DOUBLE_EQ(backward_l2(s, target).data()[i], -s.d_hat.data()[i / 3] * (0.0 - s.output.data()[i]));
  }
}

TEST(Gradcheck, DefaultSweepPassesAndCorruptionIsCaught) {
  GradcheckOptions opts;
  opts.sizes = {6};
  GradcheckReport ok = run_gradcheck(opts);
  EXPECT_TRUE(ok.passed());
  EXPECT_GT(ok.checked_l1, 0u);
  EXPECT_EQ(ok.vanishing_cases, 1u);
  opts.corrupt_sign = true;
  GradcheckReport bad = run_gradcheck(opts);
  EXPECT_FALSE(bad.passed());
  EXPECT_FALSE(bad.failures.empty());
}
