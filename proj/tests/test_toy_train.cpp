#include <gtest/gtest.h>

#include <cmath>

#include "surgiatm/atm_layer.hpp"
#include "surgiatm/dark_channel.hpp"
#include "surgiatm/errors.hpp"
#include "surgiatm/metrics.hpp"
#include "surgiatm/smoke_sim.hpp"
#include "surgiatm/toy_train.hpp"
#include "test_util.hpp"

using namespace surgiatm;
namespace st = surgiatm::testing;

namespace {

std::vector<PreparedFrame> smoke_frames(int count, int size, std::uint64_t seed, int z, bool zero_dark = false) {
  SynthOptions opts;
  opts.zero_dark_channel = zero_dark;
  std::vector<FramePair> pairs;
  for (const auto& s : make_smoke_dataset(count, size, size, seed, opts)) pairs.push_back({s.smoky, s.clean});
  return prepare_frames(pairs, z);
}

ToyPredictor perturbed(ToyPredictor m, std::size_t c, std::size_t k, double h) {
  m.weights[c][k] += h;
  return m;
}

}  // namespace

TEST(ToyFeatures, LayoutAndValues) {
  std::mt19937_64 gen(1);
  const ImageBuffer img = st::random_image(gen, 5, 4);
  const ScalarField dark = denorm_dark_channel(img, 3);
  const std::vector<double> f = toy_features(img, dark);
  ASSERT_EQ(f.size(), 20u * kToyFeatures);
  const std::size_t p = 1 * 5 + 2;  // (x=2, y=1), interior
  for (int c = 0; c < 3; ++c) {
    EXPECT_EQ(f[p * kToyFeatures + c], img.at(2, 1, c));
    double sum = 0.0;
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) sum += img.at(2 + dx, 1 + dy, c);
    }
    EXPECT_NEAR(f[p * kToyFeatures + 4 + c], sum / 9.0, 1e-15);
  }
  EXPECT_EQ(f[p * kToyFeatures + 3], dark.at(2, 1));
  EXPECT_EQ(f[p * kToyFeatures + 7], 1.0);
}

TEST(ToyPredictor, ZeroModelGivesHalfRho) {
  const auto frames = smoke_frames(1, 16, 3, 5);
  const SurgiAtmConfig atm{0.1, 5, true};
  const Raster out = predict_output(ToyPredictor::zero(), frames[0], TrainMode::kSurgiAtm, atm);
  const ScalarField d_hat = smooth_dark_channel(frames[0].dark, 0.1);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) {
      for (int c = 0; c < 3; ++c) {
        EXPECT_NEAR(out.at(x, y, c), frames[0].smoky.at(x, y, c) - 0.5 * d_hat.at(x, y), 1e-15);
      }
    }
  }
  const Raster direct = predict_output(ToyPredictor::identity(), frames[0], TrainMode::kDirect, atm);
  for (std::size_t i = 0; i < direct.size(); ++i) EXPECT_EQ(direct.data()[i], frames[0].smoky.data()[i]);
}

TEST(LossAndGradient, MatchesFiniteDifferencesOnWeights) {
  const auto frames = smoke_frames(2, 16, 5, 3);
  const ToyPredictor model = ToyPredictor::seeded(9, 0.5);
  for (TrainMode mode : {TrainMode::kSurgiAtm, TrainMode::kDirect}) {
    for (TrainLoss loss : {TrainLoss::kL2, TrainLoss::kL1}) {
      for (double eta : {0.0, 0.1}) {
        const SurgiAtmConfig atm{eta, 3, true};
        const LossAndGradient lg = loss_and_gradient(model, frames, mode, loss, atm);
        const double h = loss == TrainLoss::kL2 ? 1e-5 : 1e-7;
        for (std::size_t c = 0; c < kToyOutputs; ++c) {
          for (std::size_t k = 0; k < kToyFeatures; ++k) {
            const double up = loss_and_gradient(perturbed(model, c, k, h), frames, mode, loss, atm).loss;
            const double down = loss_and_gradient(perturbed(model, c, k, -h), frames, mode, loss, atm).loss;
            const double numeric = (up - down) / (2.0 * h);
            const double analytic = lg.gradient.weights[c][k];
            const double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
            EXPECT_LT(rel, 1e-4) << "mode " << static_cast<int>(mode) << " loss " << static_cast<int>(loss)
                                 << " eta " << eta << " w[" << c << "][" << k << "]";
          }
        }
      }
    }
  }
}

TEST(LossAndGradient, GradientFloorKeepsEveryWeightAlive) {
  // Smoke-free zero-dark frames: with eta = 0 every gradient vanishes, with eta > 0 none does.
  const auto frames = smoke_frames(2, 16, 6, 3, true);
  std::vector<PreparedFrame> clean_only;
  for (const auto& f : frames) clean_only.push_back(prepare_frame(f.clean, f.clean, 3));
  const ToyPredictor model = ToyPredictor::seeded(2);
  const LossAndGradient lifted = loss_and_gradient(model, clean_only, TrainMode::kSurgiAtm, TrainLoss::kL2, {0.1, 3, true});
  const LossAndGradient flat = loss_and_gradient(model, clean_only, TrainMode::kSurgiAtm, TrainLoss::kL2, {0.0, 3, true});
  for (std::size_t c = 0; c < kToyOutputs; ++c) {
    for (std::size_t k = 0; k < kToyFeatures; ++k) {
      if (k == 3) continue;  // the dark-channel feature itself is zero on these frames
      EXPECT_NE(lifted.gradient.weights[c][k], 0.0) << c << "," << k;
      EXPECT_EQ(flat.gradient.weights[c][k], 0.0);
    }
  }
}

TEST(Train, DeterministicAcrossRunsAndWorkerCounts) {
  const auto frames = smoke_frames(6, 24, 7, 5);
  TrainConfig cfg;
  cfg.epochs = 15;
  cfg.learning_rate = 5.0;
  cfg.seed = 4;
  const SurgiAtmConfig atm{0.1, 5, true};
  cfg.workers = 1;
  const TrainResult a = train(std::span<const PreparedFrame>(frames), cfg, atm);
  const TrainResult b = train(std::span<const PreparedFrame>(frames), cfg, atm);
  cfg.workers = 4;
  const TrainResult c = train(std::span<const PreparedFrame>(frames), cfg, atm);
  EXPECT_EQ(a.loss_trace, b.loss_trace);
  EXPECT_EQ(a.loss_trace, c.loss_trace);
  EXPECT_EQ(a.model, c.model);
  EXPECT_EQ(a.loss_trace.size(), 16u);
}

TEST(Train, ZeroLearningRateLeavesWeights) {
  const auto frames = smoke_frames(2, 16, 8, 3);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.epochs = 5;
  cfg.seed = 11;
  const TrainResult r = train(std::span<const PreparedFrame>(frames), cfg, {0.1, 3, true});
  EXPECT_EQ(r.model, ToyPredictor::seeded(11));
  for (double v : r.loss_trace) EXPECT_EQ(v, r.loss_trace.front());
}

TEST(Train, SmokeFreePairsConvergeWithZeroEta) {
  // clean = smoky: rho -> 1 drives the loss to zero.
  const auto src = smoke_frames(3, 16, 9, 3);
  std::vector<FramePair> pairs;
  for (const auto& f : src) pairs.push_back({f.clean, f.clean});
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.learning_rate = 1e4;
  const SurgiAtmConfig atm{0.0, 3, true};
  const TrainResult r = train(std::span<const FramePair>(pairs), cfg, atm);
  EXPECT_LT(r.loss_trace.back(), 1e-6);
  for (const auto& p : pairs) {
    EXPECT_GE(psnr(restore(r.model, p.smoky, TrainMode::kSurgiAtm, atm), p.clean), 60.0);
  }
}

TEST(Train, LossTraceNonincreasingAfterSmoothing) {
  const auto frames = smoke_frames(4, 24, 10, 5, true);
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.learning_rate = 10.0;
  const TrainResult r = train(std::span<const PreparedFrame>(frames), cfg, {0.1, 5, true});
  const auto smooth = smooth_trace(r.loss_trace);
  for (std::size_t i = 1; i < smooth.size(); ++i) EXPECT_LE(smooth[i], smooth[i - 1] + 1e-15) << i;
  EXPECT_LT(r.loss_trace.back(), r.loss_trace.front());
}

TEST(Train, DivergenceNamesTheEpoch) {
  const auto frames = smoke_frames(1, 16, 11, 3);
  TrainConfig cfg;
  cfg.mode = TrainMode::kDirect;
  cfg.learning_rate = 1e200;
  cfg.epochs = 10;
  try {
    train(std::span<const PreparedFrame>(frames), cfg, {});
    FAIL() << "expected divergence";
  } catch (const TrainingError& e) {
    EXPECT_GE(e.epoch(), 0);
    EXPECT_LE(e.epoch(), 10);
  }
  cfg.learning_rate = -1.0;
  EXPECT_THROW(cfg.validate(), ArgumentError);
  EXPECT_THROW(train(std::span<const PreparedFrame>(), TrainConfig{}, {}), ArgumentError);
}

TEST(Evaluate, IdentityModelOnSmokeFreeFramesIsBoundedByEta) {
  const auto src = smoke_frames(3, 24, 12, 5, true);
  std::vector<PreparedFrame> frames;
  for (const auto& f : src) frames.push_back(prepare_frame(f.clean, f.clean, 5));
  const SurgiAtmConfig atm{0.1, 5, true};
  const MetricReport r = evaluate(ToyPredictor::identity(), frames, TrainMode::kSurgiAtm, atm);
  EXPECT_GT(r.rmse, 0.0);
  EXPECT_LE(r.rmse, 0.1 / 1.1);
  EXPECT_NEAR(mean_rmse(ToyPredictor::identity(), frames, TrainMode::kSurgiAtm, atm), r.rmse, 1e-12);
}

TEST(SmoothTrace, TrailingMean) {
  const std::vector<double> t{5, 4, 3, 2, 1, 0};
  const auto s = smooth_trace(t, 3);
  EXPECT_EQ(s, (std::vector<double>{5, 4.5, 4, 3, 2, 1}));
  EXPECT_THROW(smooth_trace(t, 0), ArgumentError);
}
