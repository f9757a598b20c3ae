#include <gtest/gtest.h>

#include "surgiatm/dark_channel.hpp"
#include "surgiatm/errors.hpp"
#include "surgiatm/smoke_sim.hpp"
#include "test_util.hpp"

using namespace surgiatm;
namespace st = surgiatm::testing;

TEST(WindowMin, ConstantAndUnitWindow) {
  const ScalarField flat(6, 4, 0.42);
  EXPECT_EQ(window_min(flat, 5), flat);
  std::mt19937_64 gen(1);
  const ScalarField f = st::random_field(gen, 7, 9);
  EXPECT_EQ(window_min(f, 1), f);
}

TEST(WindowMin, EvenWindowRejected) {
  EXPECT_THROW(window_min(ScalarField(3, 3), 2), ArgumentError);
  EXPECT_THROW(window_min(ScalarField(3, 3), 0), ArgumentError);
  EXPECT_THROW(window_min(ScalarField(3, 3), -3), ArgumentError);
}

TEST(WindowMin, MatchesBruteForce) {
  std::mt19937_64 gen(2);
  const ScalarField f = st::random_field(gen, 7, 7);
  EXPECT_EQ(window_min(f, 3), st::brute_window_min(f, 3));
  for (int trial = 0; trial < 50; ++trial) {
    const int w = 1 + static_cast<int>(gen() % 24);
    const int h = 1 + static_cast<int>(gen() % 24);
    const int z = 1 + 2 * static_cast<int>(gen() % 8);
    const ScalarField g = st::random_field(gen, w, h);
    ASSERT_EQ(window_min(g, z), st::brute_window_min(g, z)) << w << "x" << h << " z=" << z;
  }
}

TEST(WindowMin, ComposesToLargerWindowInInterior) {
  std::mt19937_64 gen(3);
  for (int z : {3, 5, 7}) {
    const ScalarField f = st::random_field(gen, 30, 30);
    const ScalarField twice = window_min(window_min(f, z), z);
    const ScalarField wide = st::brute_window_min(f, 2 * z - 1);
    const int margin = z;
    for (int y = margin; y < 30 - margin; ++y) {
      for (int x = margin; x < 30 - margin; ++x) EXPECT_EQ(twice.at(x, y), wide.at(x, y));
    }
  }
}

TEST(WindowMin, IndependentOfWorkerCount) {
  std::mt19937_64 gen(4);
  const ScalarField f = st::random_field(gen, 67, 45);
  const ScalarField one = window_min(f, 15, 1);
  EXPECT_EQ(window_min(f, 15, 3), one);
  EXPECT_EQ(window_min(f, 15, 8), one);
}

TEST(DarkChannel, FullyHazyLimitAndDarkPixel) {
  const Airlight a({0.8, 0.7, 0.9});
  Raster r(5, 5, 3);
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 5; ++x) {
      for (int c = 0; c < 3; ++c) r.at(x, y, c) = a[c];
    }
  }
  for (double v : st::values(dark_channel(ImageBuffer(r), a, 3))) EXPECT_EQ(v, 1.0);
  r.at(2, 2, 1) = 0.0;
  const ScalarField d = dark_channel(ImageBuffer(r), a, 3);
  for (int y = 1; y <= 3; ++y) {
    for (int x = 1; x <= 3; ++x) EXPECT_EQ(d.at(x, y), 0.0);
  }
  EXPECT_EQ(d.at(0, 0), 1.0);
}

TEST(DarkChannel, MatchesBruteForceDoubleMin) {
  std::mt19937_64 gen(5);
  const ImageBuffer img = st::random_image(gen, 9, 9);
  const double unit[3] = {1, 1, 1};
  EXPECT_EQ(dark_channel(img, Airlight::uniform(1.0), 3), st::brute_dark_channel(img, 3, unit));
  const double a[3] = {0.9, 0.95, 0.85};
  ScalarField expect = st::brute_dark_channel(img, 3, a);
  for (double& v : expect.data()) v = std::clamp(v, 0.0, 1.0);
  EXPECT_EQ(dark_channel(img, Airlight({0.9, 0.95, 0.85}), 3), expect);
}

TEST(DenormDarkChannel, LimitsAndBruteForce) {
  for (double v : st::values(denorm_dark_channel(ImageBuffer(6, 6, 3, 1.0), 3))) EXPECT_EQ(v, 1.0);
  Raster saturated(6, 6, 3, 0.0);
  for (int y = 0; y < 6; ++y) {
    for (int x = 0; x < 6; ++x) saturated.at(x, y, 0) = 1.0;
  }
  for (double v : st::values(denorm_dark_channel(ImageBuffer(saturated), 5))) EXPECT_EQ(v, 0.0);

  std::mt19937_64 gen(6);
  const double unit[3] = {1, 1, 1};
  const ImageBuffer img = st::random_image(gen, 17, 12);
  EXPECT_EQ(denorm_dark_channel(img, 5), st::brute_dark_channel(img, 5, unit));
}

TEST(DenormDarkChannel, Properties) {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 20; ++trial) {
    const ImageBuffer img = st::random_image(gen, 12, 10);
    const ScalarField d = denorm_dark_channel(img, 5);
    // Window min never exceeds the centre pixel's channel minimum.
    for (int y = 0; y < 10; ++y) {
      for (int x = 0; x < 12; ++x) {
        EXPECT_LE(d.at(x, y), std::min({img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2)}));
      }
    }
    // A = (1,1,1) makes the two dark channels coincide.
    EXPECT_EQ(dark_channel(img, Airlight::uniform(1.0), 5), d);
    // Raising one sample never lowers the dark channel anywhere.
    Raster bumped = img.raster();
    bumped.at(static_cast<int>(gen() % 12), static_cast<int>(gen() % 10), static_cast<int>(gen() % 3)) = 1.0;
    const ScalarField d2 = denorm_dark_channel(ImageBuffer(bumped), 5);
    for (std::size_t i = 0; i < d.size(); ++i) EXPECT_GE(d2.data()[i], d.data()[i]);
  }
}

TEST(Airlight, UniformHalfBlackAndFloor) {
  const ImageBuffer uniform(Raster(8, 8, 3, 0.6));
  EXPECT_EQ(estimate_airlight(uniform, 3, 0.01).values(), (std::array<double, 3>{0.6, 0.6, 0.6}));

  Raster half(40, 40, 3, 0.0);
  for (int y = 0; y < 40; ++y) {
    for (int x = 20; x < 40; ++x) {
      for (int c = 0; c < 3; ++c) half.at(x, y, c) = 0.9;
    }
  }
  const Airlight a = estimate_airlight(ImageBuffer(half), 5, 0.01);
  for (int c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(a[c], 0.9);

  const Airlight floor = estimate_airlight(ImageBuffer(10, 10, 3, 0.0), 3, 0.001);
  for (int c = 0; c < 3; ++c) EXPECT_EQ(floor[c], kAirlightFloor);
  EXPECT_THROW(estimate_airlight(uniform, 3, 0.0), ArgumentError);
  EXPECT_THROW(Airlight({0.0, 0.5, 0.5}), DomainError);
}

TEST(DcpRestore, SmokeFreeFrameIsUnchanged) {
  std::mt19937_64 gen(8);
  Raster r = st::random_image(gen, 20, 20).raster();
  for (int y = 0; y < 20; ++y) {
    for (int x = 0; x < 20; ++x) r.at(x, y, 2) = 0.0;  // dark channel 0 everywhere
  }
  const ImageBuffer img(r);
  DcpConfig cfg;
  cfg.z = 3;
  EXPECT_EQ(dcp_restore(img, cfg, Airlight::uniform(0.9)), img);
  EXPECT_EQ(dcp_restore(img, cfg), img);
}

TEST(DcpRestore, InvertsUniformComposite) {
  const ImageBuffer clean = synthetic_tissue(48, 48, 21, true);
  const Airlight a({0.92, 0.9, 0.88});
  const SmokeField smoke(ScalarField(48, 48, 0.4), a);  // t = 0.6
  const ImageBuffer hazy = composite(clean, smoke);
  DcpConfig cfg;
  const ImageBuffer restored = dcp_restore(hazy, cfg, a);
  for (std::size_t i = 0; i < clean.size(); ++i) EXPECT_NEAR(restored.data()[i], clean.data()[i], 0.02);
}

TEST(DcpRestore, FloorBoundaryAndClampContract) {
  // D = 1 - t0 exactly: divisor t0, no clipping engaged.
  const Airlight a = Airlight::uniform(1.0);
  DcpConfig cfg;
  cfg.z = 1;
  const double i_val = 1.0 - cfg.t0;
  const ImageBuffer img(Raster(1, 1, 3, i_val));
  const double expected = i_val + (i_val - 1.0) * (1.0 - cfg.t0) / cfg.t0;
  EXPECT_DOUBLE_EQ(dcp_restore(img, cfg, a).at(0, 0, 0), std::clamp(expected, 0.0, 1.0));

  std::mt19937_64 gen(9);
  for (int trial = 0; trial < 10; ++trial) {
    const ImageBuffer any = st::random_image(gen, 11, 9);
    for (double v : st::values(dcp_restore(any, cfg))) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
  DcpConfig bad;
  bad.t0 = 0.0;
  EXPECT_THROW(bad.validate(), ArgumentError);
}
