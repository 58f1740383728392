#include <gtest/gtest.h>

#include <numbers>

#include "schmidtmodes/interferometer.hpp"
#include "test_fields.hpp"

using namespace schmidtmodes;

namespace {

using testing_fields::SchellField;

constexpr double kQuarter = std::numbers::pi / 4.0;

const SchellField kField{Grid1D<double>(128, 0.1), 1.0, 0.3};

InterferometerConfig config(double phi, bool bs = true) {
  InterferometerConfig cfg;
  cfg.magnification = 2.0;
  cfg.pixel_pitch = 0.1;
  cfg.counts_scale = 1e4;
  cfg.hwp_phi = phi;
  cfg.bs_present = bs;
  return cfg;
}

}  // namespace

TEST(SimulateFrame, DetectorSizingAndGeometry) {
  const auto f = simulate_frame(kField, kField, config(0.0));
  // m n dx / p = 2 * 128 * 0.1 / 0.1
  EXPECT_EQ(f.width(), 256);
  EXPECT_EQ(f.height(), 256);
  EXPECT_DOUBLE_EQ(f.x(128), 0.0);
  EXPECT_DOUBLE_EQ(f.y(0), -12.8);
  EXPECT_TRUE((f.values.array() >= 0).all());
  EXPECT_EQ(f.meta.exposure, "simulated");
  // valid where m x stays inside the +-6.4 window: columns 96..159
  EXPECT_TRUE(f.valid(128, 96));
  EXPECT_FALSE(f.valid(128, 95));
  EXPECT_TRUE(f.valid(128, 159));
  EXPECT_FALSE(f.valid(128, 160));
  EXPECT_EQ(f.valid.count(), 64 * 64);
}

TEST(SimulateFrame, BrightFringeMaxEqualsCountsScale) {
  const auto f = simulate_frame(kField, kField, config(kQuarter));
  EXPECT_NEAR(f.values.maxCoeff(), 1e4, 1e-9);
}

TEST(SimulateFrame, EighthWaveIsMeanOfExtremes) {
  const auto f0 = simulate_frame(kField, kField, config(0.0));
  const auto f4 = simulate_frame(kField, kField, config(kQuarter));
  const auto f8 = simulate_frame(kField, kField, config(kQuarter / 2));
  EXPECT_LT((f8.values - (f0.values + f4.values) / 2).cwiseAbs().maxCoeff(), 1e-12 * 1e4);
}

TEST(SimulateFrame, DifferenceIsTheCrossTerm) {
  const auto f0 = simulate_frame(kField, kField, config(0.0));
  const auto f4 = simulate_frame(kField, kField, config(kQuarter));
  const double m = 2.0;
  for (Eigen::Index r = 96; r < 160; r += 7) {
    for (Eigen::Index c = 96; c < 160; c += 5) {
      const double x = f0.x(c), y = f0.y(r);
      // (F1 - F0) / (F1 + F0) = 2 W_x W_y / (I(mx)I(my) + I(x/m)I(y/m))
      const double cross = kField.w(m * x, x / m) * kField.w(m * y, y / m);
      const double arms = kField.w(m * x, m * x) * kField.w(m * y, m * y) + kField.w(x / m, x / m) * kField.w(y / m, y / m);
      const double sum = f4.values(r, c) + f0.values(r, c);
      EXPECT_NEAR((f4.values(r, c) - f0.values(r, c)) / sum, 2 * cross / arms, 1e-12);
    }
  }
  Eigen::Index r, c;
  (f4.values - f0.values).maxCoeff(&r, &c);
  EXPECT_EQ(r, 128);
  EXPECT_EQ(c, 128);
  EXPECT_TRUE(((f4.values - f0.values).array() >= -1e-9).all());
}

TEST(SimulateArm, DemagnifiedIntensityOnly) {
  const auto arm = simulate_arm(kField, kField, config(0.0, false));
  const double m = 2.0;
  const double center = arm.values(128, 128);
  for (Eigen::Index c = 0; c < 256; c += 9) {
    const double x = arm.x(c);
    // Gaussian I of 1/e^2 radius w becomes m w on the camera
    EXPECT_NEAR(arm.values(128, c) / center, kField.w(x / m, x / m) / kField.w(0, 0), 1e-12);
  }
  // x / m leaves the +-6.4 window only in the last column (and row)
  EXPECT_EQ(arm.valid.count(), 255 * 255);
  EXPECT_FALSE(arm.valid(128, 255));
  EXPECT_FALSE(arm.meta.bs_present);
}

TEST(SimulateFrame, ConfigurationErrors) {
  EXPECT_THROW(simulate_frame(kField, kField, config(0.0, false)), std::invalid_argument);
  EXPECT_THROW(simulate_arm(kField, kField, config(0.0, true)), std::invalid_argument);
  auto cfg = config(0.0);
  cfg.magnification = 1.0;
  EXPECT_THROW(simulate_frame(kField, kField, cfg), std::invalid_argument);
  cfg = config(0.0);
  cfg.counts_scale = 0;
  EXPECT_THROW(simulate_frame(kField, kField, cfg), std::invalid_argument);
  cfg = config(0.0);
  cfg.pixels = 63;
  EXPECT_THROW(simulate_frame(kField, kField, cfg), std::invalid_argument);
}

TEST(Noise, PoissonIsDeterministicPerSeedAndPhase) {
  auto cfg = config(kQuarter);
  cfg.pixels = 64;
  cfg.noise = {NoiseKind::Poisson, 42, 0.0};
  const auto a = simulate_frame(kField, kField, cfg);
  const auto b = simulate_frame(kField, kField, cfg);
  EXPECT_EQ(a.values, b.values);
  cfg.noise.seed = 43;
  EXPECT_NE(simulate_frame(kField, kField, cfg).values, a.values);
  cfg.noise.seed = 42;
  cfg.hwp_phi = 0.0;
  const auto c = simulate_frame(kField, kField, cfg);
  EXPECT_NE((c.values - a.values).cwiseAbs().maxCoeff(), 0.0);
  for (Eigen::Index i = 0; i < a.values.size(); ++i) EXPECT_EQ(a.values(i), std::round(a.values(i)));
}

TEST(Noise, MonteCarloMeanMatchesExpectation) {
  auto cfg = config(0.0, false);
  cfg.pixels = 32;
  cfg.pixel_pitch = 0.4;
  const auto expected = simulate_arm(kField, kField, cfg);
  cfg.noise.kind = NoiseKind::Poisson;
  Matrix<double> sum = Matrix<double>::Zero(32, 32);
  const int samples = 200;
  for (int s = 0; s < samples; ++s) {
    cfg.noise.seed = std::uint64_t(1000 + s);
    sum += simulate_arm(kField, kField, cfg).values;
  }
  const Matrix<double> mean = sum / samples;
  int outside3 = 0, outside5 = 0, counted = 0;
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    const double e = expected.values(i);
    if (e < 1.0) continue;
    ++counted;
    const double z = std::abs(mean(i) - e) / std::sqrt(e / samples);
    outside3 += z > 3;
    outside5 += z > 5;
  }
  ASSERT_GT(counted, 500);
  EXPECT_LE(outside3, counted / 100);
  EXPECT_EQ(outside5, 0);
}

TEST(RescaleArm, IdentityAtUnitMagnification) {
  const auto arm = simulate_arm(kField, kField, config(0.0, false));
  const auto same = rescale_arm(arm, 1.0);
  EXPECT_EQ(same.values, arm.values);
  EXPECT_EQ(same.meta.exposure, "rescaled");
}

TEST(RescaleArm, RecoversMagnifiedIntensity) {
  // I(x/m) resampled at m^2 x is I(m x).
  const auto arm = simulate_arm(kField, kField, config(0.0, false));
  const auto big = rescale_arm(arm, 2.0);
  const double scale = arm.values(128, 128) / (kField.w(0, 0) * kField.w(0, 0));
  double worst = 0.0;
  for (Eigen::Index r = 120; r < 137; ++r)
    for (Eigen::Index c = 120; c < 137; ++c) {
      ASSERT_TRUE(big.valid(r, c));
      const double x = arm.x(c), y = arm.y(r);
      const double direct = scale * kField.w(2 * x, 2 * x) * kField.w(2 * y, 2 * y);
      worst = std::max(worst, std::abs(big.values(r, c) - direct) / direct);
    }
  EXPECT_LT(worst, 1e-3);
  EXPECT_FALSE(big.valid(0, 0));
  EXPECT_THROW(rescale_arm(simulate_frame(kField, kField, config(0.0)), 2.0), std::invalid_argument);
}

TEST(MatchedPitch, DifferenceCoordinateAdvancesByGridStep) {
  const double dx = 0.3, m = 2.0;
  const double p = matched_pixel_pitch(dx, m);
  EXPECT_NEAR(p * (m - 1.0 / m), dx, 1e-15);
}
