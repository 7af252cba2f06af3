#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hdrexp/noise.hpp"
#include "test_util.hpp"

namespace hdrexp {
namespace {

using testing::TempDir;

// Independent reference: variance of ln Y by the delta method, written out from scratch.
double reference_log_variance(double y, double alpha, double beta) { return (alpha * y + beta) / (y * y); }

TEST(NoiseProfileTest, CanonProfileCoversFourIsos) {
  const NoiseProfile& p = canon_s100_profile();
  EXPECT_EQ(p.name, "canon-s100");
  EXPECT_EQ(p.isos(), (std::vector<int>{100, 200, 400, 800}));
  for (const auto& e : p.entries) EXPECT_NO_THROW(e.validate());
}

TEST(NoiseProfileTest, NoiseGrowsWithIso) {
  const NoiseProfile& p = canon_s100_profile();
  for (std::size_t k = 1; k < p.entries.size(); ++k)
    for (std::size_t c = 0; c < 3; ++c) {
      EXPECT_GT(p.entries[k].alpha[c], p.entries[k - 1].alpha[c]);
      EXPECT_GT(p.entries[k].beta[c], p.entries[k - 1].beta[c]);
    }
}

TEST(NoiseProfileTest, UnknownIsoListsAvailableValues) {
  try {
    canon_s100_profile().at_iso(300);
    FAIL() << "expected UnknownIso";
  } catch (const UnknownIso& e) {
    EXPECT_NE(std::string(e.what()).find("100 200 400 800"), std::string::npos);
  }
}

TEST(NoiseProfileTest, MonochromeUsesGreen) {
  const NoiseParameters& p = canon_s100_profile().at_iso(400);
  EXPECT_EQ(p.channel(0, 1).alpha, p.alpha[1]);
  EXPECT_EQ(p.channel(0, 1).beta, p.beta[1]);
  EXPECT_EQ(p.channel(2, 3).alpha, p.alpha[2]);
}

TEST(NoiseProfileTest, JsonRoundTripAndResolve) {
  TempDir dir;
  write_noise_profile(dir / "p.json", canon_s100_profile());
  const NoiseProfile back = resolve_noise_profile((dir / "p.json").string());
  ASSERT_EQ(back.entries.size(), 4u);
  EXPECT_DOUBLE_EQ(back.at_iso(800).beta[2], canon_s100_profile().at_iso(800).beta[2]);
  EXPECT_EQ(resolve_noise_profile("canon-s100").name, "canon-s100");
  testing::spit(dir / "bad.json", R"({"name": "x", "entries": [{"iso": 100, "alpha": [0, 1, 1], "beta": [0, 0, 0]}]})");
  EXPECT_THROW(read_noise_profile(dir / "bad.json"), DomainError);
  testing::spit(dir / "empty.json", R"({"name": "x", "entries": []})");
  EXPECT_THROW(read_noise_profile(dir / "empty.json"), DataError);
  EXPECT_THROW(resolve_noise_profile((dir / "absent.json").string()), FileReadError);
}

TEST(PixelVarianceTest, AffineInMean) {
  const ChannelNoise green = canon_s100_profile().at_iso(100).channel(1);
  EXPECT_NEAR(pixel_variance(0.5, green), 8.3713e-6, 1e-10);
  EXPECT_DOUBLE_EQ(pixel_variance(0.0, green), green.beta);
  EXPECT_THROW(pixel_variance(-0.1, green), DomainError);
}

TEST(LogMomentsTest, MatchesDeltaMethod) {
  const ChannelNoise n{2e-4, 1e-6};
  for (double y : {0.01, 0.1, 0.9}) {
    const LogMoments m = log_moments(y, n);
    EXPECT_DOUBLE_EQ(m.expected_log, std::log(y));
    EXPECT_NEAR(m.log_variance, reference_log_variance(y, n.alpha, n.beta), 1e-15);
  }
  EXPECT_THROW(log_moments(0.0, n), DomainError);
}

TEST(LogMomentsTest, AgreesWithMonteCarloAtHighSnr) {
  const ChannelNoise n{1e-4, 0.0};
  const double mu = 0.25;  // mu / sigma = 50
  const double sigma = std::sqrt(pixel_variance(mu, n));
  std::mt19937_64 gen(11);
  std::normal_distribution<double> normal(mu, sigma);
  double sum = 0.0, sum2 = 0.0;
  const int count = 200000;
  for (int k = 0; k < count; ++k) {
    const double l = std::log(normal(gen));
    sum += l;
    sum2 += l * l;
  }
  const double mean = sum / count;
  const double var = sum2 / count - mean * mean;
  EXPECT_NEAR(var / log_moments(mu, n).log_variance, 1.0, 0.02);
}

TEST(WeightTest, CalibratedIsInverseSumOfLogVariances) {
  const ChannelNoise a{1.7e-5, 2.1e-8}, b{7.4e-5, 1.3e-7};
  const double yi = 0.03, yj = 0.4;
  const double expected = 1.0 / (reference_log_variance(yi, a.alpha, a.beta) + reference_log_variance(yj, b.alpha, b.beta));
  EXPECT_NEAR(row_weight_calibrated(yi, yj, a, b) / expected, 1.0, 1e-14);
  EXPECT_DOUBLE_EQ(row_weight_calibrated(yi, yj, a), row_weight_calibrated(yi, yj, a, a));
}

TEST(WeightTest, CalibrationFreeIsProportionalWhenBetaVanishes) {
  const ChannelNoise n{3e-5, 0.0};
  for (double yi : {0.02, 0.1, 0.5})
    for (double yj : {0.05, 0.3, 0.9})
      EXPECT_NEAR(row_weight_calibrated(yi, yj, n) / row_weight_calibration_free(yi, yj), 1.0 / n.alpha,
                  1e-9 / n.alpha);
}

TEST(WeightTest, SymmetricAndIncreasingInEachSample) {
  EXPECT_DOUBLE_EQ(row_weight_calibration_free(0.2, 0.7), row_weight_calibration_free(0.7, 0.2));
  EXPECT_LT(row_weight_calibration_free(0.1, 0.5), row_weight_calibration_free(0.2, 0.5));
  const ChannelNoise n = canon_s100_profile().at_iso(800).channel(1);
  EXPECT_LT(row_weight_calibrated(0.01, 0.5, n), row_weight_calibrated(0.05, 0.5, n));
  EXPECT_THROW(row_weight_calibration_free(0.0, 0.5), DomainError);
  EXPECT_THROW(row_weight_calibrated(0.5, -1.0, n), DomainError);
}

}  // namespace
}  // namespace hdrexp
