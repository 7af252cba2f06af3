#include <gtest/gtest.h>

#include <Eigen/QR>
#include <cmath>
#include <random>

#include "hdrexp/simulator.hpp"
#include "hdrexp/solver.hpp"

namespace hdrexp {
namespace {

// Reference: stacked least squares [sqrt(W) O; sqrt(lambda) I] e = [sqrt(W) m; sqrt(lambda) e0]
// solved by column-pivoted QR, then shifted so that e(gauge) == e0(gauge).
Eigen::VectorXd reference_solve(const std::vector<PairEquation>& eqs, const Eigen::VectorXd& e0, double lambda,
                                Index gauge) {
  const Index n = e0.size();
  const auto rows = static_cast<Index>(eqs.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows + n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(rows + n);
  for (Index r = 0; r < rows; ++r) {
    const PairEquation& eq = eqs[static_cast<std::size_t>(r)];
    const double s = std::sqrt(eq.w);
    a(r, eq.i) += s;
    a(r, eq.j) -= s;
    b(r) = s * eq.m;
  }
  a.bottomRows(n) = std::sqrt(lambda) * Eigen::MatrixXd::Identity(n, n);
  b.tail(n) = std::sqrt(lambda) * e0;
  if (lambda == 0.0) {
    // Without the prior the gauge is free: fix e(gauge) and drop its column.
    b -= a.col(gauge) * e0(gauge);
    Eigen::MatrixXd reduced(a.rows(), n - 1);
    for (Index c = 0, k = 0; c < n; ++c)
      if (c != gauge) reduced.col(k++) = a.col(c);
    const Eigen::VectorXd x = reduced.colPivHouseholderQr().solve(b);
    Eigen::VectorXd e(n);
    for (Index c = 0, k = 0; c < n; ++c) e(c) = c == gauge ? e0(gauge) : x(k++);
    return e;
  }
  Eigen::VectorXd e = a.colPivHouseholderQr().solve(b);
  e.array() += e0(gauge) - e(gauge);
  return e;
}

std::vector<PairEquation> random_rows(Index n, int count, std::mt19937_64& gen, const Eigen::VectorXd& truth,
                                      double noise) {
  std::uniform_int_distribution<int> pick(0, static_cast<int>(n) - 1);
  std::uniform_real_distribution<double> weight(0.1, 10.0);
  std::normal_distribution<double> jitter(0.0, noise);
  std::vector<PairEquation> eqs;
  for (int i = 0; i + 1 < n; ++i) eqs.push_back({i, i + 1, 0, 0, truth(i) - truth(i + 1) + jitter(gen), weight(gen), 0});
  while (static_cast<int>(eqs.size()) < count) {
    int i = pick(gen), j = pick(gen);
    if (i == j) continue;
    if (i > j) std::swap(i, j);
    eqs.push_back({i, j, 0, 0, truth(i) - truth(j) + jitter(gen), weight(gen), 0});
  }
  return eqs;
}

TEST(SolveWlsTest, MatchesDenseReference) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> normal(0.0, 2.0);
  for (int trial = 0; trial < 40; ++trial) {
    const Index n = 2 + trial % 6;
    Eigen::VectorXd truth(n), e0(n);
    for (Index i = 0; i < n; ++i) {
      truth(i) = normal(gen);
      e0(i) = truth(i) + 0.2 * normal(gen);
    }
    const auto eqs = random_rows(n, 3 * static_cast<int>(n), gen, truth, 0.05);
    for (double lambda : {0.0, 0.5, 10.0}) {
      const ExposureEstimate est = solve_wls(eqs, n, e0, lambda);
      const Eigen::VectorXd ref = reference_solve(eqs, e0, lambda, n - 1);
      EXPECT_LT((est.e_hat - ref).cwiseAbs().maxCoeff(), 1e-10) << "trial " << trial << " lambda " << lambda;
      EXPECT_NEAR(est.e_hat(n - 1), e0(n - 1), 1e-12);
    }
  }
}

TEST(SolveWlsTest, EmptySystemReturnsPrior) {
  const Eigen::VectorXd e0 = Eigen::Vector3d(-2.0, 0.5, 1.0);
  const ExposureEstimate est = solve_wls(std::span<const PairEquation>{}, 3, e0, 10.0);
  EXPECT_TRUE(est.e_hat.isApprox(e0, 1e-15));
  EXPECT_EQ(est.residual_norm, 0.0);
}

TEST(SolveWlsTest, ConsistentRowsAreRecoveredExactlyWithoutRegularisation) {
  const Eigen::VectorXd truth = Eigen::Vector4d(-4.1, -2.0, 0.1, 2.2);
  std::vector<PairEquation> eqs{{0, 1, 0, 0, truth(0) - truth(1), 2.0, 0},
                                {1, 2, 0, 0, truth(1) - truth(2), 0.5, 0},
                                {2, 3, 0, 0, truth(2) - truth(3), 1.0, 0},
                                {0, 3, 0, 0, truth(0) - truth(3), 3.0, 0}};
  const Eigen::VectorXd e0 = Eigen::Vector4d(-3.0, -1.0, 0.0, 2.2);
  const ExposureEstimate est = solve_wls(eqs, 4, e0, 0.0);
  EXPECT_LT((est.e_hat - truth).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(est.residual_norm, 1e-12);
}

TEST(SolveWlsTest, UnregularisedSolutionIgnoresPriorUpToGauge) {
  std::mt19937_64 gen(8);
  const Eigen::VectorXd truth = Eigen::Vector4d(-4.0, -2.0, 0.0, 2.0);
  const auto eqs = random_rows(4, 12, gen, truth, 0.1);
  const ExposureEstimate a = solve_wls(eqs, 4, Eigen::Vector4d(0.0, 0.0, 0.0, 2.0), 0.0);
  const ExposureEstimate b = solve_wls(eqs, 4, Eigen::Vector4d(-9.0, 3.0, 1.0, 2.0), 0.0);
  EXPECT_LT((a.e_hat - b.e_hat).cwiseAbs().maxCoeff(), 1e-12);
  const ExposureEstimate c = solve_wls(eqs, 4, Eigen::Vector4d(0.0, 0.0, 0.0, 5.0), 0.0);
  EXPECT_LT((c.e_hat.array() - 3.0 - a.e_hat.array()).abs().maxCoeff(), 1e-12);
}

TEST(SolveWlsTest, RegularisationPullsTowardPrior) {
  std::mt19937_64 gen(9);
  const Eigen::VectorXd truth = Eigen::Vector4d(-4.0, -2.0, 0.0, 2.0);
  const Eigen::VectorXd e0 = Eigen::Vector4d(-3.5, -2.4, 0.3, 2.0);
  const auto eqs = random_rows(4, 12, gen, truth, 0.0);
  double previous = -1.0;
  for (double lambda : {1e-3, 0.1, 1.0, 10.0, 1e3, 1e7}) {
    const ExposureEstimate est = solve_wls(eqs, 4, e0, lambda);
    const double to_truth = (est.e_hat - truth).norm();
    EXPECT_GT(to_truth, previous);
    previous = to_truth;
  }
  EXPECT_LT((solve_wls(eqs, 4, e0, 1e9).e_hat - e0).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT((solve_wls(eqs, 4, e0, 1e-9).e_hat - truth).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(SolveWlsTest, DisconnectedGraphNeedsRegularisationOrComponentGauge) {
  std::vector<PairEquation> eqs{{0, 1, 0, 0, -1.0, 1.0, 0}, {2, 3, 0, 0, -0.5, 1.0, 0}};
  const Eigen::VectorXd e0 = Eigen::Vector4d(0.0, 1.2, 3.0, 4.0);
  EXPECT_THROW(solve_wls(eqs, 4, e0, 0.0), UnsolvableSystem);
  const ExposureEstimate pinned = solve_wls(eqs, 4, e0, 0.0, std::nullopt, true);
  EXPECT_NEAR(pinned.e_hat(1), 1.2, 1e-12);
  EXPECT_NEAR(pinned.e_hat(0), 0.2, 1e-12);
  EXPECT_NEAR(pinned.e_hat(3), 4.0, 1e-12);
  EXPECT_NEAR(pinned.e_hat(2), 3.5, 1e-12);
  EXPECT_NO_THROW(solve_wls(eqs, 4, e0, 1.0));
}

TEST(SolveWlsTest, RejectsBadArguments) {
  std::vector<PairEquation> eqs{{0, 5, 0, 0, 0.0, 1.0, 0}};
  EXPECT_THROW(solve_wls(eqs, 2, Eigen::Vector2d::Zero(), 1.0), ShapeMismatch);
  EXPECT_THROW(solve_wls(std::span<const PairEquation>{}, 3, Eigen::Vector2d::Zero(), 1.0), ShapeMismatch);
  EXPECT_THROW(solve_wls(std::span<const PairEquation>{}, 2, Eigen::Vector2d::Zero(), -1.0), DomainError);
  EXPECT_THROW(solve_wls(std::span<const PairEquation>{}, 2, Eigen::Vector2d::Zero(), 1.0, Index{2}), DomainError);
}

TEST(BaselineTest, RowsCarryLogOfMeanLinearRatio) {
  std::vector<PairEquation> eqs{{0, 1, 0, 0, std::log(0.2), 5.0, 0},
                                {0, 1, 1, 0, std::log(0.4), 1.0, 0},
                                {1, 2, 0, 0, std::log(0.5), 2.0, 0}};
  const auto rows = ratio_baseline_equations(eqs);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_NEAR(rows[0].m, std::log(0.3), 1e-12);
  EXPECT_NEAR(rows[1].m, std::log(0.3), 1e-12);
  EXPECT_NEAR(rows[2].m, std::log(0.5), 1e-12);
  for (const auto& r : rows) EXPECT_EQ(r.w, 1.0);
}

std::vector<PairEquation> tile_rows(Index tile, double shift) {
  // Two exposures whose prior ratio is ln 0.25.
  return {{0, 1, tile * 10, 0, std::log(0.25) + shift, 1.0, tile}, {0, 1, tile * 10 + 1, 0, std::log(0.25) + shift, 1.0, tile}};
}

TEST(OutlierTest, RejectsTilesFarFromPrior) {
  ReducedSystem sys;
  sys.n_exposures = 2;
  for (Index t = 0; t < 5; ++t) {
    const auto rows = tile_rows(t, t == 3 ? std::log(2.0) : 0.02);
    sys.equations.insert(sys.equations.end(), rows.begin(), rows.end());
  }
  const Eigen::VectorXd e0 = Eigen::Vector2d(std::log(0.25), 0.0);
  const OutlierResult out = reject_outlier_tiles(sys, e0, 0.0, std::log(1.5));
  EXPECT_EQ(out.rejected_tiles, (std::vector<Index>{3}));
  EXPECT_EQ(out.kept_tiles, (std::vector<Index>{0, 1, 2, 4}));
  EXPECT_EQ(out.merged.equations.size(), 8u);
  EXPECT_FALSE(out.all_rejected);

  const OutlierResult none = reject_outlier_tiles(sys, e0, 0.0, std::numeric_limits<double>::infinity());
  EXPECT_TRUE(none.rejected_tiles.empty());

  const OutlierResult all = reject_outlier_tiles(sys, e0, 0.0, 0.01);
  EXPECT_TRUE(all.all_rejected);
  EXPECT_THROW(reject_outlier_tiles(sys, e0, 0.0, 0.0), DomainError);
}

TEST(OutlierTest, RequiresTileSortedEquations) {
  ReducedSystem sys;
  sys.n_exposures = 2;
  for (Index t : {1, 0, 1}) {
    const auto rows = tile_rows(t, 0.0);
    sys.equations.insert(sys.equations.end(), rows.begin(), rows.end());
  }
  EXPECT_THROW(reject_outlier_tiles(sys, Eigen::Vector2d(std::log(0.25), 0.0), 0.0, 0.4), DataError);
}

TEST(EstimateExposuresTest, RecoversCorruptedMetadataOnCleanStack) {
  SimConfig sim;
  sim.iso = 100;
  sim.seed = 2;
  const Eigen::VectorXd err = Eigen::Vector4d(0.12, -0.1, 0.08, 0.0);
  const SimulatedStack s = simulate_stack(procedural_scene(7, 128, 128), sim, canon_s100_profile().at_iso(100), err);
  EstimateConfig config;
  config.build.weight_mode = WeightMode::calibrated;
  config.build.noise = canon_s100_profile().at_iso(100);
  const EstimateResult r = estimate_exposures(s.stack, config);
  EXPECT_FALSE(r.fell_back_to_prior);
  EXPECT_GE(r.system_rows, r.equation_count);
  const Eigen::VectorXd err_hat = r.estimate.e_hat - s.e_true;
  EXPECT_LT(err_hat.cwiseAbs().maxCoeff(), 0.03);
  EXPECT_GT((s.e_exif - s.e_true).cwiseAbs().maxCoeff(), 0.09);
}

TEST(EstimateExposuresTest, FallsBackToPriorWhenEveryTileIsRejected) {
  SimConfig sim;
  sim.exposure_times = {0.25, 1.0};
  const SimulatedStack s = simulate_stack(procedural_scene(7, 64, 64), sim, canon_s100_profile().at_iso(100),
                                          Eigen::Vector2d(std::log(3.0), 0.0));
  EstimateConfig config;
  config.build.weight_mode = WeightMode::calibrated;
  config.build.noise = canon_s100_profile().at_iso(100);
  const EstimateResult r = estimate_exposures(s.stack, config);
  EXPECT_TRUE(r.fell_back_to_prior);
  EXPECT_TRUE(r.estimate.e_hat.isApprox(s.stack.log_priors()));
  EXPECT_FALSE(r.rejected_tiles.empty());
  EXPECT_TRUE(r.kept_tiles.empty());

  config.reject_outliers = false;
  EXPECT_FALSE(estimate_exposures(s.stack, config).fell_back_to_prior);
}

}  // namespace
}  // namespace hdrexp
