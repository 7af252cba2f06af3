#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "hdrexp/stack.hpp"
#include "hdrexp/system.hpp"

namespace hdrexp {

struct SolveConfig {
  double lambda = 10.0;
  double outlier_threshold_log = std::log(1.5);
  std::optional<Index> gauge;  // exposure pinned to its prior after solving; default: longest

  void validate() const;
};

namespace detail {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// O^T W O and O^T W m for rows e_i - e_j = m.
template <typename Scalar>
struct NormalEquations {
  Mat<Scalar> lhs;
  Vec<Scalar> rhs;

  explicit NormalEquations(Index n) : lhs(Mat<Scalar>::Zero(n, n)), rhs(Vec<Scalar>::Zero(n)) {}

  void add(const PairEquation& eq) {
    const auto w = static_cast<Scalar>(eq.w);
    const auto wm = w * static_cast<Scalar>(eq.m);
    lhs(eq.i, eq.i) += w;
    lhs(eq.j, eq.j) += w;
    lhs(eq.i, eq.j) -= w;
    lhs(eq.j, eq.i) -= w;
    rhs(eq.i) += wm;
    rhs(eq.j) -= wm;
  }
};

/// Pins vertex g to `value` by eliminating its row and column.
template <typename Scalar>
void ground(NormalEquations<Scalar>& ne, Index g, Scalar value) {
  ne.rhs -= ne.lhs.col(g) * value;
  ne.lhs.row(g).setZero();
  ne.lhs.col(g).setZero();
  ne.lhs(g, g) = Scalar(1);
  ne.rhs(g) = value;
}

/// Minimises ||sqrt(W)(O e - m)||^2 + lambda ||e - e0||^2. With lambda == 0 each connected
/// component is grounded at `anchors[c]` (pinned to its prior); the caller decides whether
/// more than one component is acceptable.
template <typename Scalar>
Vec<Scalar> solve_normal(NormalEquations<Scalar> ne, const Vec<Scalar>& e0, Scalar lambda,
                         const std::vector<Index>& anchors) {
  if (lambda > Scalar(0)) {
    ne.lhs.diagonal().array() += lambda;
    ne.rhs += lambda * e0;
  } else {
    for (Index g : anchors) ground(ne, g, e0(g));
  }
  Eigen::LLT<Mat<Scalar>> llt(ne.lhs);
  if (llt.info() != Eigen::Success) throw UnsolvableSystem("normal matrix is not positive definite");
  Vec<Scalar> e = llt.solve(ne.rhs);
  if (!e.allFinite()) throw UnsolvableSystem("normal equations produced a non-finite solution");
  return e;
}

}  // namespace detail

/// Tikhonov-regularised WLS over `equations` with n exposures, gauge-shifted so that
/// e_hat(gauge) == e0(gauge). With lambda == 0 a disconnected graph throws UnsolvableSystem
/// unless `per_component_gauge` is set, in which case every component is pinned to the
/// prior of its longest exposure.
ExposureEstimate solve_wls(std::span<const PairEquation> equations, Index n, const Eigen::VectorXd& e0,
                           double lambda, std::optional<Index> gauge = std::nullopt,
                           bool per_component_gauge = false);

ExposureEstimate solve_wls(const ReducedSystem& system, const Eigen::VectorXd& e0, double lambda,
                           std::optional<Index> gauge = std::nullopt);

/// Weighted residual ||sqrt(W)(O e - m)||.
double weighted_residual(std::span<const PairEquation> equations, const Eigen::VectorXd& e);

/// Collapses the equations of each exposure pair into rows carrying ln of the mean
/// linear ratio y_i / y_j over that pair, with unit weights (linear-domain expectation of
/// the ratio instead of the expectation of the log ratio).
std::vector<PairEquation> ratio_baseline_equations(std::span<const PairEquation> equations);

/// Baseline estimator: uniform-weight tiling and spanning-tree selection, mean linear ratios.
ExposureEstimate baseline_ratio(const ExposureStack& stack, BuildConfig build, const Eigen::VectorXd& e0,
                                double lambda);

enum class Estimator { wls, ratio_baseline };

struct OutlierResult {
  std::vector<Index> kept_tiles;
  std::vector<Index> rejected_tiles;
  ReducedSystem merged;  // equations of the kept tiles only
  bool all_rejected = false;
};

/// Solves every tile's equations on their own (same lambda and e0, gauge at the longest
/// exposure) and drops tiles whose estimate deviates from e0 by more than `threshold`
/// (natural-log units) for any exposure. `system` must be sorted by tile.
OutlierResult reject_outlier_tiles(const ReducedSystem& system, const Eigen::VectorXd& e0, double lambda,
                                   double threshold, Estimator estimator = Estimator::wls, int threads = 1);

struct EstimateConfig {
  BuildConfig build;
  SolveConfig solve;
  Estimator estimator = Estimator::wls;
  bool reject_outliers = true;
};

struct EstimateResult {
  ExposureEstimate estimate;
  std::vector<Index> kept_tiles;
  std::vector<Index> rejected_tiles;
  Index system_rows = 0;         // rows of the reduced system before outlier rejection
  Index equation_count = 0;      // rows in the final solve
  bool fell_back_to_prior = false;  // every tile was rejected; estimate == e0
};

/// Full pipeline: build the reduced system, reject outlier tiles, solve.
EstimateResult estimate_exposures(const ExposureStack& stack, const EstimateConfig& config);

}  // namespace hdrexp
