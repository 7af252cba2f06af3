#include "hdrexp/solver.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "hdrexp/parallel.hpp"

namespace hdrexp {

void SolveConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("lambda must be >= 0");
  if (!(outlier_threshold_log > 0.0)) throw DomainError("outlier threshold must be > 0");
}

double weighted_residual(std::span<const PairEquation> equations, const Eigen::VectorXd& e) {
  double sum = 0.0;
  for (const PairEquation& eq : equations) {
    const double r = e(eq.i) - e(eq.j) - eq.m;
    sum += eq.w * r * r;
  }
  return std::sqrt(sum);
}

ExposureEstimate solve_wls(std::span<const PairEquation> equations, Index n, const Eigen::VectorXd& e0,
                           double lambda, std::optional<Index> gauge, bool per_component_gauge) {
  if (e0.size() != n) throw ShapeMismatch("prior length does not match exposure count");
  if (!(lambda >= 0.0)) throw DomainError("lambda must be >= 0");
  const Index g = gauge.value_or(n - 1);
  if (g < 0 || g >= n) throw DomainError("gauge exposure out of range");

  std::vector<Index> anchors;
  if (lambda == 0.0) {
    const auto components = exposure_components(equations, n);
    if (components.size() > 1 && !per_component_gauge) {
      std::ostringstream msg;
      msg << "lambda = 0 and the exposure graph is disconnected; unreachable from exposure " << g << ':';
      for (const auto& comp : components)
        if (std::find(comp.begin(), comp.end(), g) == comp.end())
          for (Index v : comp) msg << ' ' << v;
      throw UnsolvableSystem(msg.str());
    }
    for (const auto& comp : components)
      anchors.push_back(std::find(comp.begin(), comp.end(), g) != comp.end() ? g : comp.back());
  }

  detail::NormalEquations<double> ne(n);
  for (const PairEquation& eq : equations) {
    if (eq.i < 0 || eq.j < 0 || eq.i >= n || eq.j >= n) throw ShapeMismatch("equation exposure index out of range");
    ne.add(eq);
  }
  Eigen::VectorXd e = detail::solve_normal<double>(std::move(ne), e0, lambda, anchors);
  e.array() += e0(g) - e(g);

  ExposureEstimate est;
  est.e_hat = std::move(e);
  est.e0 = e0;
  est.lambda = lambda;
  est.residual_norm = weighted_residual(equations, est.e_hat);
  return est;
}

ExposureEstimate solve_wls(const ReducedSystem& system, const Eigen::VectorXd& e0, double lambda,
                           std::optional<Index> gauge) {
  return solve_wls(system.equations, system.n_exposures, e0, lambda, gauge);
}

std::vector<PairEquation> ratio_baseline_equations(std::span<const PairEquation> equations) {
  struct Accum {
    double ratio_sum = 0.0;
    Index count = 0;
  };
  std::map<std::pair<int, int>, Accum> pairs;
  for (const PairEquation& eq : equations) {
    Accum& a = pairs[{eq.i, eq.j}];
    a.ratio_sum += std::exp(eq.m);
    ++a.count;
  }
  std::vector<PairEquation> out;
  out.reserve(equations.size());
  for (const PairEquation& eq : equations) {
    const Accum& a = pairs.at({eq.i, eq.j});
    PairEquation row = eq;
    row.m = std::log(a.ratio_sum / static_cast<double>(a.count));
    row.w = 1.0;
    out.push_back(row);
  }
  return out;
}

ExposureEstimate baseline_ratio(const ExposureStack& stack, BuildConfig build, const Eigen::VectorXd& e0,
                                double lambda) {
  build.weight_mode = WeightMode::uniform;
  const ReducedSystem system = build_system(stack, build);
  const auto rows = ratio_baseline_equations(system.equations);
  return solve_wls(rows, system.n_exposures, e0, lambda);
}

OutlierResult reject_outlier_tiles(const ReducedSystem& system, const Eigen::VectorXd& e0, double lambda,
                                   double threshold, Estimator estimator, int threads) {
  if (!(threshold > 0.0)) throw DomainError("outlier threshold must be > 0");
  const auto& eqs = system.equations;

  // Contiguous runs of equations sharing a tile id.
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  for (std::size_t start = 0; start < eqs.size();) {
    std::size_t end = start;
    while (end < eqs.size() && eqs[end].tile_id == eqs[start].tile_id) ++end;
    runs.emplace_back(start, end);
    start = end;
  }
  for (std::size_t r = 1; r < runs.size(); ++r)
    if (eqs[runs[r].first].tile_id <= eqs[runs[r - 1].first].tile_id)
      throw DataError("reject_outlier_tiles: equations must be sorted by tile");

  std::vector<char> keep(runs.size(), 1);
  if (std::isfinite(threshold)) {
    parallel_for(static_cast<Index>(runs.size()), threads, [&](Index r) {
      const auto [start, end] = runs[static_cast<std::size_t>(r)];
      std::span<const PairEquation> tile(eqs.data() + start, end - start);
      std::vector<PairEquation> baseline_rows;
      if (estimator == Estimator::ratio_baseline) {
        baseline_rows = ratio_baseline_equations(tile);
        tile = baseline_rows;
      }
      const ExposureEstimate est = solve_wls(tile, system.n_exposures, e0, lambda, std::nullopt, true);
      const double deviation = (est.e_hat - e0).cwiseAbs().maxCoeff();
      keep[static_cast<std::size_t>(r)] = deviation <= threshold;
    });
  }

  OutlierResult out;
  out.merged.n_exposures = system.n_exposures;
  out.merged.pair_gap_tiles = system.pair_gap_tiles;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const Index id = eqs[runs[r].first].tile_id;
    if (keep[r]) {
      out.kept_tiles.push_back(id);
      out.merged.tiles_used.push_back(id);
      out.merged.equations.insert(out.merged.equations.end(), eqs.begin() + static_cast<std::ptrdiff_t>(runs[r].first),
                                  eqs.begin() + static_cast<std::ptrdiff_t>(runs[r].second));
    } else {
      out.rejected_tiles.push_back(id);
    }
  }
  out.all_rejected = out.kept_tiles.empty();
  return out;
}

EstimateResult estimate_exposures(const ExposureStack& stack, const EstimateConfig& config) {
  config.solve.validate();
  BuildConfig build = config.build;
  if (config.estimator == Estimator::ratio_baseline) build.weight_mode = WeightMode::uniform;

  const Eigen::VectorXd e0 = stack.log_priors();
  ReducedSystem system = build_system(stack, build);

  EstimateResult result;
  result.system_rows = static_cast<Index>(system.equations.size());
  if (config.reject_outliers) {
    OutlierResult filtered = reject_outlier_tiles(system, e0, config.solve.lambda,
                                                  config.solve.outlier_threshold_log, config.estimator, build.threads);
    result.kept_tiles = std::move(filtered.kept_tiles);
    result.rejected_tiles = std::move(filtered.rejected_tiles);
    if (filtered.all_rejected) {
      result.fell_back_to_prior = true;
      result.estimate.e_hat = e0;
      result.estimate.e0 = e0;
      result.estimate.lambda = config.solve.lambda;
      return result;
    }
    system = std::move(filtered.merged);
  } else {
    result.kept_tiles = system.tiles_used;
  }

  if (config.estimator == Estimator::ratio_baseline) system.equations = ratio_baseline_equations(system.equations);
  result.equation_count = static_cast<Index>(system.equations.size());
  result.estimate = solve_wls(system, e0, config.solve.lambda, config.solve.gauge);
  return result;
}

}  // namespace hdrexp
