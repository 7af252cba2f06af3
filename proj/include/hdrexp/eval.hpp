#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hdrexp/image.hpp"
#include "hdrexp/noise.hpp"
#include "hdrexp/simulator.hpp"
#include "hdrexp/solver.hpp"

namespace hdrexp {

/// RMSE (percent) of exp(e_hat_i - e_true_i) - 1 after aligning both vectors at `gauge`
/// (default: the last, longest exposure). The gauge exposure is left out of the average.
double relative_rmse(const Eigen::VectorXd& e_hat, const Eigen::VectorXd& e_true,
                     std::optional<Index> gauge = std::nullopt);

enum class Method { exif_corrupted, baseline, btf_external, pairwise_wls, greedy_mst_wls };

std::string to_string(Method method);
Method parse_method(const std::string& text);
std::vector<Method> all_methods();

struct EvalConfig {
  SimConfig sim;                    // exposure times, bit depth, corruption std, base seed (iso ignored)
  std::vector<int> isos{100, 200, 400, 800};
  int seeds = 20;
  NoiseProfile profile = canon_s100_profile();
  std::vector<Method> methods = all_methods();
  WeightMode wls_weights = WeightMode::calibrated;
  Index tile_size = 16;
  Index k = 50;
  ValidRange range;
  SolveConfig solve;
  bool reject_outliers = true;
  int threads = 0;
};

struct MethodSummary {
  Method method = Method::exif_corrupted;
  bool implemented = true;
  double mean_rmse = 0.0;   // percent
  double ci95 = 0.0;        // half-width, percent
  double mean_seconds = 0.0;
  Index runs = 0;
};

struct IsoSummary {
  int iso = 0;
  std::vector<MethodSummary> methods;
};

struct RunRecord {
  int scene = 0;
  int seed = 0;
  int iso = 0;
  Method method = Method::exif_corrupted;
  double rmse = 0.0;
  double seconds = 0.0;
  std::string error;  // non-empty when the run failed
};

struct EvalReport {
  std::vector<IsoSummary> per_iso;
  std::vector<RunRecord> runs;
  EvalConfig config;
  Index scene_count = 0;

  const MethodSummary& summary(int iso, Method method) const;
  /// Mean over all successful runs of `method`, across ISOs.
  double overall_mean(Method method) const;
};

/// Simulates every scene x seed x ISO cell with corrupted metadata and runs each method on
/// the identical stack. Failing runs are recorded, not fatal.
EvalReport run_experiment(std::span<const ImageD> scenes, const EvalConfig& config);

std::string report_to_json(const EvalReport& report);
/// One row per ISO: iso, then mean and ci95 for each method.
std::string report_to_csv(const EvalReport& report);
/// Whitespace-separated columns for plotting RMSE against ISO.
std::string report_to_gnuplot(const EvalReport& report);

}  // namespace hdrexp
