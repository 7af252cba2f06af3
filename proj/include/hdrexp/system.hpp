#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hdrexp/image.hpp"
#include "hdrexp/noise.hpp"
#include "hdrexp/stack.hpp"

namespace hdrexp {

enum class WeightMode { uniform, calibration_free, calibrated };
enum class Connectivity { greedy, pairwise };

std::string to_string(WeightMode mode);
WeightMode parse_weight_mode(const std::string& text);
std::string to_string(Connectivity connectivity);

/// A sample is valid iff lower * white < y < upper * white.
struct ValidRange {
  double lower = 0.01;
  double upper = 0.95;

  void validate() const;
  bool contains(double normalized) const { return normalized > lower && normalized < upper; }
};

Mask validity_mask(const ImageF& image, double white, ValidRange range);

/// Tiles are numbered row-major; edge tiles may be smaller than tile_size.
struct TileRect {
  Index id = 0;
  Index row = 0;
  Index col = 0;
  Index height = 0;
  Index width = 0;
};

std::vector<TileRect> tile_grid(Index height, Index width, Index tile_size);

/// Per-exposure sample values of one tile, normalised to [0, 1] of the sensor range.
/// Sample s of a tile is (local pixel) * channels + channel.
struct TileSamples {
  std::vector<Eigen::ArrayXd> values;
  std::vector<Eigen::Array<bool, Eigen::Dynamic, 1>> valid;

  Index exposures() const { return static_cast<Index>(values.size()); }
  Index samples() const { return values.empty() ? 0 : values.front().size(); }
};

/// One edge of the exposure multigraph: exposures i < j linked at tile sample `sample`.
struct TreeEdge {
  int i = 0;
  int j = 0;
  Index sample = 0;
  double weight = 0.0;
};

struct TreeSet {
  std::vector<std::vector<TreeEdge>> trees;  // trees[t] holds the t-th tree's edges
  std::vector<int> missing_pairs;            // consecutive pairs (i, i+1) with no jointly valid sample
};

/// Extracts up to k edge-disjoint spanning trees of a tile.
///
/// For each consecutive pair (i, i+1) the candidates valid in both are ranked by
/// weight(i, i+1, s) (descending, ties to the lowest sample index). Tree t uses the t-th
/// candidate p of every pair: with greedy connectivity the edge goes from i to the longest
/// exposure j > i that is still valid at p, with pairwise connectivity to i + 1. Ranking
/// once per pair is the same as re-running the single-tree search k times with already-used
/// (i, p) locations masked out.
///
/// `weight(i, j, s)` must return a positive weight for a jointly valid sample.
template <typename WeightFn>
TreeSet greedy_msts(const TileSamples& tile, WeightFn&& weight, Index k, Connectivity connectivity) {
  TreeSet out;
  const auto n = static_cast<int>(tile.exposures());
  const Index samples = tile.samples();
  if (n < 2 || k < 1) return out;
  out.trees.resize(static_cast<std::size_t>(k));

  std::vector<std::pair<double, Index>> candidates;
  candidates.reserve(static_cast<std::size_t>(samples));
  for (int i = 0; i + 1 < n; ++i) {
    const auto& vi = tile.valid[static_cast<std::size_t>(i)];
    const auto& vn = tile.valid[static_cast<std::size_t>(i + 1)];
    candidates.clear();
    for (Index s = 0; s < samples; ++s)
      if (vi(s) && vn(s)) candidates.emplace_back(weight(i, i + 1, s), s);
    if (candidates.empty()) {
      out.missing_pairs.push_back(i);
      continue;
    }
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take), candidates.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
    for (std::size_t t = 0; t < take; ++t) {
      const Index s = candidates[t].second;
      int j = i + 1;
      if (connectivity == Connectivity::greedy) {
        for (int jj = n - 1; jj > i; --jj) {
          if (tile.valid[static_cast<std::size_t>(jj)](s)) {
            j = jj;
            break;
          }
        }
      }
      out.trees[t].push_back({i, j, s, j == i + 1 ? candidates[t].first : weight(i, j, s)});
    }
  }
  while (!out.trees.empty() && out.trees.back().empty()) out.trees.pop_back();
  return out;
}

/// Single greedy spanning tree (first tree of greedy_msts).
template <typename WeightFn>
std::vector<TreeEdge> greedy_mst(const TileSamples& tile, WeightFn&& weight, Connectivity connectivity = Connectivity::greedy) {
  TreeSet set = greedy_msts(tile, std::forward<WeightFn>(weight), 1, connectivity);
  return set.trees.empty() ? std::vector<TreeEdge>{} : std::move(set.trees.front());
}

/// One row of the log-domain system: e_i - e_j = m with weight w.
struct PairEquation {
  int i = 0;
  int j = 0;
  Index pixel = 0;  // linear pixel index in the full image
  int channel = 0;
  double m = 0.0;   // ln y_i(p) - ln y_j(p)
  double w = 0.0;
  Index tile_id = 0;
};

struct ReducedSystem {
  std::vector<PairEquation> equations;  // sorted by tile, then i, j, pixel, channel
  Index n_exposures = 0;
  std::vector<Index> tiles_used;        // tiles that contributed at least one equation
  std::vector<Index> pair_gap_tiles;    // per consecutive pair: tiles lacking a jointly valid sample
};

struct BuildConfig {
  Index tile_size = 16;
  Index k = 50;
  WeightMode weight_mode = WeightMode::calibration_free;
  Connectivity connectivity = Connectivity::greedy;
  ValidRange range;
  std::optional<NoiseParameters> noise;  // required for calibrated weights
  int threads = 0;                       // 0: all cores

  void validate() const;
};

/// Extracts the tile samples of exposure stack tile `rect`.
TileSamples extract_tile(const ExposureStack& stack, const TileRect& rect, ValidRange range);

/// Builds the reduced weighted system from k greedy spanning trees per tile.
/// Throws UnsolvableSystem if the exposure graph of the result is disconnected.
ReducedSystem build_system(const ExposureStack& stack, const BuildConfig& config);

/// Same, without the connectivity check.
ReducedSystem build_system_unchecked(const ExposureStack& stack, const BuildConfig& config);

/// Connected components of the exposure graph induced by the equations (isolated exposures included).
std::vector<std::vector<Index>> exposure_components(const ReducedSystem& system);
std::vector<std::vector<Index>> exposure_components(std::span<const PairEquation> equations, Index n_exposures);

/// Throws UnsolvableSystem naming the exposures not connected to the longest one.
void require_connected(const ReducedSystem& system);

/// Diagnostic dump of the equations with provenance. Not a stable format.
std::string system_to_json(const ReducedSystem& system);

}  // namespace hdrexp
