#include "hdrexp/system.hpp"

#include <json.hpp>

#include <cmath>
#include <numeric>
#include <sstream>

#include "hdrexp/parallel.hpp"

namespace hdrexp {

std::string to_string(WeightMode mode) {
  switch (mode) {
    case WeightMode::uniform: return "uniform";
    case WeightMode::calibration_free: return "calibration-free";
    case WeightMode::calibrated: return "calibrated";
  }
  return "?";
}

WeightMode parse_weight_mode(const std::string& text) {
  if (text == "uniform") return WeightMode::uniform;
  if (text == "calibration-free") return WeightMode::calibration_free;
  if (text == "calibrated") return WeightMode::calibrated;
  throw DataError("unknown weight mode '" + text + "' (expected uniform, calibration-free or calibrated)");
}

std::string to_string(Connectivity connectivity) {
  return connectivity == Connectivity::greedy ? "greedy" : "pairwise";
}

void ValidRange::validate() const {
  if (!(lower >= 0.0 && lower < upper && upper <= 1.0))
    throw DomainError("valid range must satisfy 0 <= lower < upper <= 1");
}

Mask validity_mask(const ImageF& image, double white, ValidRange range) {
  range.validate();
  Mask mask(image.height(), image.width(), image.channels());
  mask.data() = (image.data().cast<double>() > range.lower * white) &&
                (image.data().cast<double>() < range.upper * white);
  return mask;
}

std::vector<TileRect> tile_grid(Index height, Index width, Index tile_size) {
  if (tile_size < 1) throw DomainError("tile size must be >= 1");
  std::vector<TileRect> tiles;
  Index id = 0;
  for (Index r = 0; r < height; r += tile_size)
    for (Index c = 0; c < width; c += tile_size)
      tiles.push_back({id++, r, c, std::min(tile_size, height - r), std::min(tile_size, width - c)});
  return tiles;
}

void BuildConfig::validate() const {
  if (tile_size < 1) throw DomainError("tile size must be >= 1");
  if (k < 1) throw DomainError("k must be >= 1");
  range.validate();
  if (weight_mode == WeightMode::calibrated) {
    if (!noise) throw DataError("calibrated weights need noise parameters");
    noise->validate();
  }
}

TileSamples extract_tile(const ExposureStack& stack, const TileRect& rect, ValidRange range) {
  const Index channels = stack.channels();
  const Index samples = rect.height * rect.width * channels;
  TileSamples tile;
  for (Index i = 0; i < stack.size(); ++i) {
    const ImageF& img = stack.image(i);
    const double inv_white = 1.0 / stack.white(i);
    Eigen::ArrayXd values(samples);
    Eigen::Array<bool, Eigen::Dynamic, 1> valid(samples);
    Index s = 0;
    for (Index r = 0; r < rect.height; ++r) {
      const Index base = ((rect.row + r) * stack.width() + rect.col) * channels;
      for (Index q = 0; q < rect.width * channels; ++q, ++s) {
        values(s) = static_cast<double>(img.data()(base + q)) * inv_white;
        valid(s) = range.contains(values(s));
      }
    }
    tile.values.push_back(std::move(values));
    tile.valid.push_back(std::move(valid));
  }
  return tile;
}

namespace {

std::vector<PairEquation> tile_equations(const ExposureStack& stack, const TileRect& rect, const BuildConfig& config,
                                         std::vector<int>& missing_pairs) {
  const TileSamples tile = extract_tile(stack, rect, config.range);
  const Index channels = stack.channels();
  const int c_count = static_cast<int>(channels);

  std::array<ChannelNoise, 3> noise{};
  if (config.noise)
    for (int c = 0; c < c_count; ++c) noise[static_cast<std::size_t>(c)] = config.noise->channel(c, c_count);

  auto weight = [&](int i, int j, Index s) -> double {
    const double yi = tile.values[static_cast<std::size_t>(i)](s);
    const double yj = tile.values[static_cast<std::size_t>(j)](s);
    switch (config.weight_mode) {
      case WeightMode::uniform: return 1.0;
      case WeightMode::calibration_free: return detail::calibration_free_weight_unchecked(yi, yj);
      case WeightMode::calibrated: {
        const ChannelNoise n = noise[static_cast<std::size_t>(s % channels)];
        return detail::calibrated_weight_unchecked(yi, yj, n, n);
      }
    }
    return 1.0;
  };

  TreeSet set = greedy_msts(tile, weight, config.k, config.connectivity);
  missing_pairs = std::move(set.missing_pairs);

  std::vector<PairEquation> eqs;
  for (const auto& tree : set.trees) {
    for (const TreeEdge& e : tree) {
      const Index local_pixel = e.sample / channels;
      const int channel = static_cast<int>(e.sample % channels);
      const Index pixel = (rect.row + local_pixel / rect.width) * stack.width() + rect.col + local_pixel % rect.width;
      const double yi = static_cast<double>(stack.image(e.i).sample(pixel, channel));
      const double yj = static_cast<double>(stack.image(e.j).sample(pixel, channel));
      eqs.push_back({e.i, e.j, pixel, channel, std::log(yi) - std::log(yj), e.weight, rect.id});
    }
  }
  std::sort(eqs.begin(), eqs.end(), [](const PairEquation& a, const PairEquation& b) {
    return std::tie(a.i, a.j, a.pixel, a.channel) < std::tie(b.i, b.j, b.pixel, b.channel);
  });
  return eqs;
}

}  // namespace

ReducedSystem build_system_unchecked(const ExposureStack& stack, const BuildConfig& config) {
  config.validate();
  const std::vector<TileRect> tiles = tile_grid(stack.height(), stack.width(), config.tile_size);
  std::vector<std::vector<PairEquation>> per_tile(tiles.size());
  std::vector<std::vector<int>> missing(tiles.size());
  parallel_for(static_cast<Index>(tiles.size()), config.threads, [&](Index t) {
    const auto k = static_cast<std::size_t>(t);
    per_tile[k] = tile_equations(stack, tiles[k], config, missing[k]);
  });

  ReducedSystem system;
  system.n_exposures = stack.size();
  system.pair_gap_tiles.assign(static_cast<std::size_t>(std::max<Index>(stack.size() - 1, 0)), 0);
  std::size_t total = 0;
  for (const auto& eqs : per_tile) total += eqs.size();
  system.equations.reserve(total);
  for (std::size_t t = 0; t < tiles.size(); ++t) {
    if (!per_tile[t].empty()) system.tiles_used.push_back(tiles[t].id);
    system.equations.insert(system.equations.end(), per_tile[t].begin(), per_tile[t].end());
    for (int pair : missing[t]) ++system.pair_gap_tiles[static_cast<std::size_t>(pair)];
  }
  return system;
}

ReducedSystem build_system(const ExposureStack& stack, const BuildConfig& config) {
  ReducedSystem system = build_system_unchecked(stack, config);
  require_connected(system);
  return system;
}

std::vector<std::vector<Index>> exposure_components(const ReducedSystem& system) {
  return exposure_components(system.equations, system.n_exposures);
}

std::vector<std::vector<Index>> exposure_components(std::span<const PairEquation> equations, Index n) {
  std::vector<Index> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](Index v) {
    while (parent[static_cast<std::size_t>(v)] != v) {
      parent[static_cast<std::size_t>(v)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
      v = parent[static_cast<std::size_t>(v)];
    }
    return v;
  };
  for (const PairEquation& e : equations) {
    const Index a = find(e.i), b = find(e.j);
    if (a != b) parent[static_cast<std::size_t>(std::min(a, b))] = std::max(a, b);
  }
  std::vector<std::vector<Index>> groups(static_cast<std::size_t>(n));
  for (Index v = 0; v < n; ++v) groups[static_cast<std::size_t>(find(v))].push_back(v);
  std::vector<std::vector<Index>> out;
  for (auto& g : groups)
    if (!g.empty()) out.push_back(std::move(g));
  return out;
}

void require_connected(const ReducedSystem& system) {
  const auto components = exposure_components(system);
  if (components.size() <= 1) return;
  std::ostringstream msg;
  msg << "exposure graph is disconnected; exposures unreachable from the longest exposure:";
  const Index longest = system.n_exposures - 1;
  for (const auto& comp : components) {
    if (std::find(comp.begin(), comp.end(), longest) != comp.end()) continue;
    for (Index v : comp) msg << ' ' << v;
  }
  throw UnsolvableSystem(msg.str());
}

std::string system_to_json(const ReducedSystem& system) {
  nlohmann::json doc{{"n_exposures", system.n_exposures},
                     {"tiles_used", system.tiles_used},
                     {"pair_gap_tiles", system.pair_gap_tiles},
                     {"equations", nlohmann::json::array()}};
  for (const PairEquation& e : system.equations)
    doc["equations"].push_back({{"i", e.i}, {"j", e.j}, {"pixel", e.pixel}, {"channel", e.channel},
                                {"m", e.m}, {"w", e.w}, {"tile", e.tile_id}});
  return doc.dump(1);
}

}  // namespace hdrexp
