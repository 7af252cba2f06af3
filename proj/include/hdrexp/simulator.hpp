#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hdrexp/image.hpp"
#include "hdrexp/noise.hpp"
#include "hdrexp/stack.hpp"

namespace hdrexp {

struct SimConfig {
  std::vector<double> exposure_times{1.0 / 64.0, 1.0 / 8.0, 1.0, 8.0};
  int iso = 100;
  int bit_depth = 14;
  std::uint64_t seed = 0;
  double corruption_rel_std = 0.15;

  void validate() const;
};

/// Renders one noisy, saturating, quantised capture of `radiance` at scaling constant `d`.
///
/// Per sample: s = d x + N(0, sqrt(alpha d x + beta)), clipped to [0, white], then rounded to
/// the nearest of 2^bit_depth - 1 uniform steps over [0, white]. The noise stream is keyed by
/// `seed` and addressed by sample index, so results do not depend on evaluation order.
ImageF simulate_capture(const ImageD& radiance, double d, const NoiseParameters& params, int bit_depth,
                        std::uint64_t seed, double white = 1.0);

/// Noise-free variant (alpha = beta = 0).
ImageF simulate_capture_noiseless(const ImageD& radiance, double d, int bit_depth, double white = 1.0);

enum class CorruptionModel {
  /// e'_i = e_i + N(0, rel_std * |e_i|)
  log_scaled,
  /// e'_i = e_i + N(0, rel_std): a relative error of about rel_std on d_i.
  relative,
};

/// Perturbs log exposure constants. `pinned`, if given, is left untouched.
Eigen::VectorXd corrupt_exposures(const Eigen::VectorXd& e, double rel_std, std::uint64_t seed,
                                  CorruptionModel model = CorruptionModel::log_scaled,
                                  std::optional<Index> pinned = std::nullopt);

/// One-row, single-channel radiance rising linearly from 1 to 2^stops.
ImageD synth_gradient(int stops, Index width);

/// `rows` copies of synth_gradient scaled by `scale`.
ImageD gradient_scene(int stops, Index width, Index rows, double scale = 1.0);

/// Number of built-in procedural scenes.
inline constexpr int kProceduralSceneCount = 10;

/// Deterministic 3-channel HDR radiance map (gradients, blobs, sky-like falloffs) whose
/// range suits exposure times 1/64 .. 8 s on a [0, 1] sensor.
ImageD procedural_scene(int index, Index height, Index width);

struct SimulatedStack {
  ExposureStack stack;       // metadata carries the corrupted exposure times
  Eigen::VectorXd e_true;    // ln d_i actually used to render, stack order
  Eigen::VectorXd e_exif;    // ln d_i reported in the metadata, stack order
};

/// Simulates every exposure of `config` (image i uses stream derive_key(seed, i)) and
/// writes metadata whose exposure times carry the supplied log-domain errors
/// (`e_exif - e_true`). Metadata gain is iso / 100; the rendered signal uses d = t, i.e.
/// radiance is expressed per unit gain.
SimulatedStack simulate_stack(const ImageD& radiance, const SimConfig& config, const NoiseParameters& params,
                              const Eigen::VectorXd& log_errors, bool noiseless = false);

/// Randomly permutes whole pixels inside the given tiles, independently per exposure.
/// Models scene motion confined to those tiles.
ExposureStack shuffle_tiles(const ExposureStack& stack, Index tile_size, std::span<const Index> tile_ids,
                            std::uint64_t seed);

}  // namespace hdrexp
