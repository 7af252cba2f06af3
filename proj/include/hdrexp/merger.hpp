#pragma once

#include <optional>
#include <span>
#include <string>

#include "hdrexp/image.hpp"
#include "hdrexp/noise.hpp"
#include "hdrexp/stack.hpp"
#include "hdrexp/system.hpp"

namespace hdrexp {

enum class MergeMode { mean, inverse_variance };

std::string to_string(MergeMode mode);
MergeMode parse_merge_mode(const std::string& text);

struct MergeResult {
  ImageD radiance;
  Mask saturated;  // single channel; true where every exposure is saturated in some channel
};

/// Averages the exposure-compensated valid samples X_i = y_i / exp(e_hat_i) of each pixel.
///
/// inverse_variance weighs sample i by exp(e_hat_i)^2 / Var[y_i] with Var[y_i] from the
/// noise model (white-normalised). A sample with no valid exposure falls back to the longest
/// exposure that is below the upper threshold, or to the shortest exposure when every
/// exposure is saturated (flagged in `saturated`).
MergeResult merge(const ExposureStack& stack, const ExposureEstimate& est, MergeMode mode,
                  const std::optional<NoiseParameters>& noise = std::nullopt, ValidRange range = {});

/// Maximum |second difference| of a scanline divided by its mean slope. 0 for a straight line.
double banding_score(std::span<const double> scanline);

}  // namespace hdrexp
