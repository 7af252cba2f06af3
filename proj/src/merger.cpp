#include "hdrexp/merger.hpp"

#include <cmath>
#include <vector>

namespace hdrexp {

std::string to_string(MergeMode mode) { return mode == MergeMode::mean ? "mean" : "inverse-variance"; }

MergeMode parse_merge_mode(const std::string& text) {
  if (text == "mean") return MergeMode::mean;
  if (text == "inverse-variance") return MergeMode::inverse_variance;
  throw DataError("unknown merge mode '" + text + "' (expected mean or inverse-variance)");
}

MergeResult merge(const ExposureStack& stack, const ExposureEstimate& est, MergeMode mode,
                  const std::optional<NoiseParameters>& noise, ValidRange range) {
  if (est.size() != stack.size())
    throw ShapeMismatch("estimate has " + std::to_string(est.size()) + " entries for " +
                        std::to_string(stack.size()) + " images");
  if (mode == MergeMode::inverse_variance && !noise)
    throw DataError("inverse-variance merge needs noise parameters");
  range.validate();

  const Index n = stack.size();
  const Index channels = stack.channels();
  std::vector<double> scale(static_cast<std::size_t>(n)), white(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    scale[static_cast<std::size_t>(i)] = std::exp(est.e_hat(i));
    white[static_cast<std::size_t>(i)] = stack.white(i);
  }
  std::array<ChannelNoise, 3> channel_noise{};
  if (noise)
    for (Index c = 0; c < channels; ++c)
      channel_noise[static_cast<std::size_t>(c)] = noise->channel(static_cast<int>(c), static_cast<int>(channels));

  MergeResult out{ImageD(stack.height(), stack.width(), channels), Mask(stack.height(), stack.width(), 1, false)};
  for (Index p = 0; p < stack.height() * stack.width(); ++p) {
    for (Index c = 0; c < channels; ++c) {
      double num = 0.0, den = 0.0;
      Index unsaturated = -1;
      for (Index i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        const double y = stack.image(i).sample(p, c);
        const double yn = y / white[k];
        if (yn < range.upper) unsaturated = i;
        if (!range.contains(yn)) continue;
        double w = 1.0;
        if (mode == MergeMode::inverse_variance) {
          const ChannelNoise cn = channel_noise[static_cast<std::size_t>(c)];
          w = scale[k] * scale[k] / (white[k] * white[k] * (cn.alpha * yn + cn.beta));
        }
        num += w * y / scale[k];
        den += w;
      }
      double value;
      if (den > 0.0) {
        value = num / den;
      } else if (unsaturated >= 0) {
        value = stack.image(unsaturated).sample(p, c) / scale[static_cast<std::size_t>(unsaturated)];
      } else {
        value = stack.image(0).sample(p, c) / scale[0];
        out.saturated.sample(p, 0) = true;
      }
      out.radiance.sample(p, c) = value;
    }
  }
  return out;
}

double banding_score(std::span<const double> scanline) {
  if (scanline.size() < 3) throw DomainError("banding_score needs at least 3 samples");
  const double slope = std::abs(scanline.back() - scanline.front()) / static_cast<double>(scanline.size() - 1);
  if (!(slope > 0.0)) throw DomainError("banding_score needs a non-flat gradient");
  double worst = 0.0;
  for (std::size_t k = 1; k + 1 < scanline.size(); ++k)
    worst = std::max(worst, std::abs(scanline[k + 1] - 2.0 * scanline[k] + scanline[k - 1]));
  return worst / slope;
}

}  // namespace hdrexp
