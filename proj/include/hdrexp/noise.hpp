#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "hdrexp/error.hpp"

namespace hdrexp {

/// Noise coefficients of one colour channel: Var[Y] = alpha * E[Y] + beta.
/// Values are in sensor units normalised to [0, 1].
struct ChannelNoise {
  double alpha = 0.0;
  double beta = 0.0;
};

/// Per-channel (R, G, B) noise coefficients measured at one ISO.
struct NoiseParameters {
  int iso = 100;
  std::array<double, 3> alpha{};
  std::array<double, 3> beta{};

  void validate() const;

  /// Coefficients for `channel` of a `channel_count`-channel image.
  /// Monochrome images use the green entry.
  ChannelNoise channel(int channel, int channel_count = 3) const {
    const auto k = static_cast<std::size_t>(channel_count == 1 ? 1 : channel);
    return {alpha[k], beta[k]};
  }
};

struct NoiseProfile {
  std::string name;
  std::vector<NoiseParameters> entries;

  /// Exact ISO lookup. Throws UnknownIso listing the available values.
  const NoiseParameters& at_iso(int iso) const;
  std::vector<int> isos() const;
};

/// Canon PowerShot S100 coefficients at ISO 100/200/400/800.
const NoiseProfile& canon_s100_profile();

NoiseProfile read_noise_profile(const std::filesystem::path& path);
void write_noise_profile(const std::filesystem::path& path, const NoiseProfile& profile);

/// Built-in profile name ("canon-s100") or path to a profile JSON file.
NoiseProfile resolve_noise_profile(const std::string& name_or_path);

/// alpha * mu + beta.
inline double pixel_variance(double mu, ChannelNoise noise) {
  if (!(mu >= 0.0)) throw DomainError("pixel_variance: mean must be >= 0");
  return noise.alpha * mu + noise.beta;
}

struct LogMoments {
  double expected_log = 0.0;
  double log_variance = 0.0;
};

/// First-order moments of ln Y around the observed value y (taken as the mean).
inline LogMoments log_moments(double y, ChannelNoise noise) {
  if (!(y > 0.0)) throw DomainError("log_moments: y must be > 0");
  return {std::log(y), (noise.alpha * y + noise.beta) / (y * y)};
}

namespace detail {

inline double log_variance_unchecked(double y, ChannelNoise noise) {
  return (noise.alpha * y + noise.beta) / (y * y);
}

inline double calibrated_weight_unchecked(double yi, double yj, ChannelNoise ni, ChannelNoise nj) {
  return 1.0 / (log_variance_unchecked(yi, ni) + log_variance_unchecked(yj, nj));
}

inline double calibration_free_weight_unchecked(double yi, double yj) {
  return 1.0 / (1.0 / yi + 1.0 / yj);
}

}  // namespace detail

/// Inverse variance of ln y_i - ln y_j with each sample's own coefficients.
inline double row_weight_calibrated(double yi, double yj, ChannelNoise noise_i, ChannelNoise noise_j) {
  if (!(yi > 0.0) || !(yj > 0.0)) throw DomainError("row_weight_calibrated: samples must be > 0");
  return detail::calibrated_weight_unchecked(yi, yj, noise_i, noise_j);
}

inline double row_weight_calibrated(double yi, double yj, ChannelNoise noise) {
  return row_weight_calibrated(yi, yj, noise, noise);
}

/// Parameter-free weight (1/y_i + 1/y_j)^-1; proportional to the calibrated weight when beta = 0.
inline double row_weight_calibration_free(double yi, double yj) {
  if (!(yi > 0.0) || !(yj > 0.0)) throw DomainError("row_weight_calibration_free: samples must be > 0");
  return detail::calibration_free_weight_unchecked(yi, yj);
}

}  // namespace hdrexp
