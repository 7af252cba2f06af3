#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hdrexp/image.hpp"

namespace hdrexp {

/// Capture settings for one image of a stack, as reported by the camera.
struct CaptureMetadata {
  double exposure_time = 1.0;             // seconds
  double gain = 1.0;                      // ISO / 100
  double aperture_fnumber = 1.0;
  std::optional<double> focal_length;     // millimetres
  double white_level = 1.0;               // raw units
  double black_level = 0.0;               // raw units

  /// Throws InvalidMetadata if any invariant is violated.
  void validate() const;

  /// Sensor range after black-level subtraction.
  double range() const { return white_level - black_level; }
};

/// Linear scaling constant d = t g pi (f / 2a)^2, or t g when the focal length is unknown.
double scaling_constant(const CaptureMetadata& meta);

/// Log-domain exposure constants for one stack.
struct ExposureEstimate {
  Eigen::VectorXd e_hat;  // natural log of the estimated scaling constants
  Eigen::VectorXd e0;     // natural log of the metadata scaling constants
  double lambda = 0.0;
  double residual_norm = 0.0;

  Index size() const { return e_hat.size(); }
  void validate() const;
};

/// N aligned linear images sorted by ascending scaling constant.
///
/// Pixel values are black-level subtracted; negative dark values are kept.
/// Immutable after construction.
class ExposureStack {
 public:
  /// Validates shapes and metadata and sorts (stably) by scaling constant.
  /// `names` is optional provenance (e.g. file names), kept aligned with the images.
  ExposureStack(std::vector<ImageF> images, std::vector<CaptureMetadata> metadata,
                std::vector<std::string> names = {});

  Index size() const { return static_cast<Index>(images_.size()); }
  Index height() const { return images_.front().height(); }
  Index width() const { return images_.front().width(); }
  Index channels() const { return images_.front().channels(); }

  const ImageF& image(Index i) const { return images_[static_cast<std::size_t>(i)]; }
  const CaptureMetadata& metadata(Index i) const { return metadata_[static_cast<std::size_t>(i)]; }
  const std::string& name(Index i) const { return names_[static_cast<std::size_t>(i)]; }
  /// Position of image i in the order it was supplied, before sorting.
  Index source_index(Index i) const { return source_index_[static_cast<std::size_t>(i)]; }
  /// Post-subtraction saturation level of image i.
  double white(Index i) const { return metadata(i).range(); }

  const std::vector<ImageF>& images() const { return images_; }

  /// ln d_i from metadata, in stack order.
  Eigen::VectorXd log_priors() const;

 private:
  std::vector<ImageF> images_;
  std::vector<CaptureMetadata> metadata_;
  std::vector<std::string> names_;
  std::vector<Index> source_index_;
};

/// X_i = y_i / exp(e_hat_i), computed in double so that multiplying back reproduces y_i exactly.
std::vector<ImageD> compensate(const ExposureStack& stack, const ExposureEstimate& est);

std::vector<CaptureMetadata> read_metadata_json(const std::filesystem::path& path);
void write_metadata_json(const std::filesystem::path& path, const std::vector<CaptureMetadata>& metadata);

/// Loads PFM images plus the JSON sidecar; subtracts black levels and sorts by d.
ExposureStack load_stack(const std::vector<std::filesystem::path>& image_paths,
                         const std::filesystem::path& metadata_path);

}  // namespace hdrexp
