#include "hdrexp/stack.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

#include "hdrexp/pfm.hpp"

namespace hdrexp {

using nlohmann::json;

void CaptureMetadata::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(exposure_time)) throw InvalidMetadata("exposure_time must be > 0");
  if (!positive(gain)) throw InvalidMetadata("gain must be > 0");
  if (!positive(aperture_fnumber)) throw InvalidMetadata("aperture must be > 0");
  if (focal_length && !positive(*focal_length)) throw InvalidMetadata("focal_length must be > 0");
  if (!std::isfinite(black_level) || black_level < 0.0) throw InvalidMetadata("black_level must be >= 0");
  if (!std::isfinite(white_level) || !(white_level > black_level))
    throw InvalidMetadata("white_level must exceed black_level");
}

double scaling_constant(const CaptureMetadata& meta) {
  meta.validate();
  double d = meta.exposure_time * meta.gain;
  if (meta.focal_length) {
    const double r = *meta.focal_length / (2.0 * meta.aperture_fnumber);
    d *= std::numbers::pi * r * r;
  }
  return d;
}

void ExposureEstimate::validate() const {
  if (e_hat.size() != e0.size()) throw ShapeMismatch("e_hat and e0 differ in length");
  if (!e_hat.allFinite() || !e0.allFinite()) throw DomainError("non-finite exposure estimate");
}

ExposureStack::ExposureStack(std::vector<ImageF> images, std::vector<CaptureMetadata> metadata,
                             std::vector<std::string> names)
    : names_(std::move(names)) {
  if (images.size() < 2) throw ShapeMismatch("an exposure stack needs at least 2 images");
  if (metadata.size() != images.size())
    throw MissingMetadata("metadata has " + std::to_string(metadata.size()) + " entries for " +
                          std::to_string(images.size()) + " images");
  if (names_.empty()) {
    for (std::size_t k = 0; k < images.size(); ++k) names_.push_back("image" + std::to_string(k));
  }
  if (names_.size() != images.size()) throw ShapeMismatch("names do not match image count");

  const ImageF& first = images.front();
  if (first.channels() != 1 && first.channels() != 3)
    throw ShapeMismatch("channel count must be 1 or 3");
  if (first.empty()) throw ShapeMismatch("empty image");
  for (std::size_t k = 0; k < images.size(); ++k) {
    if (!images[k].same_shape(first))
      throw ShapeMismatch("image '" + names_[k] + "' differs in size from '" + names_[0] + "'");
  }

  const bool any_focal = std::any_of(metadata.begin(), metadata.end(), [](auto& m) { return m.focal_length.has_value(); });
  const bool all_focal = std::all_of(metadata.begin(), metadata.end(), [](auto& m) { return m.focal_length.has_value(); });
  if (any_focal && !all_focal)
    throw InvalidMetadata("focal_length must be given for all images or none");

  std::vector<double> d(images.size());
  for (std::size_t k = 0; k < images.size(); ++k) d[k] = scaling_constant(metadata[k]);

  std::vector<std::size_t> order(images.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });

  std::vector<std::string> sorted_names;
  for (std::size_t k : order) {
    images_.push_back(std::move(images[k]));
    metadata_.push_back(metadata[k]);
    sorted_names.push_back(names_[k]);
    source_index_.push_back(static_cast<Index>(k));
  }
  names_ = std::move(sorted_names);
}

Eigen::VectorXd ExposureStack::log_priors() const {
  Eigen::VectorXd e0(size());
  for (Index i = 0; i < size(); ++i) e0(i) = std::log(scaling_constant(metadata(i)));
  return e0;
}

std::vector<ImageD> compensate(const ExposureStack& stack, const ExposureEstimate& est) {
  if (est.size() != stack.size())
    throw ShapeMismatch("estimate has " + std::to_string(est.size()) + " entries for " +
                        std::to_string(stack.size()) + " images");
  std::vector<ImageD> out;
  out.reserve(static_cast<std::size_t>(stack.size()));
  for (Index i = 0; i < stack.size(); ++i) {
    ImageD x = stack.image(i).cast<double>();
    x.data() /= std::exp(est.e_hat(i));
    out.push_back(std::move(x));
  }
  return out;
}

namespace {

double require_number(const json& entry, const char* key, std::size_t index) {
  if (!entry.contains(key))
    throw MissingMetadata("metadata entry " + std::to_string(index) + " lacks '" + key + "'");
  if (!entry.at(key).is_number())
    throw InvalidMetadata("metadata entry " + std::to_string(index) + ": '" + key + "' is not a number");
  return entry.at(key).get<double>();
}

}  // namespace

std::vector<CaptureMetadata> read_metadata_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileReadError("cannot open metadata file: " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidMetadata("metadata JSON does not parse: " + std::string(e.what()));
  }
  if (!doc.is_array()) throw InvalidMetadata("metadata JSON must be an array of objects");

  std::vector<CaptureMetadata> out;
  for (std::size_t k = 0; k < doc.size(); ++k) {
    const json& entry = doc[k];
    if (!entry.is_object()) throw InvalidMetadata("metadata entry " + std::to_string(k) + " is not an object");
    CaptureMetadata m;
    m.exposure_time = require_number(entry, "exposure_time", k);
    m.gain = require_number(entry, "gain", k);
    m.aperture_fnumber = require_number(entry, "aperture", k);
    if (entry.contains("focal_length") && !entry.at("focal_length").is_null())
      m.focal_length = require_number(entry, "focal_length", k);
    m.white_level = require_number(entry, "white_level", k);
    m.black_level = require_number(entry, "black_level", k);
    m.validate();
    out.push_back(m);
  }
  return out;
}

void write_metadata_json(const std::filesystem::path& path, const std::vector<CaptureMetadata>& metadata) {
  json doc = json::array();
  for (const CaptureMetadata& m : metadata) {
    json entry = {{"exposure_time", m.exposure_time},
                  {"gain", m.gain},
                  {"aperture", m.aperture_fnumber},
                  {"white_level", m.white_level},
                  {"black_level", m.black_level}};
    if (m.focal_length) entry["focal_length"] = *m.focal_length;
    doc.push_back(std::move(entry));
  }
  std::ofstream out(path);
  if (!out) throw FileWriteError("cannot open for writing: " + path.string());
  out << doc.dump(2) << '\n';
}

ExposureStack load_stack(const std::vector<std::filesystem::path>& image_paths,
                         const std::filesystem::path& metadata_path) {
  std::vector<CaptureMetadata> metadata = read_metadata_json(metadata_path);
  if (metadata.size() != image_paths.size())
    throw MissingMetadata("metadata lists " + std::to_string(metadata.size()) + " entries for " +
                          std::to_string(image_paths.size()) + " images");

  std::vector<ImageF> images;
  std::vector<std::string> names;
  for (std::size_t k = 0; k < image_paths.size(); ++k) {
    ImageF img = read_pfm(image_paths[k]);
    img.data() -= static_cast<float>(metadata[k].black_level);
    images.push_back(std::move(img));
    names.push_back(image_paths[k].filename().string());
  }
  return ExposureStack(std::move(images), std::move(metadata), std::move(names));
}

}  // namespace hdrexp
