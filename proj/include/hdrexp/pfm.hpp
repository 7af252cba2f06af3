#pragma once

#include <filesystem>

#include "hdrexp/image.hpp"

namespace hdrexp {

/// Reads a portable float map ("PF" = 3 channels, "Pf" = 1 channel).
/// Both byte orders are accepted; rows are stored bottom-up in the file.
ImageF read_pfm(const std::filesystem::path& path);

/// Writes a little-endian PFM. Only 1- and 3-channel images are representable.
void write_pfm(const std::filesystem::path& path, const ImageF& image);

/// Writes an 8-bit binary PGM (0 / 255) of a single-channel mask.
void write_pgm_mask(const std::filesystem::path& path, const Mask& mask);

}  // namespace hdrexp
