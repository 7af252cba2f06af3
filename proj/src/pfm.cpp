#include "hdrexp/pfm.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace hdrexp {

namespace {

std::uint32_t byteswap32(std::uint32_t v) {
  return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
}

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::istream& in) {
  std::string token;
  while (in) {
    int c = in.get();
    if (c == EOF) break;
    if (c == '#' && token.empty()) {
      std::string discard;
      std::getline(in, discard);
      continue;
    }
    if (std::isspace(c)) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(static_cast<char>(c));
  }
  return token;
}

}  // namespace

ImageF read_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileReadError("cannot open PFM file: " + path.string());

  const std::string magic = next_token(in);
  Index channels = 0;
  if (magic == "PF") {
    channels = 3;
  } else if (magic == "Pf") {
    channels = 1;
  } else {
    throw FileReadError("not a PFM file (bad magic '" + magic + "'): " + path.string());
  }

  Index width = 0, height = 0;
  double scale = 0.0;
  try {
    width = std::stol(next_token(in));
    height = std::stol(next_token(in));
    scale = std::stod(next_token(in));
  } catch (const std::exception&) {
    throw FileReadError("malformed PFM header: " + path.string());
  }
  if (width <= 0 || height <= 0 || scale == 0.0 || !std::isfinite(scale))
    throw FileReadError("invalid PFM header values: " + path.string());

  // next_token consumed exactly one whitespace byte after the scale field.
  const bool file_little_endian = scale < 0.0;
  const bool host_little_endian = std::endian::native == std::endian::little;

  ImageF image(height, width, channels);
  const Index row_len = width * channels;
  std::vector<std::uint32_t> row(static_cast<std::size_t>(row_len));
  for (Index file_row = 0; file_row < height; ++file_row) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row_len * 4));
    if (!in) throw FileReadError("truncated PFM data: " + path.string());
    const Index dst_row = height - 1 - file_row;
    for (Index k = 0; k < row_len; ++k) {
      std::uint32_t bits = row[static_cast<std::size_t>(k)];
      if (file_little_endian != host_little_endian) bits = byteswap32(bits);
      image.data()(dst_row * row_len + k) = std::bit_cast<float>(bits);
    }
  }
  return image;
}

void write_pfm(const std::filesystem::path& path, const ImageF& image) {
  if (image.channels() != 1 && image.channels() != 3)
    throw ShapeMismatch("PFM supports 1 or 3 channels, got " + std::to_string(image.channels()));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileWriteError("cannot open for writing: " + path.string());

  out << (image.channels() == 3 ? "PF" : "Pf") << '\n'
      << image.width() << ' ' << image.height() << '\n'
      << "-1.0\n";
  const bool host_little_endian = std::endian::native == std::endian::little;
  const Index row_len = image.width() * image.channels();
  std::vector<std::uint32_t> row(static_cast<std::size_t>(row_len));
  for (Index file_row = 0; file_row < image.height(); ++file_row) {
    const Index src_row = image.height() - 1 - file_row;
    for (Index k = 0; k < row_len; ++k) {
      std::uint32_t bits = std::bit_cast<std::uint32_t>(image.data()(src_row * row_len + k));
      row[static_cast<std::size_t>(k)] = host_little_endian ? bits : byteswap32(bits);
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row_len * 4));
  }
  if (!out) throw FileWriteError("failed writing PFM: " + path.string());
}

void write_pgm_mask(const std::filesystem::path& path, const Mask& mask) {
  if (mask.channels() != 1) throw ShapeMismatch("PGM mask must be single-channel");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileWriteError("cannot open for writing: " + path.string());
  out << "P5\n" << mask.width() << ' ' << mask.height() << "\n255\n";
  std::vector<unsigned char> bytes(static_cast<std::size_t>(mask.size()));
  for (Index k = 0; k < mask.size(); ++k) bytes[static_cast<std::size_t>(k)] = mask.data()(k) ? 255 : 0;
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FileWriteError("failed writing PGM: " + path.string());
}

}  // namespace hdrexp
