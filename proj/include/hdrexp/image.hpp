#pragma once

#include <Eigen/Core>

#include <cassert>
#include <cstdint>

#include "hdrexp/error.hpp"

namespace hdrexp {

using Index = Eigen::Index;

/// Dense H x W x C image with interleaved channels.
///
/// Sample (row, col, ch) lives at ((row * W) + col) * C + ch. A "pixel" index
/// is row * W + col; a "sample" index is pixel * C + ch.
template <typename Scalar>
class Image {
 public:
  using Storage = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  Image() = default;
  Image(Index height, Index width, Index channels)
      : height_(height), width_(width), channels_(channels), data_(height * width * channels) {
    if (height < 0 || width < 0 || channels < 1) throw ShapeMismatch("invalid image dimensions");
  }
  Image(Index height, Index width, Index channels, Scalar fill) : Image(height, width, channels) {
    data_.setConstant(fill);
  }

  Index height() const { return height_; }
  Index width() const { return width_; }
  Index channels() const { return channels_; }
  Index pixel_count() const { return height_ * width_; }
  Index size() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  Scalar& operator()(Index row, Index col, Index ch = 0) {
    assert(row < height_ && col < width_ && ch < channels_);
    return data_((row * width_ + col) * channels_ + ch);
  }
  Scalar operator()(Index row, Index col, Index ch = 0) const {
    assert(row < height_ && col < width_ && ch < channels_);
    return data_((row * width_ + col) * channels_ + ch);
  }

  Scalar& sample(Index pixel, Index ch) { return data_(pixel * channels_ + ch); }
  Scalar sample(Index pixel, Index ch) const { return data_(pixel * channels_ + ch); }

  Storage& data() { return data_; }
  const Storage& data() const { return data_; }

  template <typename Other>
  bool same_shape(const Image<Other>& other) const {
    return height_ == other.height() && width_ == other.width() && channels_ == other.channels();
  }

  template <typename Other>
  Image<Other> cast() const {
    Image<Other> out(height_, width_, channels_);
    out.data() = data_.template cast<Other>();
    return out;
  }

  friend bool operator==(const Image& a, const Image& b) {
    return a.same_shape(b) && (a.data_ == b.data_).all();
  }

 private:
  Index height_ = 0;
  Index width_ = 0;
  Index channels_ = 1;
  Storage data_;
};

using ImageF = Image<float>;
using ImageD = Image<double>;
using Mask = Image<bool>;

}  // namespace hdrexp
