#include "hdrexp/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "hdrexp/rng.hpp"
#include "hdrexp/system.hpp"

namespace hdrexp {

void SimConfig::validate() const {
  if (exposure_times.size() < 2) throw DataError("simulation needs at least 2 exposure times");
  for (double t : exposure_times)
    if (!(t > 0.0)) throw DataError("exposure times must be > 0");
  if (bit_depth < 8 || bit_depth > 16) throw DataError("bit_depth must be in [8, 16]");
  if (!(corruption_rel_std >= 0.0)) throw DataError("corruption_rel_std must be >= 0");
}

namespace {

template <bool Noisy>
ImageF render(const ImageD& radiance, double d, const NoiseParameters* params, int bit_depth, std::uint64_t seed,
              double white) {
  if (!(d > 0.0)) throw DomainError("scaling constant must be > 0");
  if (bit_depth < 8 || bit_depth > 16) throw DataError("bit_depth must be in [8, 16]");
  const double levels = std::ldexp(1.0, bit_depth) - 1.0;
  const CounterRng rng(seed);
  const int channels = static_cast<int>(radiance.channels());

  std::array<ChannelNoise, 3> noise{};
  if constexpr (Noisy) {
    for (int c = 0; c < channels; ++c) noise[static_cast<std::size_t>(c)] = params->channel(c, channels);
  }

  ImageF out(radiance.height(), radiance.width(), radiance.channels());
  const auto& x = radiance.data();
  auto& y = out.data();
  for (Index k = 0; k < x.size(); ++k) {
    if (!(x(k) >= 0.0)) throw DomainError("radiance must be >= 0");
    const double mu = d * x(k);
    double s = mu;
    if constexpr (Noisy) {
      const ChannelNoise n = noise[static_cast<std::size_t>(k % channels)];
      s += std::sqrt(n.alpha * mu + n.beta) * rng.normal(static_cast<std::uint64_t>(k));
    }
    s = std::clamp(s, 0.0, white);
    const double code = std::nearbyint(s / white * levels);
    y(k) = static_cast<float>(std::min(code / levels * white, white));
  }
  return out;
}

}  // namespace

ImageF simulate_capture(const ImageD& radiance, double d, const NoiseParameters& params, int bit_depth,
                        std::uint64_t seed, double white) {
  return render<true>(radiance, d, &params, bit_depth, seed, white);
}

ImageF simulate_capture_noiseless(const ImageD& radiance, double d, int bit_depth, double white) {
  return render<false>(radiance, d, nullptr, bit_depth, 0, white);
}

Eigen::VectorXd corrupt_exposures(const Eigen::VectorXd& e, double rel_std, std::uint64_t seed,
                                  CorruptionModel model, std::optional<Index> pinned) {
  if (!(rel_std >= 0.0)) throw DomainError("corruption std must be >= 0");
  const CounterRng rng(derive_key(seed, 0xC0FFEE));
  Eigen::VectorXd out = e;
  for (Index i = 0; i < e.size(); ++i) {
    if (pinned && *pinned == i) continue;
    const double sigma = model == CorruptionModel::log_scaled ? rel_std * std::abs(e(i)) : rel_std;
    if (sigma == 0.0) continue;
    out(i) += sigma * rng.normal(static_cast<std::uint64_t>(i));
  }
  return out;
}

ImageD synth_gradient(int stops, Index width) {
  if (stops < 1) throw DomainError("gradient needs at least one stop");
  if (width < 1) throw DomainError("gradient width must be >= 1");
  ImageD out(1, width, 1);
  const double top = std::ldexp(1.0, stops);
  for (Index c = 0; c < width; ++c) {
    const double u = width == 1 ? 0.0 : static_cast<double>(c) / static_cast<double>(width - 1);
    out(0, c) = 1.0 + (top - 1.0) * u;
  }
  out(0, width - 1) = top;
  return out;
}

ImageD gradient_scene(int stops, Index width, Index rows, double scale) {
  const ImageD row = synth_gradient(stops, width);
  ImageD out(rows, width, 1);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < width; ++c) out(r, c) = scale * row(0, c);
  return out;
}

namespace {

struct SceneRng {
  CounterRng rng;
  std::uint64_t counter = 0;
  double uniform(double lo, double hi) { return lo + (hi - lo) * rng.uniform(counter++); }
};

double gauss2(double du, double dv, double sigma) { return std::exp(-(du * du + dv * dv) / (2.0 * sigma * sigma)); }

}  // namespace

ImageD procedural_scene(int index, Index height, Index width) {
  if (index < 0 || index >= kProceduralSceneCount) throw DomainError("unknown procedural scene index");
  if (height < 1 || width < 1) throw DomainError("scene size must be positive");

  SceneRng srng{CounterRng(derive_key(0x5CE7E, static_cast<std::uint64_t>(index)))};

  struct Blob {
    double u, v, sigma, amp;
  };
  std::vector<Blob> blobs;
  for (int b = 0; b < 8; ++b)
    blobs.push_back({srng.uniform(0, 1), srng.uniform(0, 1), srng.uniform(0.03, 0.2), srng.uniform(2.0, 9.0)});
  struct Wave {
    double fu, fv, phase, amp;
  };
  std::vector<Wave> waves;
  for (int w = 0; w < 6; ++w)
    waves.push_back({srng.uniform(-6, 6), srng.uniform(-6, 6), srng.uniform(0, 2 * std::numbers::pi),
                     srng.uniform(0.8, 2.5)});
  std::array<double, 64> patch_levels{};
  for (double& level : patch_levels) level = srng.uniform(-9.0, 5.0);
  const std::array<double, 3> tint{srng.uniform(0.7, 1.0), 1.0, srng.uniform(0.8, 1.3)};

  // Log2 radiance per scene; the usable window for 1/64 .. 8 s is roughly [-9.5, 5.9].
  auto log2_radiance = [&](double u, double v) -> double {
    switch (index) {
      case 0:  // linear radiance ramp
        return std::log2(0.002 + 50.0 * u);
      case 1:  // exponential ramp
        return -9.0 + 14.5 * v;
      case 2:  // sky: exponential falloff from the top, mild horizontal drift
        return 5.0 - 12.0 * v + 0.8 * std::sin(3.0 * u);
      case 3: {  // sun over a dim sky
        const double sun = gauss2(u - 0.7, v - 0.25, 0.07);
        return -7.0 + 3.0 * u + 4.0 * (1.0 - v) + 8.5 * sun;
      }
      case 4: {  // inverse-square falloff from a grazing light source
        const double h = 0.08;
        const double du = u + 0.1, dv = v - 0.3;
        return std::log2(0.002 + 40.0 * std::pow(h * h / (h * h + du * du + dv * dv), 1.5));
      }
      case 5: {  // blobs on a mid-grey background
        double L = -6.0 + 2.0 * u;
        for (const Blob& b : blobs) L += b.amp * gauss2(u - b.u, v - b.v, b.sigma);
        return std::min(L, 6.5);
      }
      case 6: {  // mosaic of flat patches with a faint ramp
        const auto pu = std::min<std::size_t>(7, static_cast<std::size_t>(u * 8.0));
        const auto pv = std::min<std::size_t>(7, static_cast<std::size_t>(v * 8.0));
        return patch_levels[pv * 8 + pu] + 0.5 * (u - v);
      }
      case 7: {  // smooth random field
        double L = -1.5;
        for (const Wave& w : waves) L += w.amp * std::sin(2.0 * std::numbers::pi * (w.fu * u + w.fv * v) + w.phase);
        return std::clamp(L, -9.5, 6.0);
      }
      case 8: {  // diagonal ramp with highlights
        double L = -9.0 + 7.0 * (u + v);
        for (std::size_t b = 0; b < 3; ++b) L += 0.6 * blobs[b].amp * gauss2(u - blobs[b].u, v - blobs[b].v, blobs[b].sigma);
        return std::min(L, 6.5);
      }
      default: {  // radial falloff with ripples
        const double r = std::hypot(u - 0.5, v - 0.5);
        return 5.0 - 18.0 * r + 0.7 * std::cos(40.0 * r);
      }
    }
  };

  ImageD out(height, width, 3);
  for (Index r = 0; r < height; ++r) {
    const double v = height == 1 ? 0.0 : static_cast<double>(r) / static_cast<double>(height - 1);
    for (Index c = 0; c < width; ++c) {
      const double u = width == 1 ? 0.0 : static_cast<double>(c) / static_cast<double>(width - 1);
      const double x = std::exp2(log2_radiance(u, v));
      for (Index ch = 0; ch < 3; ++ch) out(r, c, ch) = x * tint[static_cast<std::size_t>(ch)];
    }
  }
  return out;
}

SimulatedStack simulate_stack(const ImageD& radiance, const SimConfig& config, const NoiseParameters& params,
                              const Eigen::VectorXd& log_errors, bool noiseless) {
  config.validate();
  const auto n = static_cast<Index>(config.exposure_times.size());
  if (log_errors.size() != n) throw ShapeMismatch("log_errors length must match exposure_times");

  const double gain = config.iso / 100.0;
  std::vector<ImageF> images;
  std::vector<CaptureMetadata> metadata;
  for (Index i = 0; i < n; ++i) {
    const double t = config.exposure_times[static_cast<std::size_t>(i)];
    images.push_back(noiseless ? simulate_capture_noiseless(radiance, t, config.bit_depth)
                               : simulate_capture(radiance, t, params, config.bit_depth,
                                                  derive_key(config.seed, static_cast<std::uint64_t>(i))));
    CaptureMetadata m;
    m.exposure_time = t * std::exp(log_errors(i));
    m.gain = gain;
    m.white_level = 1.0;
    m.black_level = 0.0;
    metadata.push_back(m);
  }

  ExposureStack stack(std::move(images), std::move(metadata));
  Eigen::VectorXd e_true(n), e_exif(n);
  for (Index i = 0; i < n; ++i) {
    const Index src = stack.source_index(i);
    e_true(i) = std::log(config.exposure_times[static_cast<std::size_t>(src)] * gain);
    e_exif(i) = e_true(i) + log_errors(src);
  }
  return {std::move(stack), std::move(e_true), std::move(e_exif)};
}

ExposureStack shuffle_tiles(const ExposureStack& stack, Index tile_size, std::span<const Index> tile_ids,
                            std::uint64_t seed) {
  const std::vector<TileRect> tiles = tile_grid(stack.height(), stack.width(), tile_size);
  std::vector<ImageF> images = stack.images();
  std::vector<CaptureMetadata> metadata;
  std::vector<std::string> names;
  for (Index i = 0; i < stack.size(); ++i) {
    metadata.push_back(stack.metadata(i));
    names.push_back(stack.name(i));
  }
  const Index channels = stack.channels();

  for (Index i = 0; i < stack.size(); ++i) {
    ImageF& img = images[static_cast<std::size_t>(i)];
    const ImageF& src = stack.image(i);
    for (Index id : tile_ids) {
      if (id < 0 || id >= static_cast<Index>(tiles.size())) throw DomainError("tile id out of range");
      const TileRect& t = tiles[static_cast<std::size_t>(id)];
      std::vector<Index> pixels;
      for (Index r = t.row; r < t.row + t.height; ++r)
        for (Index c = t.col; c < t.col + t.width; ++c) pixels.push_back(r * stack.width() + c);
      // Fisher-Yates driven by the counter generator.
      std::vector<Index> perm = pixels;
      const CounterRng rng(derive_key(seed, static_cast<std::uint64_t>(id * 1024 + i)));
      for (std::size_t k = perm.size(); k > 1; --k) {
        const auto pick = static_cast<std::size_t>(rng.uniform(k) * static_cast<double>(k));
        std::swap(perm[k - 1], perm[std::min(pick, k - 1)]);
      }
      for (std::size_t k = 0; k < pixels.size(); ++k)
        for (Index ch = 0; ch < channels; ++ch) img.sample(pixels[k], ch) = src.sample(perm[k], ch);
    }
  }
  return ExposureStack(std::move(images), std::move(metadata), std::move(names));
}

}  // namespace hdrexp
