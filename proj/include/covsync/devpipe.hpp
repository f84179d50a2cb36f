#pragma once

#include <array>
#include <cstdint>

#include <Eigen/Core>

#include "covsync/plane.hpp"

namespace covsync {

// Heteroscedastic sensor-noise parameters: photosite variance = a*mu + b.
struct NoiseParams {
  double mu = 4096.0;  // 2^12, linear sensor units
  double a = 0.01;
  double b = 0.0;
  double variance() const { return a * mu + b; }
};

// Constant-luminosity RAW plane with an RGGB Bayer layout:
// R at (even,even), G at (even,odd)/(odd,even), B at (odd,odd).
struct RawImage {
  int width = 0;
  int height = 0;
  int bit_depth = 14;
  Plane<double> photosites;
};

struct GrayImage {
  int width = 0;
  int height = 0;
  Plane<double> samples;
};

// Blockwise unquantized DCT coefficients.  Linear layout: block raster order,
// modes row-major within each 8x8 block, so coefficient (block b, mode m)
// lives at index b*64 + m.
struct DctPlane {
  int width = 0;
  int height = 0;
  Eigen::VectorXd coeff;

  int blocks_w() const { return width / kBlockSize; }
  int blocks_h() const { return height / kBlockSize; }
  int n_blocks() const { return blocks_w() * blocks_h(); }
};

struct QuantizedDctImage {
  int width = 0;
  int height = 0;
  std::array<std::uint16_t, 64> qtable{};
  Eigen::Matrix<std::int16_t, Eigen::Dynamic, 1> coeff;

  int blocks_w() const { return width / kBlockSize; }
  int blocks_h() const { return height / kBlockSize; }
  int n_blocks() const { return blocks_w() * blocks_h(); }
  /// Count of nonzero quantized AC coefficients (payload denominator).
  int nzac() const;
};

/// Constant-luminosity RAW with i.i.d. N(0, a*mu+b) sensor noise.
RawImage synth_raw(int width, int height, const NoiseParams& noise, std::uint64_t seed);

/// Bilinear demosaic -> equal-weight luminance -> bilinear downscale by
/// `factor` (triangle kernel of half-width antialias*factor) -> center-crop
/// to a multiple of 8.  factor == 1 skips the resample entirely.
GrayImage develop(const RawImage& raw, double factor, double antialias = 1.5);

/// Orthonormal type-II 2D DCT per 8x8 block (JPEG convention).
DctPlane block_dct(const GrayImage& gray);

/// Divide by the per-mode step and round half away from zero.
QuantizedDctImage quantize(const DctPlane& dct, const std::array<std::uint16_t, 64>& qtable);

DctPlane dequantize(const QuantizedDctImage& img);

/// Standard luminance table scaled to the given quality factor in [1,100].
std::array<std::uint16_t, 64> quality_qtable(int quality);

std::array<std::uint16_t, 64> flat_qtable(std::uint16_t step = 1);

/// Full pipeline to a quantized cover.  The developed plane is shifted by
/// -mu before the DCT so the DC band is centered (16-bit coefficient range);
/// embedding statistics are unaffected by the shift.
QuantizedDctImage synth_cover(int raw_width, int raw_height, const NoiseParams& noise,
                              double factor, const std::array<std::uint16_t, 64>& qtable,
                              std::uint64_t seed, double antialias = 1.5);

}  // namespace covsync
