#include "covsync/devpipe.hpp"

#include <cmath>

#include "covsync/error.hpp"
#include "covsync/rng.hpp"

namespace covsync {

namespace {

// Orthonormal DCT-II basis, T(k,i) = s_k cos((2i+1) k pi / 16).
Block8<double> dct_basis() {
  Block8<double> t;
  const double pi = 3.14159265358979323846;
  for (int k = 0; k < 8; ++k) {
    const double s = k == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
    for (int i = 0; i < 8; ++i) t(k, i) = s * std::cos((2 * i + 1) * k * pi / 16.0);
  }
  return t;
}

// reflect-101 border indexing
inline int mirror(int i, int n) {
  if (i < 0) i = -i;
  if (i >= n) i = 2 * n - 2 - i;
  return i;
}

}  // namespace

int QuantizedDctImage::nzac() const {
  int n = 0;
  for (Eigen::Index i = 0; i < coeff.size(); ++i)
    if (i % kModesPerBlock != 0 && coeff[i] != 0) ++n;
  return n;
}

RawImage synth_raw(int width, int height, const NoiseParams& noise, std::uint64_t seed) {
  if (width < 2 || height < 2 || width % 2 != 0 || height % 2 != 0)
    throw SizeError("synth_raw: dimensions must be even and >= 2");
  if (!(noise.mu >= 0.0)) throw ParameterError("synth_raw: mu must be >= 0");
  const double var = noise.variance();
  if (!(var >= 0.0)) throw ParameterError("synth_raw: noise variance a*mu+b must be >= 0");

  RawImage raw;
  raw.width = width;
  raw.height = height;
  raw.photosites.resize(height, width);
  const double sigma = std::sqrt(var);
  CounterRng rng(seed, derive_stream(seed, 0x7261776du /*"rawm"*/));
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      raw.photosites(y, x) = sigma == 0.0 ? noise.mu : noise.mu + sigma * rng.next_gaussian();
  return raw;
}

GrayImage develop(const RawImage& raw, double factor, double antialias) {
  if (!(antialias >= 1.0)) throw ParameterError("develop: antialias width must be >= 1");
  if (!(factor >= 1.0)) throw ParameterError("develop: downscale factor must be >= 1");
  const int w = raw.width, h = raw.height;
  const auto& p = raw.photosites;

  // Bilinear demosaic, RGGB. Channel known at its own sites, interpolated
  // elsewhere from the standard 2-/4-neighbor averages.
  Plane<double> lum(h, w);
  auto at = [&](int y, int x) { return p(mirror(y, h), mirror(x, w)); };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool er = (y % 2) == 0, ec = (x % 2) == 0;
      double r, g, b;
      if (er && ec) {  // red site
        r = p(y, x);
        g = 0.25 * (at(y - 1, x) + at(y + 1, x) + at(y, x - 1) + at(y, x + 1));
        b = 0.25 * (at(y - 1, x - 1) + at(y - 1, x + 1) + at(y + 1, x - 1) + at(y + 1, x + 1));
      } else if (er && !ec) {  // green site, red row
        g = p(y, x);
        r = 0.5 * (at(y, x - 1) + at(y, x + 1));
        b = 0.5 * (at(y - 1, x) + at(y + 1, x));
      } else if (!er && ec) {  // green site, blue row
        g = p(y, x);
        r = 0.5 * (at(y - 1, x) + at(y + 1, x));
        b = 0.5 * (at(y, x - 1) + at(y, x + 1));
      } else {  // blue site
        b = p(y, x);
        g = 0.25 * (at(y - 1, x) + at(y + 1, x) + at(y, x - 1) + at(y, x + 1));
        r = 0.25 * (at(y - 1, x - 1) + at(y - 1, x + 1) + at(y + 1, x - 1) + at(y + 1, x + 1));
      }
      lum(y, x) = (r + g + b) / 3.0;
    }
  }

  // Area-consistent bilinear downscale: separable triangle kernel with
  // half-width `antialias * factor`, output centers at (o+0.5)*factor-0.5,
  // weights renormalized at the borders.
  const int ow = static_cast<int>(std::floor(w / factor));
  const int oh = static_cast<int>(std::floor(h / factor));
  Plane<double> scaled;
  if (factor == 1.0) {
    scaled = std::move(lum);
  } else {
    const double half = antialias * factor;
    auto taps = [&](int n_out, int n_in) {
      std::vector<std::vector<std::pair<int, double>>> rows(n_out);
      for (int o = 0; o < n_out; ++o) {
        const double c = (o + 0.5) * factor - 0.5;
        const int lo = static_cast<int>(std::floor(c - half)) + 1;
        const int hi = static_cast<int>(std::ceil(c + half)) - 1;
        double norm = 0.0;
        for (int i = lo; i <= hi; ++i) {
          const double wgt = 1.0 - std::abs(i - c) / half;
          if (wgt <= 0.0) continue;
          rows[o].emplace_back(std::min(std::max(i, 0), n_in - 1), wgt);
          norm += wgt;
        }
        for (auto& t : rows[o]) t.second /= norm;
      }
      return rows;
    };
    const auto rows = taps(oh, h), cols = taps(ow, w);
    Plane<double> tmp(oh, w);
    for (int y = 0; y < oh; ++y) {
      tmp.row(y).setZero();
      for (const auto& [i, wgt] : rows[y]) tmp.row(y) += wgt * lum.row(i);
    }
    scaled.resize(oh, ow);
    for (int x = 0; x < ow; ++x) {
      scaled.col(x).setZero();
      for (const auto& [i, wgt] : cols[x]) scaled.col(x) += wgt * tmp.col(i);
    }
  }

  const int cw = (scaled.cols() / kBlockSize) * kBlockSize;
  const int ch = (scaled.rows() / kBlockSize) * kBlockSize;
  if (cw < kBlockSize || ch < kBlockSize)
    throw SizeError("develop: output smaller than one 8x8 block");
  const int ox = (static_cast<int>(scaled.cols()) - cw) / 2;
  const int oy = (static_cast<int>(scaled.rows()) - ch) / 2;

  GrayImage out;
  out.width = cw;
  out.height = ch;
  out.samples = scaled.block(oy, ox, ch, cw);
  return out;
}

DctPlane block_dct(const GrayImage& gray) {
  if (gray.width % kBlockSize != 0 || gray.height % kBlockSize != 0)
    throw SizeError("block_dct: dimensions must be multiples of 8");
  static const Block8<double> T = dct_basis();

  DctPlane out;
  out.width = gray.width;
  out.height = gray.height;
  out.coeff.resize(static_cast<Eigen::Index>(out.n_blocks()) * kModesPerBlock);
  const int bw = out.blocks_w(), bh = out.blocks_h();
  for (int by = 0; by < bh; ++by) {
    for (int bx = 0; bx < bw; ++bx) {
      const Block8<double> b = gray.samples.block<8, 8>(by * kBlockSize, bx * kBlockSize);
      const Block8<double> c = T * b * T.transpose();
      Eigen::Map<Block8<double>>(out.coeff.data() +
                                 static_cast<Eigen::Index>(by * bw + bx) * kModesPerBlock) = c;
    }
  }
  return out;
}

QuantizedDctImage quantize(const DctPlane& dct, const std::array<std::uint16_t, 64>& qtable) {
  for (auto q : qtable)
    if (q < 1) throw ParameterError("quantize: qtable entries must be >= 1");

  QuantizedDctImage out;
  out.width = dct.width;
  out.height = dct.height;
  out.qtable = qtable;
  out.coeff.resize(dct.coeff.size());
  for (Eigen::Index i = 0; i < dct.coeff.size(); ++i) {
    const double q = qtable[i % kModesPerBlock];
    const double v = std::round(dct.coeff[i] / q);  // half away from zero
    if (v > 32767.0 || v < -32768.0) throw RangeError("quantize: coefficient outside int16 range");
    out.coeff[i] = static_cast<std::int16_t>(v);
  }
  return out;
}

DctPlane dequantize(const QuantizedDctImage& img) {
  DctPlane out;
  out.width = img.width;
  out.height = img.height;
  out.coeff.resize(img.coeff.size());
  for (Eigen::Index i = 0; i < img.coeff.size(); ++i)
    out.coeff[i] = static_cast<double>(img.coeff[i]) * img.qtable[i % kModesPerBlock];
  return out;
}

std::array<std::uint16_t, 64> quality_qtable(int quality) {
  if (quality < 1 || quality > 100) throw ParameterError("quality_qtable: quality in [1,100]");
  // Annex-K luminance base table with the usual IJG scaling.
  static const int base[64] = {16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
                               14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
                               18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
                               49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};
  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  std::array<std::uint16_t, 64> q{};
  for (int i = 0; i < 64; ++i) {
    int v = (base[i] * scale + 50) / 100;
    v = std::min(std::max(v, 1), 255);
    q[i] = static_cast<std::uint16_t>(v);
  }
  return q;
}

std::array<std::uint16_t, 64> flat_qtable(std::uint16_t step) {
  std::array<std::uint16_t, 64> q{};
  q.fill(step);
  return q;
}

QuantizedDctImage synth_cover(int raw_width, int raw_height, const NoiseParams& noise,
                              double factor, const std::array<std::uint16_t, 64>& qtable,
                              std::uint64_t seed, double antialias) {
  RawImage raw = synth_raw(raw_width, raw_height, noise, seed);
  GrayImage gray = develop(raw, factor, antialias);
  gray.samples.array() -= noise.mu;  // DC centering; AC statistics unchanged
  return quantize(block_dct(gray), qtable);
}

}  // namespace covsync
