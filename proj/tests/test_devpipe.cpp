#include <cmath>

#include <doctest.h>

#include "covsync/devpipe.hpp"
#include "covsync/error.hpp"
#include "covsync/rng.hpp"
#include "oracles.hpp"

using namespace covsync;

TEST_SUITE("devpipe") {
  TEST_CASE("synth_raw zero noise is exactly constant") {
    const RawImage raw = synth_raw(16, 16, {4096.0, 0.0, 0.0}, 123);
    CHECK(raw.photosites.minCoeff() == 4096.0);
    CHECK(raw.photosites.maxCoeff() == 4096.0);
  }

  TEST_CASE("synth_raw moments match mu and a*mu+b") {
    const NoiseParams noise{4096.0, 0.01, 3.0};
    const RawImage raw = synth_raw(1000, 1000, noise, 7);
    const double n = 1e6;
    const double mean = raw.photosites.mean();
    const double var = (raw.photosites.array() - mean).square().sum() / (n - 1.0);
    const double sigma2 = noise.variance();
    CHECK(std::abs(mean - 4096.0) < 5.0 * std::sqrt(sigma2 / n));
    CHECK(std::abs(var - sigma2) < 5.0 * sigma2 * std::sqrt(2.0 / n));
  }

  TEST_CASE("synth_raw is seed-deterministic") {
    const RawImage a = synth_raw(32, 32, {4096.0, 0.01, 0.0}, 99);
    const RawImage b = synth_raw(32, 32, {4096.0, 0.01, 0.0}, 99);
    CHECK(a.photosites == b.photosites);
    const RawImage c = synth_raw(32, 32, {4096.0, 0.01, 0.0}, 100);
    CHECK(a.photosites != c.photosites);
  }

  TEST_CASE("synth_raw rejects bad parameters") {
    CHECK_THROWS_AS(synth_raw(15, 16, {}, 0), SizeError);
    CHECK_THROWS_AS(synth_raw(16, 16, {4096.0, 0.0, -1.0}, 0), ParameterError);
  }

  TEST_CASE("develop preserves constants for any factor") {
    RawImage raw = synth_raw(64, 64, {1000.0, 0.0, 0.0}, 1);
    for (double f : {1.0, 2.0, 3.5}) {
      const GrayImage g = develop(raw, f);
      CHECK(g.width % 8 == 0);
      CHECK(g.height % 8 == 0);
      CHECK(g.samples.minCoeff() == doctest::Approx(1000.0).epsilon(1e-12));
      CHECK(g.samples.maxCoeff() == doctest::Approx(1000.0).epsilon(1e-12));
    }
  }

  TEST_CASE("develop with factor 1 is the demosaicked luminance crop") {
    const RawImage raw = synth_raw(40, 40, {4096.0, 0.01, 0.0}, 3);
    const GrayImage g = develop(raw, 1.0);
    CHECK(g.width == 40);
    CHECK(g.height == 40);
    // interior green site recomputed by hand: even row, odd col
    const auto& p = raw.photosites;
    const int y = 10, x = 11;
    const double r = 0.5 * (p(y, x - 1) + p(y, x + 1));
    const double b = 0.5 * (p(y - 1, x) + p(y + 1, x));
    CHECK(g.samples(y, x) == doctest::Approx((r + p(y, x) + b) / 3.0).epsilon(1e-12));
  }

  TEST_CASE("develop output too small is an error") {
    const RawImage raw = synth_raw(8, 8, {100.0, 0.0, 0.0}, 1);
    CHECK_THROWS_AS(develop(raw, 2.0), SizeError);
  }

  TEST_CASE("developed iid noise has positively correlated neighbors") {
    double num = 0.0, den = 0.0;
    for (int img = 0; img < 120; ++img) {
      const RawImage raw = synth_raw(48, 48, {4096.0, 0.01, 0.0}, 1000 + img);
      const GrayImage g = develop(raw, 2.0);
      const auto& s = g.samples;
      const double mean = s.mean();
      for (int y = 0; y < g.height; ++y)
        for (int x = 0; x + 1 < g.width; ++x) {
          num += (s(y, x) - mean) * (s(y, x + 1) - mean);
          den += (s(y, x) - mean) * (s(y, x) - mean);
        }
    }
    CHECK(num / den > 0.1);  // strongly significant at this sample size
  }

  TEST_CASE("block_dct constant block is DC-only with value 8v") {
    GrayImage g;
    g.width = g.height = 8;
    g.samples = Plane<double>::Constant(8, 8, 3.25);
    const DctPlane d = block_dct(g);
    CHECK(d.coeff[0] == doctest::Approx(8.0 * 3.25).epsilon(1e-12));
    for (int m = 1; m < 64; ++m) CHECK(std::abs(d.coeff[m]) < 1e-10);
  }

  TEST_CASE("block_dct is orthonormal (Parseval per block)") {
    const RawImage raw = synth_raw(32, 32, {500.0, 0.1, 0.0}, 17);
    const GrayImage g = develop(raw, 1.0);
    const DctPlane d = block_dct(g);
    for (int b = 0; b < d.n_blocks(); ++b) {
      const int by = b / d.blocks_w(), bx = b % d.blocks_w();
      const double pix = g.samples.block<8, 8>(by * 8, bx * 8).squaredNorm();
      const double coe = d.coeff.segment<64>(b * 64).squaredNorm();
      CHECK(coe == doctest::Approx(pix).epsilon(1e-9));
    }
  }

  TEST_CASE("block_dct matches the direct-sum oracle") {
    CounterRng rng(5, 0);
    GrayImage g;
    g.width = g.height = 8;
    g.samples.resize(8, 8);
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) g.samples(i, j) = 200.0 * rng.next_unit() - 100.0;
    const DctPlane d = block_dct(g);
    const Block8<double> ref = oracle::naive_dct(g.samples.block<8, 8>(0, 0));
    for (int m = 0; m < 64; ++m)
      CHECK(d.coeff[m] == doctest::Approx(ref(m / 8, m % 8)).epsilon(1e-10));
  }

  TEST_CASE("noiseless constant raw yields zero AC everywhere") {
    const RawImage raw = synth_raw(64, 64, {2048.0, 0.0, 0.0}, 0);
    const DctPlane d = block_dct(develop(raw, 2.0));
    for (int b = 0; b < d.n_blocks(); ++b)
      for (int m = 1; m < 64; ++m) CHECK(std::abs(d.coeff[b * 64 + m]) < 1e-9);
  }

  TEST_CASE("quantize rounds half away from zero") {
    DctPlane d;
    d.width = d.height = 8;
    d.coeff = Eigen::VectorXd::Zero(64);
    d.coeff[1] = 7.4;
    d.coeff[2] = 7.5;
    d.coeff[3] = -7.5;
    d.coeff[4] = -2.49;
    const QuantizedDctImage q = quantize(d, flat_qtable(1));
    CHECK(q.coeff[0] == 0);
    CHECK(q.coeff[1] == 7);
    CHECK(q.coeff[2] == 8);
    CHECK(q.coeff[3] == -8);
    CHECK(q.coeff[4] == -2);
  }

  TEST_CASE("dequantize-requantize is a fixed point") {
    const QuantizedDctImage cover =
        synth_cover(64, 64, {4096.0, 0.01, 0.0}, 2.0, quality_qtable(95), 11);
    const QuantizedDctImage again = quantize(dequantize(cover), cover.qtable);
    CHECK(again.coeff == cover.coeff);
  }

  TEST_CASE("quantize range and parameter errors") {
    DctPlane d;
    d.width = d.height = 8;
    d.coeff = Eigen::VectorXd::Zero(64);
    d.coeff[5] = 40000.0;
    CHECK_THROWS_AS(quantize(d, flat_qtable(1)), RangeError);
    CHECK_THROWS_AS(quantize(d, flat_qtable(0)), ParameterError);
  }

  TEST_CASE("synth_cover is deterministic and has usable AC content") {
    const QuantizedDctImage cover =
        synth_cover(128, 128, {4096.0, 0.01, 0.0}, 2.0, flat_qtable(1), 11);
    CHECK(cover.width == 64);
    CHECK(cover.nzac() > 1000);
    const QuantizedDctImage again =
        synth_cover(128, 128, {4096.0, 0.01, 0.0}, 2.0, flat_qtable(1), 11);
    CHECK(again.coeff == cover.coeff);
  }
}
