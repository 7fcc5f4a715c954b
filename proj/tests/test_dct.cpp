// Copyright 2026 The cdhwr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "cdhwr/dct.hpp"
#include "cdhwr/random.hpp"
#include "cdhwr/selftest.hpp"

using namespace cdhwr;

namespace {

std::vector<double> random_block(int n, Rng& rng) {
  std::vector<double> b(static_cast<std::size_t>(n * n));
  for (auto& v : b) v = rng.uniform(-1.0, 1.0);
  return b;
}

}  // namespace

TEST(ForwardDct, ZeroBlock) {
  for (int n : {4, 8}) {
    const auto c = forward_block_dct<double>(std::vector<double>(n * n, 0.0), n);
    for (double v : c) EXPECT_EQ(v, 0.0);
  }
}

TEST(ForwardDct, ConstantBlockDc) {
  for (double v : {1.0, -0.5, 3.25}) {
    const auto c8 = forward_block_dct<double>(std::vector<double>(64, v), 8);
    EXPECT_NEAR(c8[0], 8.0 * v, 1e-10);
    for (std::size_t i = 1; i < 64; ++i) EXPECT_NEAR(c8[i], 0.0, 1e-10);
    const auto c4 = forward_block_dct<double>(std::vector<double>(16, v), 4);
    EXPECT_NEAR(c4[0], 2.0 * std::sqrt(2.0) * v, 1e-10);
    for (std::size_t i = 1; i < 16; ++i) EXPECT_NEAR(c4[i], 0.0, 1e-10);
  }
}

TEST(ForwardDct, MatchesDirectSum) {
  Rng rng(21);
  for (int n : {4, 8}) {
    const auto b = random_block(n, rng);
    const auto c = forward_block_dct<double>(b, n);
    const auto d = oracle::dct_direct(b, n);
    for (std::size_t i = 0; i < c.size(); ++i) EXPECT_NEAR(c[i], d[i], 1e-12);
  }
}

TEST(ForwardDct, UnsupportedSizeRejected) {
  EXPECT_THROW(forward_block_dct<double>(std::vector<double>(36, 0.0), 6), std::invalid_argument);
  EXPECT_THROW(inverse_block_dct<double>(std::vector<double>(36, 0.0), 6), std::invalid_argument);
}

TEST(InverseDct, DcOnly) {
  std::vector<double> c(64, 0.0);
  c[0] = 8.0 * 0.3;
  for (double v : inverse_block_dct<double>(c, 8)) EXPECT_NEAR(v, 0.3, 1e-12);
  for (double v : inverse_block_dct<double>(std::vector<double>(16, 0.0), 4)) EXPECT_EQ(v, 0.0);
}

TEST(InverseDct, RoundTripBothPrecisions) {
  Rng rng(22);
  for (int n : {4, 8}) {
    for (int rep = 0; rep < 200; ++rep) {
      const auto b = random_block(n, rng);
      const auto r = inverse_block_dct<double>(forward_block_dct<double>(b, n), n);
      for (std::size_t i = 0; i < b.size(); ++i) ASSERT_NEAR(r[i], b[i], 1e-10);
      std::vector<float> bf(b.begin(), b.end());
      const auto rf = inverse_block_dct<float>(forward_block_dct<float>(bf, n), n);
      for (std::size_t i = 0; i < b.size(); ++i) ASSERT_NEAR(rf[i], bf[i], 1e-4);
    }
  }
}

// The basis times its transpose is (N/8) I: orthonormal for N=8, scaled by
// 1/2 in energy for N=4.
TEST(DctProperties, EnergyRatioAndLinearity) {
  Rng rng(23);
  for (int n : {4, 8}) {
    for (int rep = 0; rep < 50; ++rep) {
      const auto x = random_block(n, rng), y = random_block(n, rng);
      const auto cx = forward_block_dct<double>(x, n), cy = forward_block_dct<double>(y, n);
      double ex = 0.0, ec = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        ex += x[i] * x[i];
        ec += cx[i] * cx[i];
      }
      EXPECT_NEAR(ec, dct_energy_ratio(n) * ex, 1e-8);
      const double a = rng.uniform(-3.0, 3.0);
      std::vector<double> z(x.size());
      for (std::size_t i = 0; i < z.size(); ++i) z[i] = a * x[i] + y[i];
      const auto cz = forward_block_dct<double>(z, n);
      for (std::size_t i = 0; i < z.size(); ++i) EXPECT_NEAR(cz[i], a * cx[i] + cy[i], 1e-10);
    }
  }
}

TEST(CompressImage, WhitePlaneIsZero) {
  ModelInput m;
  for (auto& v : m.raster) v = 0.5f;
  for (int n : {4, 8}) {
    const DctImage d = compress_image(m, n);
    for (float v : d.coeffs) EXPECT_EQ(v, 0.0f);
  }
}

TEST(CompressImage, SingleBlockDc) {
  ModelInput m;  // all 1.0: centered value 0.5 everywhere
  const DctImage d = compress_image(m, 8);
  EXPECT_NEAR(d.coeffs[0], 4.0f, 1e-5);
  EXPECT_NEAR(network_plane(d)[0], 0.5f, 1e-6);
}

TEST(CompressImage, RoundTripAndDeterminism) {
  Rng rng(24);
  ModelInput m;
  for (auto& v : m.raster) v = static_cast<float>(rng.uniform());
  for (int n : {4, 8}) {
    const DctImage d = compress_image(m, n);
    EXPECT_EQ(d, compress_image(m, n));
    const ModelInput back = decompress_image(d);
    for (std::size_t i = 0; i < m.raster.size(); ++i) EXPECT_NEAR(back.raster[i], m.raster[i], 1e-5);
  }
}

TEST(Quantization, UnitStepsOnIntegersIsIdentity) {
  QuantTable t{8, 100, std::vector<int>(64, 1)};
  std::vector<double> c(64);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = static_cast<double>(static_cast<int>(i) - 30);
  const auto orig = c;
  quantize_dequantize<double>(c, t);
  EXPECT_EQ(c, orig);
}

TEST(Quantization, ReconstructsStepMultiples) {
  Rng rng(25);
  const QuantTable t = jpeg_quant_table(8, 50);
  std::vector<double> c(64);
  for (auto& v : c) v = rng.uniform(-300.0, 300.0);
  quantize_dequantize<double>(c, t);
  for (std::size_t i = 0; i < 64; ++i) {
    const double q = c[i] / t.steps[i];
    EXPECT_NEAR(q, std::round(q), 1e-9);
  }
}

TEST(JpegTable, QualityScaling) {
  const QuantTable q50 = jpeg_quant_table(8, 50);
  EXPECT_EQ(q50.steps[0], 16);
  for (std::size_t i = 0; i < 64; ++i) EXPECT_EQ(q50.steps[i], kJpegLuminance[i]);
  for (int s : jpeg_quant_table(8, 100).steps) EXPECT_EQ(s, 1);
  const QuantTable q1 = jpeg_quant_table(8, 1);
  for (std::size_t i = 0; i < 64; ++i) EXPECT_EQ(q1.steps[i], std::max(1, kJpegLuminance[i] * 50));
  const QuantTable q4 = jpeg_quant_table(4, 50);
  ASSERT_EQ(q4.steps.size(), 16u);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(q4.steps[i * 4 + j], kJpegLuminance[i * 8 + j]);
  EXPECT_THROW(jpeg_quant_table(8, 0), std::invalid_argument);
  EXPECT_THROW(jpeg_quant_table(8, 101), std::invalid_argument);
}

TEST(CdctStream, HeaderAndRoundTrip) {
  Rng rng(26);
  ModelInput m;
  for (auto& v : m.raster) v = static_cast<float>(rng.uniform());
  const QuantTable t = jpeg_quant_table(4, 50);
  const DctImage d = compress_image(m, 4, &t);
  std::stringstream s;
  write_cdct(s, d);
  const std::string bytes = s.str();
  ASSERT_EQ(bytes.size(), 4u + 4u + 4096u * 4u);
  EXPECT_EQ(bytes.substr(0, 4), "CDCT");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5], 4);
  EXPECT_EQ(bytes[6], 1);
  EXPECT_EQ(bytes[7], 50);
  EXPECT_EQ(read_cdct(s), d);
}

TEST(Selftest, DctMutationIsDetected) {
  SelftestOptions opt;
  opt.dct_scale_perturbation = 1e-3;
  const auto groups = run_selftest(opt);
  ASSERT_FALSE(groups.empty());
  EXPECT_EQ(groups[0].name, "dct round trip");
  EXPECT_FALSE(groups[0].passed) << groups[0].detail;
}
