// Copyright 2026 The detdiag Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <random>

#include "detdiag/geometry.hpp"
#include "support.hpp"

namespace detdiag {
namespace {

using testing_support::decode_pixels;
using testing_support::pixel_iou;

TEST(BoxIou, IdenticalBoxesGiveOne) {
  EXPECT_DOUBLE_EQ(box_iou({10, 20, 30, 40}, {10, 20, 30, 40}), 1.0);
}

TEST(BoxIou, DisjointBoxesGiveZero) {
  EXPECT_EQ(box_iou({0, 0, 10, 10}, {20, 20, 5, 5}), 0.0);
  EXPECT_EQ(box_iou({0, 0, 10, 10}, {10, 0, 10, 10}), 0.0);  // touching edge
}

TEST(BoxIou, HalfOverlapGivesOneThird) {
  EXPECT_NEAR(box_iou({0, 0, 10, 10}, {5, 0, 10, 10}), 1.0 / 3.0, 1e-15);
}

TEST(BoxIou, DegenerateBoxHasZeroIou) {
  EXPECT_EQ(box_iou({0, 0, 0, 10}, {0, 0, 10, 10}), 0.0);
  EXPECT_EQ(box_iou({0, 0, 0, 0}, {0, 0, 0, 0}), 0.0);
}

TEST(BoxIou, CrowdUsesDetectionAreaAsDenominator) {
  // Detection half inside a large crowd region.
  EXPECT_DOUBLE_EQ(box_iou_crowd({90, 0, 20, 10}, {0, 0, 100, 100}), 0.5);
  EXPECT_DOUBLE_EQ(box_iou_crowd({10, 10, 5, 5}, {0, 0, 100, 100}), 1.0);
}

TEST(BoxIou, MatchesNaiveFormulaOnRandomBoxes) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0, 50);
  for (int i = 0; i < 2000; ++i) {
    Box a{u(rng), u(rng), u(rng), u(rng)}, b{u(rng), u(rng), u(rng), u(rng)};
    const double iou = box_iou(a, b);
    EXPECT_NEAR(iou, testing_support::ref_box_iou(a, b), 1e-12);
    EXPECT_DOUBLE_EQ(iou, box_iou(b, a));
    EXPECT_GE(iou, 0.0);
    EXPECT_LE(iou, 1.0);
  }
}

TEST(Rle, AreaSumsOddRuns) {
  RleMask m{2, 4, {3, 2, 3}, false};
  EXPECT_EQ(rle_area(m), 2u);
  EXPECT_EQ(rle_area(RleMask{3, 3, {0, 9}, false}), 9u);
  EXPECT_EQ(rle_area(RleMask{3, 3, {9}, false}), 0u);
}

TEST(Rle, ValidateRejectsWrongTotal) {
  EXPECT_THROW(validate_rle(RleMask{2, 4, {3, 2, 2}, false}), InputError);
  EXPECT_THROW(validate_rle(RleMask{2, 4, {3, 2, 4}, false}), InputError);
  EXPECT_NO_THROW(validate_rle(RleMask{2, 4, {3, 2, 3}, false}));
}

TEST(Rle, IouOfIdenticalAndDisjointMasks) {
  RleMask a{2, 4, {0, 4, 4}, false};  // left half
  RleMask b{2, 4, {4, 4}, false};     // right half
  EXPECT_DOUBLE_EQ(mask_iou(a, a), 1.0);
  EXPECT_EQ(mask_iou(a, b), 0.0);
  EXPECT_EQ(mask_iou(RleMask{2, 4, {8}, false}, RleMask{2, 4, {8}, false}), 0.0);
}

TEST(Rle, SizeMismatchIsAnError) {
  EXPECT_THROW(mask_iou(RleMask{2, 4, {8}, false}, RleMask{4, 2, {8}, false}), InputError);
}

RleMask RandomMask(std::mt19937_64& rng, std::uint32_t h, std::uint32_t w) {
  const std::uint64_t n = static_cast<std::uint64_t>(h) * w;
  std::vector<std::uint8_t> px(n);
  const double density = std::uniform_real_distribution<double>(0, 1)(rng);
  const int style = static_cast<int>(rng() % 3);
  for (std::uint64_t i = 0; i < n; ++i) {
    if (style == 0) {
      px[i] = std::uniform_real_distribution<double>(0, 1)(rng) < density;
    } else {
      // Blocky masks with long runs.
      px[i] = i > 0 && (rng() % 8 != 0) ? px[i - 1] : static_cast<std::uint8_t>(rng() % 2);
    }
  }
  return rle_encode(px, h, w);
}

TEST(Rle, IouMatchesPixelDecoderOnRandomPairs) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 1500; ++trial) {
    const auto h = static_cast<std::uint32_t>(1 + rng() % 32);
    const auto w = static_cast<std::uint32_t>(1 + rng() % 32);
    const RleMask a = RandomMask(rng, h, w), b = RandomMask(rng, h, w);
    const auto pa = decode_pixels(a.counts, std::size_t{h} * w);
    const auto pb = decode_pixels(b.counts, std::size_t{h} * w);
    ASSERT_NEAR(mask_iou(a, b), pixel_iou(pa, pb), 1e-12) << "trial " << trial;
    std::size_t set = 0, inter = 0;
    for (std::size_t i = 0; i < pa.size(); ++i) {
      set += pa[i];
      inter += pa[i] && pb[i];
    }
    ASSERT_EQ(rle_area(a), set);
    const double crowd = set == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(set);
    ASSERT_NEAR(mask_iou_crowd(a, b), crowd, 1e-12);
  }
}

TEST(Rle, StringFormRoundTrips) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    const auto h = static_cast<std::uint32_t>(1 + rng() % 40);
    const auto w = static_cast<std::uint32_t>(1 + rng() % 40);
    const RleMask m = RandomMask(rng, h, w);
    const RleMask back = rle_from_string(rle_to_string(m), h, w);
    ASSERT_EQ(back.counts, m.counts);
  }
}

TEST(Rle, StringFormMatchesKnownEncoding) {
  // Runs [0, 4, 4] on a 2x4 image: the first count is 0 -> '0', 4 -> '4'.
  EXPECT_EQ(rle_to_string(RleMask{2, 4, {0, 4, 4}, false}), "044");
  // Large runs take several characters and survive decoding.
  RleMask big{1000, 1000, {123456, 1000, 875544}, false};
  EXPECT_EQ(rle_from_string(rle_to_string(big), 1000, 1000).counts, big.counts);
}

TEST(Rle, StringFormRejectsGarbage) {
  EXPECT_THROW(rle_from_string("\x01", 2, 2), InputError);
  EXPECT_THROW(rle_from_string("o", 2, 2), InputError);  // continuation bit, then nothing
}

TEST(Rle, BoxRasterAgreesWithPixelCenters) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-5, 30);
  for (int trial = 0; trial < 500; ++trial) {
    const auto h = static_cast<std::uint32_t>(1 + rng() % 24);
    const auto w = static_cast<std::uint32_t>(1 + rng() % 24);
    const Box b{u(rng), u(rng), std::abs(u(rng)), std::abs(u(rng))};
    const RleMask m = rle_from_box(b, h, w);
    ASSERT_NO_THROW(validate_rle(m));
    const auto px = decode_pixels(m.counts, std::size_t{h} * w);
    for (std::uint32_t c = 0; c < w; ++c)
      for (std::uint32_t r = 0; r < h; ++r) {
        const bool inside = c + 0.5 >= b.x && c + 0.5 < b.x + b.w && r + 0.5 >= b.y && r + 0.5 < b.y + b.h;
        ASSERT_EQ(px[std::size_t{c} * h + r] != 0, inside) << "trial " << trial;
      }
  }
}

TEST(Rle, IntegerBoxRasterPreservesBoxIou) {
  const Box a{3, 4, 10, 7}, b{8, 6, 9, 9};
  EXPECT_NEAR(mask_iou(rle_from_box(a, 30, 30), rle_from_box(b, 30, 30)), box_iou(a, b), 1e-15);
  EXPECT_EQ(rle_bbox(rle_from_box(a, 30, 30)), a);
}

TEST(Rle, BoundingBoxOfEmptyMaskIsEmpty) {
  EXPECT_EQ(rle_bbox(RleMask{4, 4, {16}, false}).area(), 0.0);
}

}  // namespace
}  // namespace detdiag
