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

#include <string>

#include "detdiag/io.hpp"
#include "support.hpp"

namespace detdiag {
namespace {

json MinimalGroundTruth() {
  return json::parse(R"({
    "images": [{"id": 1, "width": 100, "height": 80}, {"id": 2, "width": 50, "height": 50}],
    "categories": [{"id": 1, "name": "cat"}, {"id": 2, "name": "dog"}],
    "annotations": [
      {"id": 10, "image_id": 1, "category_id": 1, "bbox": [0, 0, 10, 10], "iscrowd": 0, "area": 100},
      {"id": 11, "image_id": 1, "category_id": 2, "bbox": [20, 20, 30, 10], "iscrowd": 1},
      {"id": 12, "image_id": 2, "category_id": 1, "bbox": [5, 5, 4, 4]}
    ]})");
}

TEST(GroundTruth, MinimalFileLoads) {
  const Dataset ds = parse_ground_truth(MinimalGroundTruth(), "gt.json");
  EXPECT_EQ(ds.images.size(), 2u);
  EXPECT_EQ(ds.categories.size(), 2u);
  ASSERT_EQ(ds.annotations.size(), 3u);
  EXPECT_FALSE(ds.annotations[0].is_crowd);
  EXPECT_TRUE(ds.annotations[1].is_crowd);
  EXPECT_DOUBLE_EQ(ds.annotations[1].area, 300.0);
  EXPECT_EQ(ds.annotations[0].declared_area, 100.0);
  EXPECT_TRUE(ds.warnings.empty());
}

TEST(GroundTruth, UndeclaredCategoryNamesTheAnnotation) {
  json doc = MinimalGroundTruth();
  doc["annotations"][2]["category_id"] = 99;
  try {
    parse_ground_truth(doc, "gt.json");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    ASSERT_EQ(e.offenders().size(), 1u);
    EXPECT_NE(e.offenders()[0].find("annotation 12"), std::string::npos);
    EXPECT_NE(e.offenders()[0].find("99"), std::string::npos);
  }
}

TEST(GroundTruth, EveryDanglingReferenceIsReported) {
  json doc = MinimalGroundTruth();
  doc["annotations"][0]["image_id"] = 7;
  doc["annotations"][2]["category_id"] = 99;
  try {
    parse_ground_truth(doc, "gt.json");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.offenders().size(), 2u);
  }
}

TEST(GroundTruth, DuplicateIdsAreRejected) {
  json doc = MinimalGroundTruth();
  doc["annotations"][2]["id"] = 10;
  EXPECT_THROW(parse_ground_truth(doc, "gt.json"), ValidationError);
}

TEST(GroundTruth, MalformedFieldReportsJsonPointer) {
  json doc = MinimalGroundTruth();
  doc["annotations"][1]["bbox"] = {1, 2, 3};
  try {
    parse_ground_truth(doc, "gt.json");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.where(), "/annotations/1/bbox");
    EXPECT_EQ(e.path(), "gt.json");
  }
}

TEST(GroundTruth, OutOfBoundsBoxIsAWarning) {
  json doc = MinimalGroundTruth();
  doc["annotations"][2]["bbox"] = {40, 40, 30, 30};
  const Dataset ds = parse_ground_truth(doc, "gt.json");
  ASSERT_EQ(ds.warnings.size(), 1u);
  EXPECT_NE(ds.warnings[0].find("annotation 12"), std::string::npos);
}

TEST(GroundTruth, RleSegmentationGivesPixelArea) {
  json doc = MinimalGroundTruth();
  doc["images"][1]["width"] = 4;
  doc["images"][1]["height"] = 2;
  doc["annotations"][2].erase("bbox");
  doc["annotations"][2]["segmentation"] = {{"size", {2, 4}}, {"counts", {3, 2, 3}}};
  const Dataset ds = parse_ground_truth(doc, "gt.json");
  EXPECT_DOUBLE_EQ(ds.annotations[2].area, 2.0);
  EXPECT_EQ(ds.annotations[2].box, (Box{1, 0, 2, 2}));
}

TEST(GroundTruth, MaskOfWrongSizeIsRejected) {
  json doc = MinimalGroundTruth();
  doc["annotations"][2]["segmentation"] = {{"size", {2, 4}}, {"counts", {3, 2, 3}}};
  EXPECT_THROW(parse_ground_truth(doc, "gt.json"), ValidationError);
}

TEST(GroundTruth, NotExhaustiveListIsKept) {
  json doc = MinimalGroundTruth();
  doc["images"][0]["not_exhaustive_category_ids"] = {2};
  const Dataset ds = parse_ground_truth(doc, "gt.json");
  EXPECT_EQ(ds.images[0].ignored_categories, std::vector<CategoryId>{2});
}

TEST(GroundTruth, SaveLoadRoundTripPlainAndGzip) {
  Dataset ds = parse_ground_truth(MinimalGroundTruth(), "gt.json");
  ds.name = "tiny";
  const auto dir = testing_support::temp_dir("dataset_rt");
  for (const std::string name : {"gt.json", "gt.json.gz"}) {
    const std::string path = (dir / name).string();
    save_ground_truth(ds, path);
    const Dataset back = load_ground_truth(path);
    EXPECT_EQ(back.name, "tiny");
    ASSERT_EQ(back.annotations.size(), ds.annotations.size());
    for (std::size_t i = 0; i < ds.annotations.size(); ++i) {
      EXPECT_EQ(back.annotations[i].id, ds.annotations[i].id);
      EXPECT_EQ(back.annotations[i].box, ds.annotations[i].box);
      EXPECT_EQ(back.annotations[i].is_crowd, ds.annotations[i].is_crowd);
      EXPECT_EQ(back.annotations[i].area, ds.annotations[i].area);
    }
  }
}

TEST(GroundTruth, MissingFileIsAnInputError) {
  EXPECT_THROW(load_ground_truth("/nonexistent/gt.json"), InputError);
}

TEST(GroundTruth, MalformedJsonIsAParseError) {
  EXPECT_THROW(parse_json("{\"images\": [", "bad.json"), ParseError);
}

class DetectionsTest : public ::testing::Test {
 protected:
  Dataset ds = parse_ground_truth(MinimalGroundTruth(), "gt.json");
  EvalConfig cfg;
};

TEST_F(DetectionsTest, EmptyFileYieldsNoDetections) {
  EXPECT_TRUE(parse_detections(json::array(), ds, cfg, "d.json").empty());
}

TEST_F(DetectionsTest, ScoreOutsideUnitIntervalIsRejected) {
  json d = json::parse(R"([{"image_id": 1, "category_id": 1, "bbox": [0,0,1,1], "score": 1.5}])");
  EXPECT_THROW(parse_detections(d, ds, cfg, "d.json"), ValidationError);
}

TEST_F(DetectionsTest, UnknownImageIsRejected) {
  json d = json::parse(R"([{"image_id": 5, "category_id": 1, "bbox": [0,0,1,1], "score": 0.5}])");
  EXPECT_THROW(parse_detections(d, ds, cfg, "d.json"), ValidationError);
}

TEST_F(DetectionsTest, BoxModeNeedsBoxes) {
  json d = json::parse(R"([{"image_id": 1, "category_id": 1, "score": 0.5}])");
  EXPECT_THROW(parse_detections(d, ds, cfg, "d.json"), ValidationError);
}

TEST_F(DetectionsTest, KeepsTopScoringPerImage) {
  json d = json::array();
  for (int i = 0; i < 150; ++i)
    d.push_back({{"image_id", 1}, {"category_id", 1}, {"bbox", {0, 0, 1, 1}}, {"score", (i % 150) / 150.0}});
  d.push_back({{"image_id", 2}, {"category_id", 1}, {"bbox", {0, 0, 1, 1}}, {"score", 0.0}});
  const DetectionSet out = parse_detections(d, ds, cfg, "d.json");
  ASSERT_EQ(out.size(), 101u);
  double lowest = 1;
  for (const auto& det : out.detections)
    if (det.image_id == 1) lowest = std::min(lowest, det.score);
  EXPECT_DOUBLE_EQ(lowest, 50 / 150.0);
  // File order survives truncation.
  for (std::size_t i = 1; i < out.size(); ++i)
    EXPECT_LT(out.detections[i - 1].ordinal, out.detections[i].ordinal);
}

TEST_F(DetectionsTest, ObjectWrapperIsAccepted) {
  json d = {{"annotations", json::parse(R"([{"image_id": 1, "category_id": 2, "bbox": [0,0,1,1], "score": 0.5}])")}};
  EXPECT_EQ(parse_detections(d, ds, cfg, "d.json").size(), 1u);
}

TEST_F(DetectionsTest, SaveLoadRoundTrip) {
  json d = json::parse(R"([{"image_id": 1, "category_id": 1, "bbox": [1.5,2,3,4], "score": 0.25},
                           {"image_id": 2, "category_id": 2, "bbox": [0,0,1,1], "score": 0.75}])");
  const DetectionSet a = parse_detections(d, ds, cfg, "d.json");
  const std::string path = (testing_support::temp_dir("dets_rt") / "d.json.gz").string();
  save_detections(a, path);
  const DetectionSet b = load_detections(path, ds, cfg);
  ASSERT_EQ(b.size(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(b.detections[i].box, a.detections[i].box);
    EXPECT_EQ(b.detections[i].score, a.detections[i].score);
    EXPECT_EQ(b.detections[i].category_id, a.detections[i].category_id);
  }
}

TEST(EvalConfigTest, RejectsInvertedThresholds) {
  EvalConfig cfg;
  cfg.t_b = 0.6;
  EXPECT_THROW(cfg.validate(), InputError);
  cfg.t_b = 0.1;
  cfg.t_f = 1.2;
  EXPECT_THROW(cfg.validate(), InputError);
}

TEST(ModeNames, AcceptsBenchmarkSpellings) {
  EXPECT_EQ(parse_mode("bbox"), Mode::Box);
  EXPECT_EQ(parse_mode("segm"), Mode::Mask);
  EXPECT_THROW(parse_mode("keypoints"), InputError);
}

}  // namespace
}  // namespace detdiag
