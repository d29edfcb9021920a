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

// Fixture builders and deliberately naive reference implementations. The
// references share no code with the library: pixel grids instead of runs,
// quadratic scans instead of indexes, a direct max-over-suffix for AP.

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "detdiag/dataset.hpp"

namespace testing_support {

using detdiag::Box;
using detdiag::CategoryId;
using detdiag::Dataset;
using detdiag::Detection;
using detdiag::DetectionSet;
using detdiag::GroundTruth;
using detdiag::ImageId;

class Builder {
 public:
  explicit Builder(int categories = 1, int images = 1, std::uint32_t side = 1000) {
    for (int c = 1; c <= categories; ++c)
      gt_.categories.push_back({c, "c" + std::to_string(c)});
    for (int i = 1; i <= images; ++i) gt_.images.push_back({i, side, side, "im" + std::to_string(i), {}, {}});
    gt_.name = "fixture";
    dets_.name = "model";
  }

  Builder& gt(ImageId img, CategoryId cat, Box b, bool crowd = false) {
    GroundTruth g;
    g.id = static_cast<detdiag::AnnotationId>(gt_.annotations.size() + 1);
    g.image_id = img;
    g.category_id = cat;
    g.box = b;
    g.is_crowd = crowd;
    g.area = b.area();
    gt_.annotations.push_back(g);
    return *this;
  }

  Builder& det(ImageId img, CategoryId cat, Box b, double score) {
    Detection d;
    d.image_id = img;
    d.category_id = cat;
    d.box = b;
    d.score = score;
    d.ordinal = static_cast<std::int64_t>(dets_.detections.size());
    dets_.detections.push_back(d);
    return *this;
  }

  Builder& not_exhaustive(ImageId img, CategoryId cat) {
    gt_.images[static_cast<std::size_t>(img - 1)].ignored_categories.push_back(cat);
    return *this;
  }

  Dataset& ground_truth() { return gt_; }
  DetectionSet& detections() { return dets_; }

 private:
  Dataset gt_;
  DetectionSet dets_;
};

// Column-major pixel decoding, one byte per pixel.
inline std::vector<std::uint8_t> decode_pixels(const std::vector<std::uint32_t>& counts, std::size_t n) {
  std::vector<std::uint8_t> px;
  std::uint8_t v = 0;
  for (std::uint32_t c : counts) {
    for (std::uint32_t i = 0; i < c; ++i) px.push_back(v);
    v ^= 1;
  }
  px.resize(n, 0);
  return px;
}

inline double pixel_iou(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += a[i] && b[i];
    uni += a[i] || b[i];
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// Naive box IoU straight from the corner coordinates.
inline double ref_box_iou(const Box& a, const Box& b) {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  const double uni = a.w * a.h + b.w * b.h - inter;
  return uni <= 0 ? 0.0 : inter / uni;
}

// 101-point interpolated AP x100 from a ranked TP/FP list: precision at each
// recall point is the best precision reached at that recall or higher.
inline double ref_ap(const std::vector<bool>& ranked_tp, long n_gt) {
  std::vector<double> prec, rec;
  long tp = 0, fp = 0;
  for (bool t : ranked_tp) {
    t ? ++tp : ++fp;
    prec.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
    rec.push_back(static_cast<double>(tp) / static_cast<double>(n_gt));
  }
  double sum = 0;
  for (int i = 0; i <= 100; ++i) {
    const double r = i / 100.0;
    double best = 0;
    for (std::size_t k = 0; k < prec.size(); ++k)
      if (rec[k] >= r) best = std::max(best, prec[k]);
    sum += best;
  }
  return sum / 101.0 * 100.0;
}

// Reference box-mode evaluation of one category at one threshold: quadratic
// greedy matching, no crowds, every image exhaustive.
inline double ref_category_ap(const Dataset& gt, const DetectionSet& dets, CategoryId cat, double thr) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < dets.detections.size(); ++i)
    if (dets.detections[i].category_id == cat) order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets.detections[a].score > dets.detections[b].score;
  });
  std::vector<bool> taken(gt.annotations.size(), false);
  std::vector<bool> ranked;
  long n_gt = 0;
  for (const auto& g : gt.annotations) n_gt += g.category_id == cat;
  for (std::size_t d : order) {
    const Detection& det = dets.detections[d];
    double best = thr;
    long pick = -1;
    for (std::size_t g = 0; g < gt.annotations.size(); ++g) {
      const auto& a = gt.annotations[g];
      if (a.category_id != cat || a.image_id != det.image_id || taken[g]) continue;
      const double iou = ref_box_iou(*det.box, a.box);
      if (iou >= best && (pick < 0 || iou > best)) {
        best = iou;
        pick = static_cast<long>(g);
      }
    }
    if (pick >= 0) taken[static_cast<std::size_t>(pick)] = true;
    ranked.push_back(pick >= 0);
  }
  if (n_gt == 0) return ranked.empty() ? 100.0 : 0.0;
  return ref_ap(ranked, n_gt);
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("detdiag_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testing_support
