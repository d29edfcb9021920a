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

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "detdiag/error.hpp"
#include "detdiag/geometry.hpp"

namespace detdiag {

using ImageId = std::int64_t;
using CategoryId = std::int64_t;
using AnnotationId = std::int64_t;

enum class Mode { Box, Mask };

inline const char* to_string(Mode m) { return m == Mode::Box ? "box" : "mask"; }

inline Mode parse_mode(const std::string& s) {
  if (s == "box" || s == "bbox") return Mode::Box;
  if (s == "mask" || s == "segm") return Mode::Mask;
  throw InputError("unknown mode '" + s + "' (expected box or mask)");
}

struct Category {
  CategoryId id = 0;
  std::string name;
};

struct ImageMeta {
  ImageId id = 0;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::string file_name;
  // Categories that are not exhaustively annotated in this image. Unmatched
  // detections of these categories are ignored rather than counted as FP.
  std::vector<CategoryId> ignored_categories;
  // Categories verified absent. Ingested and round-tripped, never used for
  // matching.
  std::vector<CategoryId> negative_categories;
};

struct GroundTruth {
  AnnotationId id = 0;
  ImageId image_id = 0;
  CategoryId category_id = 0;
  Box box;
  std::optional<RleMask> mask;
  // Polygon segmentation, carried through untouched. Mask mode requires RLE.
  std::vector<std::vector<double>> polygons;
  bool is_crowd = false;
  // Pixel area: mask pixel count when a mask is present, else box area.
  double area = 0;
  // The `area` value written in the source file, echoed on re-serialization.
  std::optional<double> declared_area;
  bool degenerate = false;
};

struct Detection {
  ImageId image_id = 0;
  CategoryId category_id = 0;
  double score = 0;
  std::optional<Box> box;
  std::optional<RleMask> mask;
  // Position in the source file; breaks score ties deterministically.
  std::int64_t ordinal = 0;
};

struct Dataset {
  std::string name;
  std::vector<Category> categories;
  std::vector<ImageMeta> images;
  std::vector<GroundTruth> annotations;
  // Non-fatal findings, e.g. instances extending past image bounds.
  std::vector<std::string> warnings;

  const ImageMeta* find_image(ImageId id) const {
    for (const auto& im : images)
      if (im.id == id) return &im;
    return nullptr;
  }
};

struct DetectionSet {
  std::string name;
  // Ordered by ordinal.
  std::vector<Detection> detections;

  std::size_t size() const { return detections.size(); }
  bool empty() const { return detections.empty(); }
};

enum class MissedOracle { RemoveGt, ScoreOne, ScoreNegInf, ScoreMean, ScoreSampled };

inline const char* to_string(MissedOracle m) {
  switch (m) {
    case MissedOracle::RemoveGt: return "remove_gt";
    case MissedOracle::ScoreOne: return "score_one";
    case MissedOracle::ScoreNegInf: return "score_neg_inf";
    case MissedOracle::ScoreMean: return "score_mean";
    case MissedOracle::ScoreSampled: return "score_sampled";
  }
  return "remove_gt";
}

inline MissedOracle parse_missed_oracle(const std::string& s) {
  for (auto m : {MissedOracle::RemoveGt, MissedOracle::ScoreOne,
                 MissedOracle::ScoreNegInf, MissedOracle::ScoreMean,
                 MissedOracle::ScoreSampled})
    if (s == to_string(m)) return m;
  throw InputError("unknown missed-GT oracle '" + s + "'");
}

inline std::vector<double> default_iou_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back(0.5 + 0.05 * i);
  return t;
}

struct EvalConfig {
  double t_f = 0.5;
  double t_b = 0.1;
  std::vector<double> iou_thresholds = default_iou_thresholds();
  std::size_t max_dets_per_image = 100;
  Mode mode = Mode::Box;
  MissedOracle missed_oracle = MissedOracle::RemoveGt;
  bool use_ignored_for_errors = false;
  std::uint64_t rng_seed = 0;
  // Worker threads; 0 means hardware concurrency. Never affects results.
  unsigned threads = 0;

  void validate() const {
    if (!(t_b > 0 && t_b < t_f && t_f <= 1)) {
      throw InputError("thresholds must satisfy 0 < t_b < t_f <= 1 (got t_f=" +
                       std::to_string(t_f) + ", t_b=" + std::to_string(t_b) + ")");
    }
    if (iou_thresholds.empty()) throw InputError("empty IoU threshold list");
    for (double t : iou_thresholds)
      if (!(t > 0 && t <= 1))
        throw InputError("IoU threshold out of (0,1]: " + std::to_string(t));
    if (max_dets_per_image == 0) throw InputError("max_dets_per_image must be > 0");
  }

  bool operator==(const EvalConfig&) const = default;
};

// Area used for scale binning and reporting.
inline double detection_area(const Detection& d, Mode mode) {
  if (mode == Mode::Mask && d.mask) return static_cast<double>(rle_area(*d.mask));
  if (d.box) return d.box->area();
  if (d.mask) return static_cast<double>(rle_area(*d.mask));
  return 0;
}

// IoU between a detection and a ground truth in the given mode. Crowd
// regions use intersection over detection area.
inline double overlap(const Detection& d, const GroundTruth& g, Mode mode) {
  if (mode == Mode::Mask) {
    return g.is_crowd ? mask_iou_crowd(*d.mask, *g.mask) : mask_iou(*d.mask, *g.mask);
  }
  return g.is_crowd ? box_iou_crowd(*d.box, g.box) : box_iou(*d.box, g.box);
}

// Plain IoU regardless of crowd flag.
inline double plain_overlap(const Detection& d, const GroundTruth& g, Mode mode) {
  return mode == Mode::Mask ? mask_iou(*d.mask, *g.mask) : box_iou(*d.box, g.box);
}

// Rejects inputs whose geometry does not support the requested mode.
inline void require_mode_geometry(const Dataset& gt, const DetectionSet& dets,
                                  Mode mode) {
  std::vector<std::string> bad;
  if (mode == Mode::Mask) {
    for (const auto& g : gt.annotations)
      if (!g.mask) bad.push_back("annotation " + std::to_string(g.id));
    if (!bad.empty())
      throw ValidationError(
          "mask mode needs RLE segmentations on every annotation; convert "
          "polygons to RLE first",
          bad);
  }
  for (const auto& d : dets.detections) {
    if ((mode == Mode::Mask && !d.mask) || (mode == Mode::Box && !d.box))
      bad.push_back("detection #" + std::to_string(d.ordinal));
  }
  if (!bad.empty())
    throw ValidationError(std::string("detections lack ") +
                              (mode == Mode::Mask ? "segmentation" : "bbox") +
                              " required by " + to_string(mode) + " mode",
                          bad);
}

}  // namespace detdiag
