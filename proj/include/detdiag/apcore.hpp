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

// Matching, precision-recall construction and AP / mAP.

#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "detdiag/dataset.hpp"
#include "detdiag/error.hpp"
#include "detdiag/parallel.hpp"

namespace detdiag {

inline constexpr int kRecallPoints = 101;

// Lookup structure shared by matching and error classification. Holds
// pointers into the dataset and detections, which must outlive it.
class EvalIndex {
 public:
  // Detections and ground truths of one category in one image.
  struct Cell {
    std::size_t image = 0;
    std::size_t category = 0;
    std::vector<std::size_t> gts;     // non-crowd, ascending annotation id
    std::vector<std::size_t> crowds;
    std::vector<std::size_t> dets;    // score desc, ordinal asc
    bool non_exhaustive = false;
  };

  EvalIndex(const Dataset& gt, const DetectionSet& dets, Mode mode)
      : gt_(&gt), dets_(&dets), mode_(mode) {
    require_mode_geometry(gt, dets, mode);
    for (const auto& c : gt.categories) {
      category_slot_.emplace(c.id, categories_.size());
      categories_.push_back(c.id);
    }
    n_gt_.assign(categories_.size(), 0);
    for (std::size_t i = 0; i < gt.images.size(); ++i) image_slot_.emplace(gt.images[i].id, i);
    image_gts_.resize(gt.images.size());

    std::unordered_map<std::uint64_t, std::size_t> cell_of;
    auto cell = [&](std::size_t img, std::size_t cat) -> Cell& {
      const std::uint64_t key = static_cast<std::uint64_t>(img) * categories_.size() + cat;
      auto [it, fresh] = cell_of.emplace(key, cells_.size());
      if (fresh) {
        Cell c;
        c.image = img;
        c.category = cat;
        const auto& ign = gt.images[img].ignored_categories;
        c.non_exhaustive =
            std::find(ign.begin(), ign.end(), categories_[cat]) != ign.end();
        cells_.push_back(std::move(c));
      }
      return cells_[it->second];
    };

    auto slot_of = [](const auto& map, std::int64_t id, const char* what, const char* owner,
                      std::size_t index) {
      auto it = map.find(id);
      if (it == map.end())
        throw ValidationError(std::string("unknown ") + what + " id",
                              {std::string(owner) + "[" + std::to_string(index) + "] refers to " +
                               what + " " + std::to_string(id)});
      return it->second;
    };
    gt_category_.resize(gt.annotations.size());
    for (std::size_t i = 0; i < gt.annotations.size(); ++i) {
      const auto& g = gt.annotations[i];
      const std::size_t img = slot_of(image_slot_, g.image_id, "image", "annotation", i);
      const std::size_t cat = slot_of(category_slot_, g.category_id, "category", "annotation", i);
      gt_category_[i] = cat;
      Cell& c = cell(img, cat);
      if (g.is_crowd) {
        c.crowds.push_back(i);
      } else {
        c.gts.push_back(i);
        image_gts_[img].push_back(i);
        ++n_gt_[cat];
      }
    }
    det_category_.resize(dets.size());
    det_image_.resize(dets.size());
    for (std::size_t i = 0; i < dets.size(); ++i) {
      const auto& d = dets.detections[i];
      const std::size_t img = slot_of(image_slot_, d.image_id, "image", "detection", i);
      const std::size_t cat = slot_of(category_slot_, d.category_id, "category", "detection", i);
      det_category_[i] = cat;
      det_image_[i] = img;
      cell(img, cat).dets.push_back(i);
    }
    for (auto& c : cells_) {
      std::sort(c.gts.begin(), c.gts.end(), [&](std::size_t a, std::size_t b) {
        return gt.annotations[a].id < gt.annotations[b].id;
      });
      std::sort(c.dets.begin(), c.dets.end(), [&](std::size_t a, std::size_t b) {
        return ranks_before(a, b);
      });
    }
    for (auto& v : image_gts_)
      std::sort(v.begin(), v.end(), [&](std::size_t a, std::size_t b) {
        return gt.annotations[a].id < gt.annotations[b].id;
      });
  }

  const Dataset& ground_truth() const { return *gt_; }
  const DetectionSet& detections() const { return *dets_; }
  Mode mode() const { return mode_; }

  const std::vector<CategoryId>& categories() const { return categories_; }
  std::size_t category_slot(CategoryId id) const { return category_slot_.at(id); }
  std::size_t image_slot(ImageId id) const { return image_slot_.at(id); }
  std::int64_t n_gt(std::size_t cat) const { return n_gt_[cat]; }
  const std::vector<std::int64_t>& n_gt() const { return n_gt_; }
  bool evaluable(std::size_t cat) const { return n_gt_[cat] > 0; }
  std::size_t det_category(std::size_t det) const { return det_category_[det]; }
  std::size_t det_image(std::size_t det) const { return det_image_[det]; }
  std::size_t gt_category(std::size_t gt) const { return gt_category_[gt]; }
  const std::vector<Cell>& cells() const { return cells_; }
  // Non-crowd ground truths of one image, ascending id.
  const std::vector<std::size_t>& image_gts(std::size_t img) const { return image_gts_[img]; }

  // (score desc, ordinal asc).
  bool ranks_before(std::size_t a, std::size_t b) const {
    const auto& da = dets_->detections[a];
    const auto& db = dets_->detections[b];
    if (da.score != db.score) return da.score > db.score;
    return da.ordinal < db.ordinal;
  }

 private:
  const Dataset* gt_;
  const DetectionSet* dets_;
  Mode mode_;
  std::vector<CategoryId> categories_;
  std::unordered_map<CategoryId, std::size_t> category_slot_;
  std::unordered_map<ImageId, std::size_t> image_slot_;
  std::vector<std::int64_t> n_gt_;
  std::vector<Cell> cells_;
  std::vector<std::vector<std::size_t>> image_gts_;
  std::vector<std::size_t> det_category_, det_image_, gt_category_;
};

// Outcome of matching at one IoU threshold. Indices refer to positions in
// DetectionSet::detections and Dataset::annotations.
struct MatchTable {
  double threshold = 0.5;
  std::vector<std::optional<std::size_t>> det_gt;
  std::vector<std::uint8_t> det_ignored;
  std::vector<std::optional<std::size_t>> gt_det;

  bool is_tp(std::size_t det) const { return det_gt[det].has_value(); }
  bool is_fp(std::size_t det) const { return !det_gt[det] && !det_ignored[det]; }
};

// Greedy one-to-one matching per image in score order. Each detection takes
// the free same-category ground truth with the highest IoU >= threshold (ties
// to the lowest annotation id). Unmatched detections covering a same-category
// crowd region, or of a non-exhaustively annotated category, are ignored.
inline MatchTable match(const EvalIndex& index, double threshold,
                        std::optional<CategoryId> only = std::nullopt,
                        unsigned threads = 1) {
  const auto& gt = index.ground_truth();
  const auto& dets = index.detections();
  MatchTable t;
  t.threshold = threshold;
  t.det_gt.assign(dets.size(), std::nullopt);
  t.det_ignored.assign(dets.size(), 0);
  t.gt_det.assign(gt.annotations.size(), std::nullopt);
  const std::optional<std::size_t> only_slot =
      only ? std::optional<std::size_t>(index.category_slot(*only)) : std::nullopt;
  const auto& cells = index.cells();

  parallel_for(cells.size(), threads, [&](std::size_t ci) {
    const auto& cell = cells[ci];
    if (only_slot && cell.category != *only_slot) return;
    for (std::size_t d : cell.dets) {
      const Detection& det = dets.detections[d];
      std::optional<std::size_t> best;
      double best_iou = -1;
      for (std::size_t g : cell.gts) {
        if (t.gt_det[g]) continue;
        const double iou = plain_overlap(det, gt.annotations[g], index.mode());
        if (iou >= threshold && iou > best_iou) {
          best = g;
          best_iou = iou;
        }
      }
      if (best) {
        t.det_gt[d] = best;
        t.gt_det[*best] = d;
        continue;
      }
      bool ignore = cell.non_exhaustive;
      for (std::size_t g = 0; !ignore && g < cell.crowds.size(); ++g)
        ignore = overlap(det, gt.annotations[cell.crowds[g]], index.mode()) >= threshold;
      t.det_ignored[d] = ignore ? 1 : 0;
    }
  });
  return t;
}

// One entry in a category's ranked list. `tier` orders before score: 0 ranks
// ahead of every real detection, 1 is a real detection, 2 ranks after all.
struct RankedOutcome {
  double score = 0;
  int tier = 1;
  std::int64_t ordinal = 0;
  bool tp = false;
};

inline bool ranks_before(const RankedOutcome& a, const RankedOutcome& b) {
  if (a.tier != b.tier) return a.tier < b.tier;
  if (a.score != b.score) return a.score > b.score;
  return a.ordinal < b.ordinal;
}

struct PRCurve {
  std::vector<double> scores;
  std::vector<std::int64_t> tp_cum;
  std::vector<std::int64_t> fp_cum;
  std::vector<double> precision;  // raw
  std::vector<double> recall;
  std::int64_t n_gt = 0;
  // Monotone precision envelope sampled at recall i/100, i = 0..100.
  std::vector<double> interpolated;
};

inline double recall_point(int i) { return i / 100.0; }

// Cumulative precision/recall over the ranked list, then the non-increasing
// precision envelope sampled on the 101-point recall grid. Undefined for
// n_gt <= 0.
inline PRCurve pr_curve(std::vector<RankedOutcome> outcomes, std::int64_t n_gt) {
  if (n_gt <= 0) throw InputError("precision-recall curve undefined without ground truth");
  std::sort(outcomes.begin(), outcomes.end(),
            [](const RankedOutcome& a, const RankedOutcome& b) { return ranks_before(a, b); });
  PRCurve c;
  c.n_gt = n_gt;
  const std::size_t n = outcomes.size();
  c.scores.reserve(n);
  c.tp_cum.reserve(n);
  c.fp_cum.reserve(n);
  c.precision.reserve(n);
  c.recall.reserve(n);
  std::int64_t tp = 0, fp = 0;
  for (const auto& o : outcomes) {
    (o.tp ? tp : fp) += 1;
    c.scores.push_back(o.score);
    c.tp_cum.push_back(tp);
    c.fp_cum.push_back(fp);
    c.precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
    c.recall.push_back(static_cast<double>(tp) / static_cast<double>(n_gt));
  }
  std::vector<double> envelope = c.precision;
  for (std::size_t i = n; i-- > 1;)
    envelope[i - 1] = std::max(envelope[i - 1], envelope[i]);
  c.interpolated.assign(kRecallPoints, 0.0);
  for (int i = 0; i < kRecallPoints; ++i) {
    const double r = recall_point(i);
    const auto it = std::lower_bound(c.recall.begin(), c.recall.end(), r);
    if (it != c.recall.end()) c.interpolated[i] = envelope[it - c.recall.begin()];
  }
  return c;
}

// Mean interpolated precision over the recall grid, x100.
inline double average_precision(const PRCurve& c) {
  double sum = 0;
  for (double p : c.interpolated) sum += p;
  return sum / kRecallPoints * 100.0;
}

// AP of one ranked list. A category whose effective ground-truth count has
// been driven to zero scores 100 when no false positives remain, else 0.
inline double category_ap(const std::vector<RankedOutcome>& outcomes, std::int64_t n_gt) {
  if (n_gt <= 0) return outcomes.empty() ? 100.0 : 0.0;
  return average_precision(pr_curve(outcomes, n_gt));
}

// Non-ignored detections grouped by category slot.
inline std::vector<std::vector<RankedOutcome>> ranked_outcomes(const EvalIndex& index,
                                                               const MatchTable& t) {
  std::vector<std::vector<RankedOutcome>> out(index.categories().size());
  const auto& dets = index.detections().detections;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (t.det_ignored[i]) continue;
    out[index.det_category(i)].push_back({dets[i].score, 1, dets[i].ordinal, t.is_tp(i)});
  }
  return out;
}

// Unweighted mean over categories that have ground truth.
inline double mean_ap(const EvalIndex& index, const std::vector<std::vector<RankedOutcome>>& outcomes,
                      const std::vector<std::int64_t>& n_gt) {
  double sum = 0;
  std::size_t count = 0;
  for (std::size_t c = 0; c < outcomes.size(); ++c) {
    if (!index.evaluable(c)) continue;
    sum += category_ap(outcomes[c], n_gt[c]);
    ++count;
  }
  if (count == 0) throw InputError("no evaluable categories (no category has ground truth)");
  return sum / static_cast<double>(count);
}

struct EvalResult {
  std::vector<double> thresholds;
  std::vector<CategoryId> categories;   // evaluable only
  std::vector<std::vector<double>> ap;  // [threshold][category]
  std::vector<double> map;              // per threshold
  double map_mean = 0;                  // over thresholds
};

inline EvalResult evaluate(const EvalIndex& index, const std::vector<double>& thresholds,
                           unsigned threads = 1) {
  EvalResult r;
  r.thresholds = thresholds;
  std::vector<std::size_t> slots;
  for (std::size_t c = 0; c < index.categories().size(); ++c) {
    if (index.evaluable(c)) {
      slots.push_back(c);
      r.categories.push_back(index.categories()[c]);
    }
  }
  if (slots.empty()) throw InputError("no evaluable categories (no category has ground truth)");
  r.ap.assign(thresholds.size(), {});
  r.map.assign(thresholds.size(), 0);
  for (std::size_t ti = 0; ti < thresholds.size(); ++ti) {
    const MatchTable t = match(index, thresholds[ti], std::nullopt, threads);
    const auto outcomes = ranked_outcomes(index, t);
    r.ap[ti].resize(slots.size());
    parallel_for(slots.size(), threads, [&](std::size_t k) {
      r.ap[ti][k] = category_ap(outcomes[slots[k]], index.n_gt(slots[k]));
    });
    double sum = 0;
    for (double v : r.ap[ti]) sum += v;
    r.map[ti] = sum / static_cast<double>(slots.size());
  }
  double sum = 0;
  for (double v : r.map) sum += v;
  r.map_mean = sum / static_cast<double>(r.map.size());
  return r;
}

inline EvalResult evaluate(const Dataset& gt, const DetectionSet& dets, const EvalConfig& cfg) {
  cfg.validate();
  const EvalIndex index(gt, dets, cfg.mode);
  return evaluate(index, cfg.iou_thresholds, cfg.threads);
}

}  // namespace detdiag
