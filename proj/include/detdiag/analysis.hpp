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

// Fine-grained analysis: dAP restricted to errors with a given attribute,
// AP on object subsets, and foreground-threshold sweeps.

#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "detdiag/apcore.hpp"
#include "detdiag/errors.hpp"
#include "detdiag/oracles.hpp"

namespace detdiag {

enum class ScaleBin { XS, S, M, L, XL };

inline constexpr std::array<ScaleBin, 5> kScaleBins = {ScaleBin::XS, ScaleBin::S, ScaleBin::M,
                                                       ScaleBin::L, ScaleBin::XL};

// Lower edges in square pixels; each bin is [lo, next lo).
inline constexpr std::array<double, 5> kScaleBinLower = {0.0, 16.0 * 16, 32.0 * 32, 96.0 * 96,
                                                         288.0 * 288};

inline const char* to_string(ScaleBin b) {
  switch (b) {
    case ScaleBin::XS: return "XS";
    case ScaleBin::S: return "S";
    case ScaleBin::M: return "M";
    case ScaleBin::L: return "L";
    case ScaleBin::XL: return "XL";
  }
  return "?";
}

inline ScaleBin scale_bin(double area) {
  for (std::size_t i = kScaleBinLower.size(); i-- > 1;)
    if (area >= kScaleBinLower[i]) return kScaleBins[i];
  return ScaleBin::XS;
}

// Named filter over error records.
struct AttributePredicate {
  std::string name;
  RecordFilter test;

  bool operator()(const ErrorRecord& r) const { return !test || test(r); }

  static AttributePredicate all() { return {"all", {}}; }
  static AttributePredicate none() {
    return {"none", [](const ErrorRecord&) { return false; }};
  }
  static AttributePredicate scale(ScaleBin bin) {
    return {std::string("scale=") + to_string(bin),
            [bin](const ErrorRecord& r) { return scale_bin(r.area) == bin; }};
  }
  static AttributePredicate area_range(double lo, double hi) {
    return {"area in [" + std::to_string(lo) + ", " + std::to_string(hi) + ")",
            [lo, hi](const ErrorRecord& r) { return r.area >= lo && r.area < hi; }};
  }
  // Category of the associated ground truth, else of the detection.
  static AttributePredicate category(const ErrorAnalysis& a, CategoryId id) {
    const EvalIndex* index = &a.index();
    return {"category=" + std::to_string(id), [index, id](const ErrorRecord& r) {
              if (r.gt) return index->ground_truth().annotations[*r.gt].category_id == id;
              return index->detections().detections[*r.det].category_id == id;
            }};
  }
  // Width / height of the associated object's box.
  static AttributePredicate aspect_range(const ErrorAnalysis& a, double lo, double hi) {
    const EvalIndex* index = &a.index();
    return {"aspect in [" + std::to_string(lo) + ", " + std::to_string(hi) + ")",
            [index, lo, hi](const ErrorRecord& r) {
              Box b = r.gt ? index->ground_truth().annotations[*r.gt].box
                           : index->detections().detections[*r.det].box.value_or(Box{});
              if (b.h <= 0) return false;
              const double ar = b.w / b.h;
              return ar >= lo && ar < hi;
            }};
  }
};

// Applies the oracle only to records satisfying the predicate and measures
// the change from vanilla AP. Matching no records yields 0.
inline double attribute_delta_ap(const ErrorAnalysis& a, Oracle o, const AttributePredicate& p) {
  return a.delta_ap(o, p.test ? p.test : RecordFilter{});
}

struct ScaleTable {
  std::vector<ErrorKind> kinds;
  // [kind][bin]
  std::vector<std::array<double, 5>> delta;
  // Record counts per [kind][bin].
  std::vector<std::array<std::size_t, 5>> counts;

  bool operator==(const ScaleTable&) const = default;
};

inline ScaleTable scale_report(const ErrorAnalysis& a,
                               std::vector<ErrorKind> kinds = {ErrorKind::Cls, ErrorKind::Loc}) {
  ScaleTable t;
  t.kinds = std::move(kinds);
  t.delta.assign(t.kinds.size(), {});
  t.counts.assign(t.kinds.size(), {});
  for (std::size_t k = 0; k < t.kinds.size(); ++k)
    for (const auto& r : a.ledger().records)
      if (r.kind == t.kinds[k]) ++t.counts[k][static_cast<std::size_t>(scale_bin(r.area))];
  const std::size_t cells = t.kinds.size() * kScaleBins.size();
  std::vector<double> out(cells);
  parallel_for(cells, a.config().threads, [&](std::size_t i) {
    const std::size_t k = i / kScaleBins.size(), b = i % kScaleBins.size();
    out[i] = t.counts[k][b] == 0 && t.kinds[k] != ErrorKind::FalsePositive &&
                     t.kinds[k] != ErrorKind::FalseNegative
                 ? 0.0
                 : attribute_delta_ap(a, oracle_for(t.kinds[k]), AttributePredicate::scale(kScaleBins[b]));
  });
  for (std::size_t i = 0; i < cells; ++i)
    t.delta[i / kScaleBins.size()][i % kScaleBins.size()] = out[i];
  return t;
}

// What an object predicate sees for a ground truth or a detection.
struct ObjectView {
  bool is_ground_truth = false;
  ImageId image_id = 0;
  CategoryId category_id = 0;
  double area = 0;
  Box box;
};

using ObjectPredicate = std::function<bool(const ObjectView&)>;

// Plain evaluate() on the objects the predicate keeps. Not normalized, so
// subsets of different sizes are not directly comparable.
inline EvalResult subset_ap(const Dataset& gt, const DetectionSet& dets, const ObjectPredicate& keep,
                            const EvalConfig& cfg) {
  cfg.validate();
  Dataset sub_gt;
  sub_gt.name = gt.name;
  sub_gt.categories = gt.categories;
  sub_gt.images = gt.images;
  for (const auto& g : gt.annotations) {
    ObjectView v{true, g.image_id, g.category_id, g.area, g.box};
    if (keep(v)) sub_gt.annotations.push_back(g);
  }
  DetectionSet sub_dets;
  sub_dets.name = dets.name;
  for (const auto& d : dets.detections) {
    ObjectView v{false, d.image_id, d.category_id, detection_area(d, cfg.mode), d.box.value_or(Box{})};
    if (keep(v)) sub_dets.detections.push_back(d);
  }
  return evaluate(sub_gt, sub_dets, cfg);
}

struct SweepRow {
  double t_f = 0;
  double ap = 0;
  std::array<double, 6> main{};
  std::array<double, 2> special{};

  bool operator==(const SweepRow&) const = default;
};

// Full reclassification and dAP at each foreground threshold.
inline std::vector<SweepRow> threshold_sweep(const Dataset& gt, const DetectionSet& dets,
                                             const EvalConfig& cfg, const std::vector<double>& thresholds) {
  for (double t : thresholds)
    if (!(t > cfg.t_b && t <= 1))
      throw InputError("sweep threshold " + std::to_string(t) + " must lie in (t_b, 1]");
  std::vector<SweepRow> rows;
  for (double t : thresholds) {
    EvalConfig c = cfg;
    c.t_f = t;
    const ErrorAnalysis a(gt, dets, c);
    const DeltaReport d = a.delta_report();
    rows.push_back({t, d.vanilla_ap, d.main, d.special});
  }
  return rows;
}

}  // namespace detdiag
