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

// Assigns every false positive and false negative exactly one error type.

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "detdiag/apcore.hpp"
#include "detdiag/dataset.hpp"

namespace detdiag {

enum class ErrorKind { Cls, Loc, Both, Dupe, Bkg, Missed, FalsePositive, FalseNegative };

inline constexpr std::array<ErrorKind, 6> kMainKinds = {
    ErrorKind::Cls, ErrorKind::Loc, ErrorKind::Both,
    ErrorKind::Dupe, ErrorKind::Bkg, ErrorKind::Missed};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::Cls: return "cls";
    case ErrorKind::Loc: return "loc";
    case ErrorKind::Both: return "both";
    case ErrorKind::Dupe: return "dupe";
    case ErrorKind::Bkg: return "bkg";
    case ErrorKind::Missed: return "miss";
    case ErrorKind::FalsePositive: return "fp";
    case ErrorKind::FalseNegative: return "fn";
  }
  return "?";
}

inline ErrorKind parse_error_kind(const std::string& s) {
  for (auto k : {ErrorKind::Cls, ErrorKind::Loc, ErrorKind::Both, ErrorKind::Dupe,
                 ErrorKind::Bkg, ErrorKind::Missed, ErrorKind::FalsePositive,
                 ErrorKind::FalseNegative})
    if (s == to_string(k)) return k;
  if (s == "missed") return ErrorKind::Missed;
  throw InputError("unknown error type '" + s + "' (expected cls, loc, both, dupe, bkg, miss, fp, fn)");
}

inline std::size_t main_slot(ErrorKind k) { return static_cast<std::size_t>(k); }

struct ErrorRecord {
  ErrorKind kind = ErrorKind::Bkg;
  std::optional<std::size_t> det;  // absent for Missed
  std::optional<std::size_t> gt;   // IoU_max target; absent for Bkg
  double iou_same = 0;             // best IoU with same-category ground truth
  double iou_other = 0;            // best IoU with other-category ground truth
  double score = 0;
  // Area of the associated object: the ground truth when there is one, else
  // the detection.
  double area = 0;
  // The detection was excluded from AP (non-exhaustive category).
  bool from_ignored = false;
};

struct ErrorLedger {
  double t_f = 0.5;
  double t_b = 0.1;
  std::vector<ErrorRecord> records;
  // Per annotation: unmatched and targeted by at least one Cls or Loc record.
  std::vector<std::uint8_t> gt_covered;

  std::array<std::size_t, 6> counts() const {
    std::array<std::size_t, 6> c{};
    for (const auto& r : records) ++c[main_slot(r.kind)];
    return c;
  }
  std::size_t count(ErrorKind k) const { return counts()[main_slot(k)]; }
};

namespace detail {

struct BestOverlap {
  double iou = 0;
  std::optional<std::size_t> gt;
};

}  // namespace detail

// Returns human-readable invariant violations; empty when the ledger
// partitions the unmatched detections and ground truths exactly.
inline std::vector<std::string> verify_ledger(const EvalIndex& index, const MatchTable& table,
                                              const ErrorLedger& ledger) {
  std::vector<std::string> bad;
  const auto& dets = index.detections().detections;
  const auto& anns = index.ground_truth().annotations;
  std::vector<int> det_seen(dets.size(), 0);
  std::vector<int> missed(anns.size(), 0);
  for (const auto& r : ledger.records) {
    if (r.kind == ErrorKind::Missed) {
      if (!r.gt) bad.push_back("missed record without ground truth");
      else ++missed[*r.gt];
      continue;
    }
    if (!r.det) {
      bad.push_back(std::string(to_string(r.kind)) + " record without detection");
      continue;
    }
    ++det_seen[*r.det];
    if (table.is_tp(*r.det)) bad.push_back("record for matched detection #" + std::to_string(dets[*r.det].ordinal));
  }
  for (std::size_t i = 0; i < dets.size(); ++i) {
    const bool expected = table.is_fp(i);
    if (expected && det_seen[i] != 1)
      bad.push_back("detection #" + std::to_string(dets[i].ordinal) + " has " +
                    std::to_string(det_seen[i]) + " error records");
    if (!expected && table.det_ignored[i] && det_seen[i] > 1)
      bad.push_back("ignored detection #" + std::to_string(dets[i].ordinal) + " recorded twice");
  }
  std::vector<std::int64_t> fn(index.categories().size(), 0), tp(index.categories().size(), 0);
  for (std::size_t g = 0; g < anns.size(); ++g) {
    if (anns[g].is_crowd) {
      if (missed[g] || ledger.gt_covered[g]) bad.push_back("crowd annotation " + std::to_string(anns[g].id) + " counted as FN");
      continue;
    }
    const std::size_t cat = index.gt_category(g);
    if (table.gt_det[g]) {
      ++tp[cat];
      if (missed[g] || ledger.gt_covered[g])
        bad.push_back("matched annotation " + std::to_string(anns[g].id) + " counted as FN");
      continue;
    }
    if (missed[g] + (ledger.gt_covered[g] ? 1 : 0) != 1)
      bad.push_back("unmatched annotation " + std::to_string(anns[g].id) + " accounted " +
                    std::to_string(missed[g] + (ledger.gt_covered[g] ? 1 : 0)) + " times");
    ++fn[cat];
  }
  for (std::size_t c = 0; c < fn.size(); ++c)
    if (fn[c] != index.n_gt(c) - tp[c])
      bad.push_back("FN accounting mismatch in category " + std::to_string(index.categories()[c]));
  return bad;
}

// Classifies every unmatched, non-ignored detection and every unmatched
// ground truth at the table's threshold (t_f). Decision order for a
// detection: Loc if t_b <= iou_same < t_f, else Cls if iou_other >= t_f, else
// Dupe if iou_same >= t_f, else Both if t_b <= iou_other < t_f, else Bkg.
// Crowd annotations are never targets. When use_ignored_for_errors is set,
// detections ignored for a non-exhaustive category can still be Cls errors.
inline ErrorLedger classify_errors(const EvalIndex& index, const MatchTable& table,
                                   const EvalConfig& cfg) {
  const auto& dets = index.detections().detections;
  const auto& gt = index.ground_truth();
  const auto& anns = gt.annotations;
  const double t_f = table.threshold;
  const double t_b = cfg.t_b;
  ErrorLedger ledger;
  ledger.t_f = t_f;
  ledger.t_b = t_b;
  ledger.gt_covered.assign(anns.size(), 0);

  for (std::size_t d = 0; d < dets.size(); ++d) {
    if (table.is_tp(d)) continue;
    bool from_ignored = false;
    if (table.det_ignored[d]) {
      if (!cfg.use_ignored_for_errors) continue;
      const auto& ign = gt.images[index.det_image(d)].ignored_categories;
      if (std::find(ign.begin(), ign.end(), dets[d].category_id) == ign.end()) continue;
      from_ignored = true;
    }
    const std::size_t cat = index.det_category(d);
    detail::BestOverlap same, other;
    for (std::size_t g : index.image_gts(index.det_image(d))) {
      const double iou = plain_overlap(dets[d], anns[g], index.mode());
      auto& best = index.gt_category(g) == cat ? same : other;
      if (iou > best.iou) {
        best.iou = iou;
        best.gt = g;
      }
    }
    ErrorRecord r;
    r.det = d;
    r.score = dets[d].score;
    r.iou_same = same.iou;
    r.iou_other = other.iou;
    r.from_ignored = from_ignored;
    if (same.iou >= t_b && same.iou < t_f) {
      r.kind = ErrorKind::Loc;
      r.gt = same.gt;
    } else if (other.iou >= t_f) {
      r.kind = ErrorKind::Cls;
      r.gt = other.gt;
    } else if (same.iou >= t_f) {
      r.kind = ErrorKind::Dupe;
      r.gt = same.gt;
    } else if (other.iou >= t_b) {
      r.kind = ErrorKind::Both;
      r.gt = other.gt;
    } else {
      r.kind = ErrorKind::Bkg;
    }
    if (from_ignored && r.kind != ErrorKind::Cls) continue;
    r.area = r.gt ? anns[*r.gt].area : detection_area(dets[d], index.mode());
    if ((r.kind == ErrorKind::Cls || r.kind == ErrorKind::Loc) && !table.gt_det[*r.gt])
      ledger.gt_covered[*r.gt] = 1;
    ledger.records.push_back(r);
  }

  for (std::size_t g = 0; g < anns.size(); ++g) {
    if (anns[g].is_crowd || table.gt_det[g] || ledger.gt_covered[g]) continue;
    ErrorRecord r;
    r.kind = ErrorKind::Missed;
    r.gt = g;
    r.area = anns[g].area;
    ledger.records.push_back(r);
  }

  if (auto bad = verify_ledger(index, table, ledger); !bad.empty())
    throw std::logic_error("error ledger invariant violated: " + bad.front());
  return ledger;
}

struct SpecialSets {
  std::vector<std::size_t> false_positives;  // detection indices
  std::vector<std::size_t> false_negatives;  // annotation indices
};

// FP = every record carrying a detection; FN = every unmatched ground truth
// (Missed records plus Cls/Loc coverage targets).
inline SpecialSets split_special(const ErrorLedger& ledger) {
  SpecialSets s;
  for (const auto& r : ledger.records) {
    if (r.det) s.false_positives.push_back(*r.det);
    if (r.kind == ErrorKind::Missed) s.false_negatives.push_back(*r.gt);
  }
  for (std::size_t g = 0; g < ledger.gt_covered.size(); ++g)
    if (ledger.gt_covered[g]) s.false_negatives.push_back(g);
  std::sort(s.false_negatives.begin(), s.false_negatives.end());
  return s;
}

namespace detail {

// Unbiased draw in [0, n) from a generator with a fixed output sequence, so
// results match across standard library implementations.
inline std::uint64_t UniformIndex(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

}  // namespace detail

// The k most confident records of one kind. Missed records have no score, so
// they are drawn as a uniform random sample seeded by `seed`.
inline std::vector<ErrorRecord> top_errors(const ErrorLedger& ledger, ErrorKind kind, std::size_t k,
                                           std::uint64_t seed) {
  std::vector<ErrorRecord> pool;
  for (const auto& r : ledger.records)
    if (r.kind == kind) pool.push_back(r);
  if (kind == ErrorKind::Missed) {
    std::mt19937_64 rng(seed);
    const std::size_t take = std::min(k, pool.size());
    for (std::size_t i = 0; i < take; ++i)
      std::swap(pool[i], pool[i + detail::UniformIndex(rng, pool.size() - i)]);
    pool.resize(take);
    return pool;
  }
  std::stable_sort(pool.begin(), pool.end(),
                   [](const ErrorRecord& a, const ErrorRecord& b) { return a.score > b.score; });
  if (pool.size() > k) pool.resize(k);
  return pool;
}

}  // namespace detdiag
