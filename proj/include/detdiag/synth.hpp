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

// Seeded generator of ground truth and detections with a known error
// composition. Every injected object lives in its own grid cell, so no
// overlap crosses cells and the expected ledger is exact.

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "detdiag/dataset.hpp"
#include "detdiag/error.hpp"
#include "detdiag/errors.hpp"
#include "detdiag/geometry.hpp"
#include "detdiag/io.hpp"

namespace detdiag {

enum class Calibration { Well, Inverted, Uniform };

inline const char* to_string(Calibration c) {
  switch (c) {
    case Calibration::Well: return "well";
    case Calibration::Inverted: return "inverted";
    case Calibration::Uniform: return "uniform";
  }
  return "?";
}

struct ErrorBudget {
  std::size_t true_positives = 0;
  // Indexed like kMainKinds. Dupe and Both detections attach to a true
  // positive, so they need at least one.
  std::array<std::size_t, 6> errors{};
  // Crowd regions, each swallowing one same-class detection.
  std::size_t crowd = 0;
  // Detections of a non-exhaustive category sitting on another class's
  // ground truth: Cls errors with use_ignored_for_errors, else Missed GT.
  std::size_t ignored_cls = 0;
  bool use_ignored = false;
  std::size_t images = 1;
  std::size_t classes = 2;
  double t_f = 0.5;
  double t_b = 0.1;
  Calibration calibration = Calibration::Well;
  Mode mode = Mode::Box;
  std::uint64_t seed = 0;

  std::size_t& operator[](ErrorKind k) { return errors[main_slot(k)]; }
  std::size_t operator[](ErrorKind k) const { return errors[main_slot(k)]; }
};

struct SyntheticSet {
  Dataset ground_truth;
  DetectionSet detections;
  std::array<std::size_t, 6> expected{};  // per main ErrorKind
  std::size_t expected_tp = 0;
  EvalConfig config;  // thresholds and flags the set was built for
};

namespace synth_detail {

inline constexpr std::uint32_t kCell = 256;
inline constexpr std::uint32_t kGrid = 6;
inline constexpr std::uint32_t kImageSide = kCell * kGrid;
inline constexpr std::uint32_t kMargin = 8;
inline constexpr std::uint32_t kMaxSide = 120;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  // [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t index(std::uint64_t n) { return detail::UniformIndex(gen_, n); }
  std::uint32_t between(std::uint32_t lo, std::uint32_t hi) {  // inclusive
    return lo + static_cast<std::uint32_t>(index(hi - lo + 1));
  }

 private:
  std::mt19937_64 gen_;
};

// A box of the same size as `b`, shifted horizontally so that IoU with `b`
// lands in [lo, hi). Returns false when integer rounding cannot hit the
// interval.
inline bool ShiftedBox(const Box& b, double lo, double hi, Rng& rng, Box& out) {
  for (int attempt = 0; attempt < 16; ++attempt) {
    const double r = rng.uniform(lo, std::min(hi, 1.0));
    const double dx = std::round(b.w * (1 - r) / (1 + r));
    Box c = b;
    c.x += dx;
    const double iou = box_iou(b, c);
    if (iou >= lo && (iou < hi || (hi > 1 && iou <= 1))) {
      out = c;
      return true;
    }
  }
  return false;
}

}  // namespace synth_detail

inline void check_feasible(const ErrorBudget& b) {
  auto infeasible = [](const std::string& why) {
    throw InputError("infeasible error budget: " + why);
  };
  if (!(b.t_b > 0 && b.t_b < b.t_f && b.t_f <= 1)) infeasible("need 0 < t_b < t_f <= 1");
  if (b.classes == 0) infeasible("need at least one class");
  if ((b[ErrorKind::Dupe] || b[ErrorKind::Both]) && b.true_positives == 0)
    infeasible("dupe and both errors attach to a true positive, but none requested");
  if ((b[ErrorKind::Cls] || b[ErrorKind::Both]) && b.classes < 2)
    infeasible("cls and both errors need at least two classes");
  const std::size_t cells = b.true_positives + b[ErrorKind::Cls] + b[ErrorKind::Loc] +
                            b[ErrorKind::Bkg] + b[ErrorKind::Missed] + b.crowd + b.ignored_cls;
  const std::size_t capacity = b.images * synth_detail::kGrid * synth_detail::kGrid;
  if (cells > capacity)
    infeasible(std::to_string(cells) + " objects need more than the " + std::to_string(capacity) +
               " grid cells of " + std::to_string(b.images) + " image(s)");
}

inline SyntheticSet generate(const ErrorBudget& budget) {
  using namespace synth_detail;
  check_feasible(budget);
  Rng rng(budget.seed);
  SyntheticSet out;
  out.config.t_f = budget.t_f;
  out.config.t_b = budget.t_b;
  out.config.mode = budget.mode;
  out.config.use_ignored_for_errors = budget.use_ignored;
  out.config.rng_seed = budget.seed;
  out.config.max_dets_per_image = 1000;

  Dataset& ds = out.ground_truth;
  ds.name = "synthetic-" + std::to_string(budget.seed);
  for (std::size_t c = 1; c <= budget.classes; ++c)
    ds.categories.push_back({static_cast<CategoryId>(c), "class" + std::to_string(c)});
  const CategoryId rare = static_cast<CategoryId>(budget.classes + 1);
  if (budget.ignored_cls) ds.categories.push_back({rare, "non-exhaustive"});
  for (std::size_t i = 0; i < budget.images; ++i)
    ds.images.push_back({static_cast<ImageId>(i + 1), kImageSide, kImageSide,
                         "synthetic_" + std::to_string(i + 1) + ".png", {}, {}});

  enum class Slot { Tp, Cls, Loc, Bkg, Missed, Crowd, IgnoredCls };
  std::vector<Slot> slots;
  auto push = [&](Slot s, std::size_t n) { slots.insert(slots.end(), n, s); };
  push(Slot::Tp, budget.true_positives);
  push(Slot::Cls, budget[ErrorKind::Cls]);
  push(Slot::Loc, budget[ErrorKind::Loc]);
  push(Slot::Bkg, budget[ErrorKind::Bkg]);
  push(Slot::Missed, budget[ErrorKind::Missed]);
  push(Slot::Crowd, budget.crowd);
  push(Slot::IgnoredCls, budget.ignored_cls);

  // Random distinct cells across all images.
  const std::size_t per_image = kGrid * kGrid;
  std::vector<std::size_t> cells(budget.images * per_image);
  for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = i;
  for (std::size_t i = 0; i < slots.size(); ++i)
    std::swap(cells[i], cells[i + rng.index(cells.size() - i)]);

  // Dupe / Both attach to random TP cells.
  std::vector<std::size_t> dupes_at(slots.size(), 0), boths_at(slots.size(), 0);
  for (std::size_t k = 0; k < budget[ErrorKind::Dupe]; ++k) ++dupes_at[rng.index(budget.true_positives)];
  for (std::size_t k = 0; k < budget[ErrorKind::Both]; ++k) ++boths_at[rng.index(budget.true_positives)];

  const auto& good = budget.calibration;
  auto score = [&](bool correct) {
    switch (good) {
      case Calibration::Well: return correct ? rng.uniform(0.5, 1.0) : rng.uniform(0.0, 0.5);
      case Calibration::Inverted: return correct ? rng.uniform(0.0, 0.5) : rng.uniform(0.5, 1.0);
      case Calibration::Uniform: return rng.uniform();
    }
    return rng.uniform();
  };
  auto random_class = [&] { return static_cast<CategoryId>(1 + rng.index(budget.classes)); };
  auto other_class = [&](CategoryId c) {
    CategoryId o = static_cast<CategoryId>(1 + rng.index(budget.classes - 1));
    return o >= c ? o + 1 : o;
  };

  AnnotationId next_ann = 1;
  std::int64_t ordinal = 0;
  auto add_gt = [&](ImageId img, CategoryId cat, const Box& b, bool crowd) {
    GroundTruth g;
    g.id = next_ann++;
    g.image_id = img;
    g.category_id = cat;
    g.box = b;
    g.is_crowd = crowd;
    if (budget.mode == Mode::Mask) {
      g.mask = rle_from_box(b, kImageSide, kImageSide);
      g.area = static_cast<double>(rle_area(*g.mask));
    } else {
      g.area = b.area();
    }
    ds.annotations.push_back(std::move(g));
  };
  auto add_det = [&](ImageId img, CategoryId cat, const Box& b, double s) {
    Detection d;
    d.image_id = img;
    d.category_id = cat;
    d.score = s;
    d.box = b;
    if (budget.mode == Mode::Mask) d.mask = rle_from_box(b, kImageSide, kImageSide);
    d.ordinal = ordinal++;
    out.detections.detections.push_back(std::move(d));
  };

  std::size_t tp_index = 0;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const std::size_t cell = cells[i];
    const ImageId img = static_cast<ImageId>(cell / per_image + 1);
    const std::uint32_t col = static_cast<std::uint32_t>(cell % per_image % kGrid);
    const std::uint32_t row = static_cast<std::uint32_t>(cell % per_image / kGrid);

    // Base box with room to its right for a shifted copy.
    Box base, shifted;
    const Slot slot = slots[i];
    for (;;) {
      const std::uint32_t w = rng.between(8, kMaxSide), h = rng.between(8, kMaxSide);
      const std::uint32_t ox = rng.between(kMargin, kCell - kMargin - 2 * w);
      const std::uint32_t oy = rng.between(kMargin, kCell - kMargin - h);
      base = {static_cast<double>(col * kCell + ox), static_cast<double>(row * kCell + oy),
              static_cast<double>(w), static_cast<double>(h)};
      bool ok = true;
      switch (slot) {
        case Slot::Tp:
        case Slot::Cls:
        case Slot::IgnoredCls:
          ok = ShiftedBox(base, budget.t_f, 2.0, rng, shifted);
          break;
        case Slot::Loc:
          ok = ShiftedBox(base, budget.t_b, budget.t_f, rng, shifted);
          break;
        default:
          shifted = base;
      }
      if (ok) break;
    }

    const CategoryId cat = random_class();
    switch (slot) {
      case Slot::Tp: {
        add_gt(img, cat, base, false);
        add_det(img, cat, shifted, score(true));
        ++out.expected_tp;
        for (std::size_t k = 0; k < dupes_at[tp_index]; ++k) {
          Box dup;
          while (!ShiftedBox(base, budget.t_f, 2.0, rng, dup)) {}
          add_det(img, cat, dup, score(false));
        }
        for (std::size_t k = 0; k < boths_at[tp_index]; ++k) {
          Box both;
          while (!ShiftedBox(base, budget.t_b, budget.t_f, rng, both)) {}
          add_det(img, other_class(cat), both, score(false));
        }
        ++tp_index;
        break;
      }
      case Slot::Cls:
        add_gt(img, cat, base, false);
        add_det(img, other_class(cat), shifted, score(false));
        break;
      case Slot::Loc:
        add_gt(img, cat, base, false);
        add_det(img, cat, shifted, score(false));
        break;
      case Slot::Bkg:
        add_det(img, cat, base, score(false));
        break;
      case Slot::Missed:
        add_gt(img, cat, base, false);
        break;
      case Slot::Crowd: {
        add_gt(img, cat, base, true);
        Box inner{base.x + 1, base.y + 1, std::max(1.0, base.w - 2), std::max(1.0, base.h - 2)};
        add_det(img, cat, inner, rng.uniform());
        break;
      }
      case Slot::IgnoredCls: {
        add_gt(img, cat, base, false);
        add_det(img, rare, shifted, score(false));
        auto& ign = ds.images[static_cast<std::size_t>(img - 1)].ignored_categories;
        if (std::find(ign.begin(), ign.end(), rare) == ign.end()) ign.push_back(rare);
        break;
      }
    }
  }

  for (std::size_t k = 0; k < 6; ++k) out.expected[k] = budget.errors[k];
  if (budget.use_ignored) {
    out.expected[main_slot(ErrorKind::Cls)] += budget.ignored_cls;
  } else {
    out.expected[main_slot(ErrorKind::Missed)] += budget.ignored_cls;
  }
  out.detections.name = "synthetic-dets-" + std::to_string(budget.seed);
  return out;
}

// A random feasible budget within the given size limits.
inline ErrorBudget random_budget(std::uint64_t seed, std::size_t max_images = 50,
                                 std::size_t max_classes = 10, std::size_t max_dets = 500) {
  synth_detail::Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  ErrorBudget b;
  b.seed = seed;
  b.images = 1 + rng.index(max_images);
  b.classes = 2 + rng.index(std::max<std::size_t>(max_classes, 2) - 1);
  b.calibration = static_cast<Calibration>(rng.index(3));
  b.use_ignored = rng.index(2) == 1;
  const std::size_t capacity = b.images * synth_detail::kGrid * synth_detail::kGrid;
  const std::size_t budget_dets = std::min(max_dets, capacity);
  // Split the detection budget across slot kinds.
  auto take = [&](std::size_t hi) { return hi ? static_cast<std::size_t>(rng.index(hi + 1)) : 0; };
  std::size_t dets_left = budget_dets, cells_left = capacity;
  auto draw = [&](std::size_t dets_per, std::size_t cells_per, std::size_t cap) {
    std::size_t hi = cap;
    if (dets_per) hi = std::min(hi, dets_left / dets_per);
    if (cells_per) hi = std::min(hi, cells_left / cells_per);
    const std::size_t n = take(hi);
    dets_left -= n * dets_per;
    cells_left -= n * cells_per;
    return n;
  };
  const std::size_t scale = std::max<std::size_t>(1, budget_dets / 8);
  b.true_positives = draw(1, 1, scale * 2);
  b[ErrorKind::Cls] = draw(1, 1, scale);
  b[ErrorKind::Loc] = draw(1, 1, scale);
  b[ErrorKind::Bkg] = draw(1, 1, scale);
  b[ErrorKind::Missed] = draw(0, 1, scale);
  if (b.true_positives) {
    b[ErrorKind::Dupe] = draw(1, 0, scale / 2);
    b[ErrorKind::Both] = draw(1, 0, scale / 2);
  }
  b.crowd = draw(1, 1, 3);
  b.ignored_cls = draw(1, 1, 3);
  // At least one ground truth so that AP is defined.
  if (b.true_positives + b[ErrorKind::Cls] + b[ErrorKind::Loc] + b[ErrorKind::Missed] + b.ignored_cls == 0)
    b[ErrorKind::Missed] = 1;
  return b;
}

inline void save_synthetic(const SyntheticSet& s, const std::string& gt_path,
                           const std::string& dets_path) {
  save_ground_truth(s.ground_truth, gt_path);
  save_detections(s.detections, dets_path);
}

}  // namespace detdiag
