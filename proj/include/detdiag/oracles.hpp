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

// Counterfactual "fix" transforms and the dAP accounting built on them.
//
// Every oracle is applied against the original error ledger; a set of
// oracles is applied simultaneously. AP is always recomputed from scratch on
// the transformed ranked lists, and every dAP is measured from the vanilla
// AP unless explicitly requested otherwise (progressive mode).

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "detdiag/apcore.hpp"
#include "detdiag/dataset.hpp"
#include "detdiag/errors.hpp"
#include "detdiag/parallel.hpp"

namespace detdiag {

enum class Oracle { Cls, Loc, Both, Dupe, Bkg, Missed, FalsePositive, FalseNegative };

inline constexpr std::array<Oracle, 6> kMainOracles = {
    Oracle::Cls, Oracle::Loc, Oracle::Both, Oracle::Dupe, Oracle::Bkg, Oracle::Missed};
inline constexpr std::array<Oracle, 2> kSpecialOracles = {Oracle::FalsePositive,
                                                          Oracle::FalseNegative};
inline constexpr std::array<Oracle, 8> kAllOracles = {
    Oracle::Cls, Oracle::Loc,    Oracle::Both,          Oracle::Dupe,
    Oracle::Bkg, Oracle::Missed, Oracle::FalsePositive, Oracle::FalseNegative};

inline const char* to_string(Oracle o) {
  return to_string(static_cast<ErrorKind>(static_cast<int>(o)));
}

inline Oracle parse_oracle(const std::string& s) {
  return static_cast<Oracle>(static_cast<int>(parse_error_kind(s)));
}

inline Oracle oracle_for(ErrorKind k) { return static_cast<Oracle>(static_cast<int>(k)); }

// A set of oracles to apply together. Adding one twice is an error: each
// transform is single-shot against the original ledger.
class OracleSet {
 public:
  OracleSet() = default;
  OracleSet(std::initializer_list<Oracle> oracles) {
    for (Oracle o : oracles) add(o);
  }
  explicit OracleSet(std::span<const Oracle> oracles) {
    for (Oracle o : oracles) add(o);
  }

  OracleSet& add(Oracle o) {
    if (contains(o))
      throw InputError(std::string("oracle '") + to_string(o) + "' applied twice");
    bits_ |= bit(o);
    return *this;
  }
  bool contains(Oracle o) const { return (bits_ & bit(o)) != 0; }
  bool empty() const { return bits_ == 0; }
  OracleSet with(Oracle o) const {
    OracleSet s = *this;
    return s.add(o);
  }

 private:
  static std::uint32_t bit(Oracle o) { return 1u << static_cast<int>(o); }
  std::uint32_t bits_ = 0;
};

// Restricts which error records an oracle may act on. An empty function
// admits everything. False-negative ground truths are offered as records of
// kind FalseNegative.
using RecordFilter = std::function<bool(const ErrorRecord&)>;

// One detection after an oracle transform.
struct FixedDetection {
  std::optional<std::size_t> source;  // original index; empty for injected
  std::size_t category = 0;           // category slot
  std::optional<std::size_t> gt;      // matched ground truth, if a TP
  bool relocated = false;             // geometry replaced by the ground truth's
  bool ignored = false;
  double score = 0;
  int tier = 1;
  std::int64_t ordinal = 0;
};

struct OracleOutcome {
  std::vector<FixedDetection> detections;
  std::vector<std::int64_t> n_gt;  // effective, per category slot

  std::vector<std::vector<RankedOutcome>> ranked() const {
    std::vector<std::vector<RankedOutcome>> out(n_gt.size());
    for (const auto& d : detections) {
      if (d.ignored) continue;
      out[d.category].push_back({d.score, d.tier, d.ordinal, d.gt.has_value()});
    }
    return out;
  }

  // Rebuilds a concrete detection list: suppressed detections dropped,
  // classes and geometry rewritten, injected detections appended.
  DetectionSet materialize(const EvalIndex& index) const {
    DetectionSet out;
    out.name = index.detections().name + " (oracle)";
    const auto& anns = index.ground_truth().annotations;
    for (const auto& f : detections) {
      Detection d;
      if (f.source) {
        d = index.detections().detections[*f.source];
      } else {
        const auto& g = anns[*f.gt];
        d.image_id = g.image_id;
        d.box = g.box;
        d.mask = g.mask;
      }
      d.category_id = index.categories()[f.category];
      d.score = std::clamp(f.score, 0.0, 1.0);
      d.ordinal = f.ordinal;
      if (f.relocated) {
        d.box = anns[*f.gt].box;
        if (anns[*f.gt].mask) d.mask = anns[*f.gt].mask;
      }
      out.detections.push_back(std::move(d));
    }
    return out;
  }
};

struct IdentityResiduals {
  double delta_a = 0;
  double delta_b = 0;
  double delta_ab = 0;        // joint, from vanilla
  double delta_a_given_b = 0;  // AP_{a,b} - AP_b
  // dAP_a + dAP_b - dAP_{a,b} - (dAP_a - dAP_{a|b})
  double sum_residual = 0;
  // dAP_{a,b} - dAP_{a|b} - dAP_b
  double chain_residual = 0;
};

struct DeltaReport {
  double vanilla_ap = 0;
  std::array<double, 6> main{};     // indexed like kMainOracles
  std::array<double, 2> special{};  // FP, FN
  double joint_main_ap = 0;
  double joint_special_ap = 0;
};

// Matching, error ledger and vanilla AP at the operating threshold t_f, plus
// every oracle computation on top of them. References the dataset and
// detections, which must outlive it. All const members are thread-safe.
class ErrorAnalysis {
 public:
  ErrorAnalysis(const Dataset& gt, const DetectionSet& dets, EvalConfig cfg)
      : cfg_(std::move(cfg)),
        index_(std::make_unique<EvalIndex>(gt, dets, cfg_.mode)) {
    cfg_.validate();
    table_ = match(*index_, cfg_.t_f, std::nullopt, cfg_.threads);
    ledger_ = classify_errors(*index_, table_, cfg_);
    vanilla_ = ranked_outcomes(*index_, table_);
    vanilla_ap_ = mean_ap(*index_, vanilla_, index_->n_gt());
  }

  const EvalConfig& config() const { return cfg_; }
  const EvalIndex& index() const { return *index_; }
  const MatchTable& table() const { return table_; }
  const ErrorLedger& ledger() const { return ledger_; }
  double vanilla_ap() const { return vanilla_ap_; }

  OracleOutcome apply(const OracleSet& set, const RecordFilter& filter = {}) const {
    const auto& dets = index_->detections().detections;
    const auto& anns = index_->ground_truth().annotations;
    auto pass = [&](const ErrorRecord& r) { return !filter || filter(r); };

    std::vector<std::uint8_t> removed(dets.size(), 0);
    for (const auto& r : ledger_.records) {
      if (!r.det || !pass(r)) continue;
      const bool suppress =
          (r.kind == ErrorKind::Both && set.contains(Oracle::Both)) ||
          (r.kind == ErrorKind::Dupe && set.contains(Oracle::Dupe)) ||
          (r.kind == ErrorKind::Bkg && set.contains(Oracle::Bkg)) ||
          (set.contains(Oracle::FalsePositive) && !r.from_ignored);
      if (suppress) removed[*r.det] = 1;
    }

    // Cls / Loc fixes: each target keeps only its highest-ranked claimant,
    // counting a detection that already matched it.
    std::vector<std::optional<std::size_t>> fixed_gt(dets.size());
    std::vector<std::uint8_t> relocated(dets.size(), 0);
    std::vector<std::vector<std::size_t>> claimants(anns.size());
    std::vector<std::size_t> targets;
    for (const auto& r : ledger_.records) {
      if (!r.det || removed[*r.det] || !pass(r)) continue;
      const bool fix = (r.kind == ErrorKind::Cls && set.contains(Oracle::Cls)) ||
                       (r.kind == ErrorKind::Loc && set.contains(Oracle::Loc));
      if (!fix) continue;
      if (claimants[*r.gt].empty()) targets.push_back(*r.gt);
      claimants[*r.gt].push_back(*r.det);
      relocated[*r.det] = r.kind == ErrorKind::Loc;
    }
    std::vector<std::uint8_t> fixed_target(anns.size(), 0);
    for (std::size_t g : targets) {
      auto& c = claimants[g];
      if (auto holder = table_.gt_det[g]; holder && !removed[*holder]) c.push_back(*holder);
      std::size_t winner = c.front();
      for (std::size_t d : c)
        if (index_->ranks_before(d, winner)) winner = d;
      for (std::size_t d : c)
        if (d != winner) removed[d] = 1;
      if (!table_.is_tp(winner)) {
        fixed_gt[winner] = g;
        fixed_target[g] = 1;
      }
    }

    // Effective ground-truth counts and injected detections.
    OracleOutcome out;
    out.n_gt = index_->n_gt();
    std::vector<std::uint8_t> gt_removed(anns.size(), 0);
    auto drop_gt = [&](std::size_t g) {
      if (gt_removed[g]) return;
      gt_removed[g] = 1;
      --out.n_gt[index_->gt_category(g)];
    };
    if (set.contains(Oracle::FalseNegative)) {
      for (std::size_t g = 0; g < anns.size(); ++g) {
        if (anns[g].is_crowd || table_.gt_det[g] || fixed_target[g]) continue;
        ErrorRecord fn;
        fn.kind = ErrorKind::FalseNegative;
        fn.gt = g;
        fn.area = anns[g].area;
        if (pass(fn)) drop_gt(g);
      }
    }
    std::vector<std::size_t> injected;
    if (set.contains(Oracle::Missed)) {
      for (const auto& r : ledger_.records) {
        if (r.kind != ErrorKind::Missed || !pass(r) || gt_removed[*r.gt]) continue;
        if (cfg_.missed_oracle == MissedOracle::RemoveGt) {
          drop_gt(*r.gt);
        } else {
          injected.push_back(*r.gt);
        }
      }
    }

    out.detections.reserve(dets.size() + injected.size());
    for (std::size_t i = 0; i < dets.size(); ++i) {
      if (removed[i]) continue;
      FixedDetection f;
      f.source = i;
      f.score = dets[i].score;
      f.ordinal = dets[i].ordinal;
      if (fixed_gt[i]) {
        f.gt = fixed_gt[i];
        f.category = index_->gt_category(*fixed_gt[i]);
        f.relocated = relocated[i] != 0;
      } else {
        f.category = index_->det_category(i);
        f.gt = table_.det_gt[i];
        f.ignored = table_.det_ignored[i] != 0;
      }
      out.detections.push_back(f);
    }
    if (!injected.empty()) inject_missed(injected, out);
    return out;
  }

  double ap(const OracleSet& set, const RecordFilter& filter = {}) const {
    if (set.empty()) return vanilla_ap_;
    const OracleOutcome o = apply(set, filter);
    return mean_ap(*index_, o.ranked(), o.n_gt);
  }

  // dAP_o = AP_o - AP, always from the unmodified model.
  double delta_ap(Oracle o, const RecordFilter& filter = {}) const {
    return ap(OracleSet{o}, filter) - vanilla_ap_;
  }
  double delta_ap(const OracleSet& set, const RecordFilter& filter = {}) const {
    return ap(set, filter) - vanilla_ap_;
  }

  // Progressive accounting, kept only to demonstrate its bias: element i is
  // AP after oracles [0, i] minus AP after oracles [0, i-1]. `order` must be a
  // permutation of the six main oracles.
  std::vector<double> delta_ap_progressive(std::span<const Oracle> order) const {
    if (order.size() != kMainOracles.size())
      throw InputError("progressive order must list each of the six main oracles once");
    OracleSet seen;
    for (Oracle o : order) {
      if (o == Oracle::FalsePositive || o == Oracle::FalseNegative)
        throw InputError("progressive order may only contain the six main oracles");
      seen.add(o);
    }
    std::vector<double> cumulative(order.size());
    parallel_for(order.size(), cfg_.threads, [&](std::size_t i) {
      OracleSet prefix;
      for (std::size_t k = 0; k <= i; ++k) prefix.add(order[k]);
      cumulative[i] = ap(prefix);
    });
    std::vector<double> out(order.size());
    double prev = vanilla_ap_;
    for (std::size_t i = 0; i < order.size(); ++i) {
      out[i] = cumulative[i] - prev;
      prev = cumulative[i];
    }
    return out;
  }

  IdentityResiduals check_identities(Oracle a, Oracle b) const {
    if (a == b) throw InputError("identity check needs two distinct oracles");
    const double ap_a = ap(OracleSet{a});
    const double ap_b = ap(OracleSet{b});
    const double ap_ab = ap(OracleSet{a, b});
    IdentityResiduals r;
    r.delta_a = ap_a - vanilla_ap_;
    r.delta_b = ap_b - vanilla_ap_;
    r.delta_ab = ap_ab - vanilla_ap_;
    r.delta_a_given_b = ap_ab - ap_b;
    r.sum_residual = r.delta_a + r.delta_b - r.delta_ab - (r.delta_a - r.delta_a_given_b);
    r.chain_residual = r.delta_ab - r.delta_a_given_b - r.delta_b;
    return r;
  }

  DeltaReport delta_report() const {
    DeltaReport rep;
    rep.vanilla_ap = vanilla_ap_;
    std::array<double, 10> v{};
    parallel_for(v.size(), cfg_.threads, [&](std::size_t i) {
      if (i < kAllOracles.size()) {
        v[i] = delta_ap(kAllOracles[i]);
      } else if (i == 8) {
        v[i] = ap(OracleSet(std::span<const Oracle>(kMainOracles)));
      } else {
        v[i] = ap(OracleSet(std::span<const Oracle>(kSpecialOracles)));
      }
    });
    for (std::size_t i = 0; i < 6; ++i) rep.main[i] = v[i];
    rep.special = {v[6], v[7]};
    rep.joint_main_ap = v[8];
    rep.joint_special_ap = v[9];
    return rep;
  }

 private:
  void inject_missed(const std::vector<std::size_t>& missed, OracleOutcome& out) const {
    const auto& dets = index_->detections().detections;
    const std::size_t n_cat = index_->categories().size();
    std::vector<std::vector<double>> scores(n_cat);
    for (std::size_t i = 0; i < dets.size(); ++i)
      scores[index_->det_category(i)].push_back(dets[i].score);
    std::mt19937_64 rng(cfg_.rng_seed);
    std::int64_t next_ordinal = 0;
    for (const auto& d : dets) next_ordinal = std::max(next_ordinal, d.ordinal + 1);
    for (std::size_t g : missed) {
      const std::size_t cat = index_->gt_category(g);
      FixedDetection f;
      f.gt = g;
      f.category = cat;
      f.relocated = true;
      f.ordinal = next_ordinal++;
      const auto& pool = scores[cat];
      switch (cfg_.missed_oracle) {
        case MissedOracle::ScoreOne:
          f.score = 1.0;
          f.tier = 0;
          break;
        case MissedOracle::ScoreNegInf:
          f.score = 0.0;
          f.tier = 2;
          break;
        case MissedOracle::ScoreMean: {
          double sum = 0;
          for (double s : pool) sum += s;
          f.score = pool.empty() ? 0.0 : sum / static_cast<double>(pool.size());
          break;
        }
        case MissedOracle::ScoreSampled:
          f.score = pool.empty() ? 0.0 : pool[detail::UniformIndex(rng, pool.size())];
          break;
        case MissedOracle::RemoveGt:
          break;
      }
      out.detections.push_back(f);
    }
  }

  EvalConfig cfg_;
  std::unique_ptr<EvalIndex> index_;
  MatchTable table_;
  ErrorLedger ledger_;
  std::vector<std::vector<RankedOutcome>> vanilla_;
  double vanilla_ap_ = 0;
};

}  // namespace detdiag
