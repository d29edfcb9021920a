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

// Error reports: assembly, fixed-width text, the versioned structured
// document and SVG charts.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "detdiag/analysis.hpp"
#include "detdiag/apcore.hpp"
#include "detdiag/errors.hpp"
#include "detdiag/io.hpp"
#include "detdiag/oracles.hpp"
#include "json.hpp"

namespace detdiag {

// Bumped whenever a field changes meaning or a numeric definition changes.
inline constexpr int kReportSchemaVersion = 1;

struct TopError {
  ErrorKind kind = ErrorKind::Bkg;
  ImageId image_id = 0;
  CategoryId category_id = 0;
  std::optional<std::int64_t> detection;  // input ordinal
  std::optional<AnnotationId> annotation;
  double score = 0;
  double iou_same = 0;
  double iou_other = 0;
  double area = 0;

  bool operator==(const TopError&) const = default;
};

struct Progressive {
  std::vector<Oracle> order;
  std::vector<double> delta;

  bool operator==(const Progressive&) const = default;
};

struct ErrorReport {
  int schema_version = kReportSchemaVersion;
  std::string model;
  std::string dataset;
  // Echo of the evaluation settings; `threads` is never recorded.
  EvalConfig config;
  std::vector<double> ap;  // vanilla mAP per config.iou_thresholds entry
  double ap_mean = 0;      // over those thresholds
  double ap_tf = 0;        // vanilla mAP at t_f, the base of every dAP
  std::array<double, 6> main{};
  std::array<double, 2> special{};
  std::array<std::size_t, 6> counts{};
  std::size_t fp_count = 0;
  std::size_t fn_count = 0;
  std::optional<ScaleTable> scale;
  std::optional<std::vector<SweepRow>> sweep;
  std::optional<Progressive> progressive;
  std::optional<std::vector<TopError>> top_errors;

  bool operator==(const ErrorReport&) const = default;
};

struct SummaryOptions {
  std::string model;
  bool scale = false;
  std::vector<ErrorKind> scale_kinds = {ErrorKind::Cls, ErrorKind::Loc};
  std::vector<double> sweep;              // empty: no sweep
  std::vector<Oracle> progressive;        // empty: no progressive table
  std::size_t top_k = 0;                  // per main kind; 0: none
};

inline ErrorReport summarize(const ErrorAnalysis& a, const SummaryOptions& opt = {}) {
  const EvalConfig& cfg = a.config();
  ErrorReport r;
  r.model = opt.model;
  r.dataset = a.index().ground_truth().name;
  r.config = cfg;
  r.config.threads = 0;

  const EvalResult ev = evaluate(a.index(), cfg.iou_thresholds, cfg.threads);
  r.ap = ev.map;
  r.ap_mean = ev.map_mean;
  r.ap_tf = a.vanilla_ap();

  const DeltaReport d = a.delta_report();
  r.main = d.main;
  r.special = d.special;
  r.counts = a.ledger().counts();
  const SpecialSets s = split_special(a.ledger());
  r.fp_count = s.false_positives.size();
  r.fn_count = s.false_negatives.size();

  if (opt.scale) r.scale = scale_report(a, opt.scale_kinds);
  if (!opt.sweep.empty())
    r.sweep = threshold_sweep(a.index().ground_truth(), a.index().detections(), cfg, opt.sweep);
  if (!opt.progressive.empty())
    r.progressive = Progressive{opt.progressive, a.delta_ap_progressive(opt.progressive)};
  if (opt.top_k > 0) {
    const auto& dets = a.index().detections().detections;
    const auto& anns = a.index().ground_truth().annotations;
    std::vector<TopError> top;
    for (ErrorKind k : kMainKinds) {
      for (const auto& rec : top_errors(a.ledger(), k, opt.top_k, cfg.rng_seed)) {
        TopError t;
        t.kind = k;
        if (rec.det) {
          t.image_id = dets[*rec.det].image_id;
          t.category_id = dets[*rec.det].category_id;
          t.detection = dets[*rec.det].ordinal;
        }
        if (rec.gt) {
          t.annotation = anns[*rec.gt].id;
          if (!rec.det) {
            t.image_id = anns[*rec.gt].image_id;
            t.category_id = anns[*rec.gt].category_id;
          }
        }
        t.score = rec.score;
        t.iou_same = rec.iou_same;
        t.iou_other = rec.iou_other;
        t.area = rec.area;
        top.push_back(t);
      }
    }
    r.top_errors = std::move(top);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Text

namespace detail {

inline std::string Fixed(double v, int decimals = 1) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  std::string s(buf);
  // A tiny negative residual must not print as "-0.0".
  if (s.find_first_not_of("-0.") == std::string::npos && s[0] == '-') s.erase(0, 1);
  return s;
}

inline std::string PadLeft(const std::string& s, std::size_t w) {
  return s.size() >= w ? s : std::string(w - s.size(), ' ') + s;
}

inline std::string PadRight(const std::string& s, std::size_t w) {
  return s.size() >= w ? s : s + std::string(w - s.size(), ' ');
}

inline std::string Row(const std::vector<std::string>& cells, std::size_t w = 5) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += " | ";
    out += PadLeft(cells[i], w);
  }
  return out;
}

inline std::vector<std::string> MainHeader() {
  std::vector<std::string> h{"AP"};
  for (ErrorKind k : kMainKinds) h.push_back(to_string(k));
  return h;
}

inline std::vector<std::string> MainValues(double ap, const std::array<double, 6>& main) {
  std::vector<std::string> v{Fixed(ap)};
  for (double x : main) v.push_back(Fixed(x));
  return v;
}

}  // namespace detail

// Fixed-width summary; numbers to one decimal. A pure function of the report.
inline std::string render_text(const ErrorReport& r) {
  using namespace detail;
  std::ostringstream o;
  o << "model:   " << (r.model.empty() ? "-" : r.model) << "\n";
  o << "dataset: " << (r.dataset.empty() ? "-" : r.dataset) << "\n";
  o << "mode: " << to_string(r.config.mode) << "  t_f: " << Fixed(r.config.t_f, 2)
    << "  t_b: " << Fixed(r.config.t_b, 2) << "  max dets: " << r.config.max_dets_per_image
    << "  missed oracle: " << to_string(r.config.missed_oracle)
    << (r.config.use_ignored_for_errors ? "  use-ignored" : "") << "\n\n";

  o << "AP over IoU thresholds: " << Fixed(r.ap_mean) << "\n";
  {
    std::vector<std::string> h, v;
    for (std::size_t i = 0; i < r.ap.size(); ++i) {
      h.push_back(Fixed(r.config.iou_thresholds[i], 2));
      v.push_back(Fixed(r.ap[i]));
    }
    if (!h.empty()) o << Row(h) << "\n" << Row(v) << "\n";
  }
  o << "\nmain errors (dAP at t_f)\n";
  o << Row(MainHeader()) << "\n" << Row(MainValues(r.ap_tf, r.main)) << "\n";
  o << "\nspecial errors (dAP at t_f)\n";
  o << Row({"FP", "FN"}) << "\n" << Row({Fixed(r.special[0]), Fixed(r.special[1])}) << "\n";
  o << "\ncounts\n";
  {
    std::vector<std::string> h, v;
    for (ErrorKind k : kMainKinds) {
      h.push_back(to_string(k));
      v.push_back(std::to_string(r.counts[main_slot(k)]));
    }
    h.push_back("FP");
    v.push_back(std::to_string(r.fp_count));
    h.push_back("FN");
    v.push_back(std::to_string(r.fn_count));
    o << Row(h) << "\n" << Row(v) << "\n";
  }

  if (r.scale) {
    o << "\ndAP by object scale\n";
    std::vector<std::string> h{"kind"};
    for (ScaleBin b : kScaleBins) h.push_back(to_string(b));
    o << Row(h) << "\n";
    for (std::size_t k = 0; k < r.scale->kinds.size(); ++k) {
      std::vector<std::string> v{to_string(r.scale->kinds[k])};
      for (double x : r.scale->delta[k]) v.push_back(Fixed(x));
      o << Row(v) << "\n";
    }
  }
  if (r.sweep) {
    o << "\nthreshold sweep\n";
    auto h = MainHeader();
    h.insert(h.begin(), "t_f");
    h.push_back("FP");
    h.push_back("FN");
    o << Row(h) << "\n";
    for (const auto& row : *r.sweep) {
      auto v = MainValues(row.ap, row.main);
      v.insert(v.begin(), Fixed(row.t_f, 2));
      v.push_back(Fixed(row.special[0]));
      v.push_back(Fixed(row.special[1]));
      o << Row(v) << "\n";
    }
  }
  if (r.progressive) {
    o << "\nprogressive dAP (order-dependent)\n";
    std::vector<std::string> h, v;
    for (std::size_t i = 0; i < r.progressive->order.size(); ++i) {
      h.push_back(to_string(r.progressive->order[i]));
      v.push_back(Fixed(r.progressive->delta[i]));
    }
    o << Row(h) << "\n" << Row(v) << "\n";
  }
  if (r.top_errors && !r.top_errors->empty()) {
    o << "\ntop errors\n";
    o << Row({"kind", "image", "cat", "det", "gt", "score", "iou_s", "iou_o", "area"}, 7) << "\n";
    for (const auto& t : *r.top_errors) {
      o << Row({to_string(t.kind), std::to_string(t.image_id), std::to_string(t.category_id),
                t.detection ? std::to_string(*t.detection) : "-",
                t.annotation ? std::to_string(*t.annotation) : "-", Fixed(t.score, 3),
                Fixed(t.iou_same, 3), Fixed(t.iou_other, 3), Fixed(t.area, 0)},
               7)
        << "\n";
    }
  }
  return o.str();
}

// Side-by-side table for several models.
inline std::string render_comparison(const std::vector<ErrorReport>& reports) {
  using namespace detail;
  std::size_t name_w = 5;
  for (const auto& r : reports) name_w = std::max(name_w, r.model.size());
  std::ostringstream o;
  auto h = MainHeader();
  h.push_back("FP");
  h.push_back("FN");
  o << PadRight("model", name_w) << " | " << Row(h) << "\n";
  for (const auto& r : reports) {
    auto v = MainValues(r.ap_tf, r.main);
    v.push_back(Fixed(r.special[0]));
    v.push_back(Fixed(r.special[1]));
    o << PadRight(r.model, name_w) << " | " << Row(v) << "\n";
  }
  return o.str();
}

// ---------------------------------------------------------------------------
// Structured document

using ordered_json = nlohmann::ordered_json;

inline ordered_json to_json(const ErrorReport& r) {
  ordered_json j;
  j["schema_version"] = r.schema_version;
  j["meta"] = {{"model", r.model}, {"dataset", r.dataset}, {"mode", to_string(r.config.mode)}};
  j["config"] = {{"t_f", r.config.t_f},
                 {"t_b", r.config.t_b},
                 {"iou_thresholds", r.config.iou_thresholds},
                 {"max_dets_per_image", r.config.max_dets_per_image},
                 {"missed_oracle", to_string(r.config.missed_oracle)},
                 {"use_ignored_for_errors", r.config.use_ignored_for_errors},
                 {"seed", r.config.rng_seed}};
  j["ap"] = {{"per_threshold", r.ap}, {"mean", r.ap_mean}, {"at_tf", r.ap_tf}};

  ordered_json main = ordered_json::object(), counts = ordered_json::object();
  for (ErrorKind k : kMainKinds) {
    main[to_string(k)] = r.main[main_slot(k)];
    counts[to_string(k)] = r.counts[main_slot(k)];
  }
  counts["fp"] = r.fp_count;
  counts["fn"] = r.fn_count;
  j["errors"] = {{"main", main},
                 {"special", {{"fp", r.special[0]}, {"fn", r.special[1]}}},
                 {"counts", counts}};

  if (r.scale) {
    ordered_json s = ordered_json::object();
    std::vector<std::string> bins;
    for (ScaleBin b : kScaleBins) bins.push_back(to_string(b));
    s["bins"] = bins;
    s["lower_area"] = kScaleBinLower;
    ordered_json rows = ordered_json::array();
    for (std::size_t k = 0; k < r.scale->kinds.size(); ++k)
      rows.push_back({{"kind", to_string(r.scale->kinds[k])},
                      {"delta", r.scale->delta[k]},
                      {"counts", r.scale->counts[k]}});
    s["rows"] = rows;
    j["scale"] = s;
  }
  if (r.sweep) {
    ordered_json rows = ordered_json::array();
    for (const auto& row : *r.sweep) {
      ordered_json m = ordered_json::object();
      for (ErrorKind k : kMainKinds) m[to_string(k)] = row.main[main_slot(k)];
      rows.push_back({{"t_f", row.t_f},
                      {"ap", row.ap},
                      {"main", m},
                      {"special", {{"fp", row.special[0]}, {"fn", row.special[1]}}}});
    }
    j["sweep"] = rows;
  }
  if (r.progressive) {
    std::vector<std::string> order;
    for (Oracle o : r.progressive->order) order.push_back(to_string(o));
    j["progressive"] = {{"order", order}, {"delta", r.progressive->delta}};
  }
  if (r.top_errors) {
    ordered_json rows = ordered_json::array();
    for (const auto& t : *r.top_errors) {
      ordered_json e;
      e["kind"] = to_string(t.kind);
      e["image_id"] = t.image_id;
      e["category_id"] = t.category_id;
      e["detection"] = t.detection ? ordered_json(*t.detection) : ordered_json(nullptr);
      e["annotation"] = t.annotation ? ordered_json(*t.annotation) : ordered_json(nullptr);
      e["score"] = t.score;
      e["iou_same"] = t.iou_same;
      e["iou_other"] = t.iou_other;
      e["area"] = t.area;
      rows.push_back(e);
    }
    j["top_errors"] = rows;
  }
  return j;
}

inline std::string to_structured(const ErrorReport& r) { return to_json(r).dump(2) + "\n"; }

namespace detail {

template <std::size_t N>
std::array<double, N> NumberArray(const Reader& rd, const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != N) rd.fail(where, "expected " + std::to_string(N) + " numbers");
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = rd.number(v[i], where + "/" + std::to_string(i));
  return out;
}

inline std::vector<double> NumberList(const Reader& rd, const json& v, const std::string& where) {
  if (!v.is_array()) rd.fail(where, "expected array");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(rd.number(v[i], where + "/" + std::to_string(i)));
  return out;
}

inline std::string String(const Reader& rd, const json& v, const std::string& where) {
  if (!v.is_string()) rd.fail(where, "expected string");
  return v.get<std::string>();
}

inline std::array<double, 6> MainMap(const Reader& rd, const json& obj, const std::string& where) {
  std::array<double, 6> out{};
  for (ErrorKind k : kMainKinds)
    out[main_slot(k)] = rd.number(rd.field(obj, to_string(k), where), where + "/" + to_string(k));
  return out;
}

inline std::array<double, 2> SpecialMap(const Reader& rd, const json& obj, const std::string& where) {
  return {rd.number(rd.field(obj, "fp", where), where + "/fp"),
          rd.number(rd.field(obj, "fn", where), where + "/fn")};
}

template <typename F>
auto Wrap(const Reader& rd, const std::string& where, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ParseError&) {
    throw;
  } catch (const InputError& e) {
    rd.fail(where, e.what());
  }
}

}  // namespace detail

inline ErrorReport report_from_json(const json& j, const std::string& path = "<report>") {
  using namespace detail;
  const Reader rd{path};
  if (!j.is_object()) rd.fail("", "expected a report object");
  ErrorReport r;
  r.schema_version = static_cast<int>(rd.integer(rd.field(j, "schema_version", ""), "/schema_version"));
  if (r.schema_version < 1 || r.schema_version > kReportSchemaVersion)
    rd.fail("/schema_version", "unsupported schema version " + std::to_string(r.schema_version));

  const json& meta = rd.field(j, "meta", "");
  r.model = String(rd, rd.field(meta, "model", "/meta"), "/meta/model");
  r.dataset = String(rd, rd.field(meta, "dataset", "/meta"), "/meta/dataset");
  r.config.mode = Wrap(rd, "/meta/mode",
                       [&] { return parse_mode(String(rd, rd.field(meta, "mode", "/meta"), "/meta/mode")); });

  const json& cfg = rd.field(j, "config", "");
  r.config.t_f = rd.number(rd.field(cfg, "t_f", "/config"), "/config/t_f");
  r.config.t_b = rd.number(rd.field(cfg, "t_b", "/config"), "/config/t_b");
  r.config.iou_thresholds = NumberList(rd, rd.field(cfg, "iou_thresholds", "/config"), "/config/iou_thresholds");
  r.config.max_dets_per_image = static_cast<std::size_t>(
      rd.integer(rd.field(cfg, "max_dets_per_image", "/config"), "/config/max_dets_per_image"));
  r.config.missed_oracle = Wrap(rd, "/config/missed_oracle", [&] {
    return parse_missed_oracle(String(rd, rd.field(cfg, "missed_oracle", "/config"), "/config/missed_oracle"));
  });
  const json& ui = rd.field(cfg, "use_ignored_for_errors", "/config");
  if (!ui.is_boolean()) rd.fail("/config/use_ignored_for_errors", "expected boolean");
  r.config.use_ignored_for_errors = ui.get<bool>();
  const json& seed = rd.field(cfg, "seed", "/config");
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0))
    rd.fail("/config/seed", "expected non-negative integer");
  r.config.rng_seed = seed.get<std::uint64_t>();

  const json& ap = rd.field(j, "ap", "");
  r.ap = NumberList(rd, rd.field(ap, "per_threshold", "/ap"), "/ap/per_threshold");
  if (r.ap.size() != r.config.iou_thresholds.size())
    rd.fail("/ap/per_threshold", "length differs from config/iou_thresholds");
  r.ap_mean = rd.number(rd.field(ap, "mean", "/ap"), "/ap/mean");
  r.ap_tf = rd.number(rd.field(ap, "at_tf", "/ap"), "/ap/at_tf");

  const json& errors = rd.field(j, "errors", "");
  r.main = MainMap(rd, rd.field(errors, "main", "/errors"), "/errors/main");
  r.special = SpecialMap(rd, rd.field(errors, "special", "/errors"), "/errors/special");
  const json& counts = rd.field(errors, "counts", "/errors");
  auto count = [&](const char* key) {
    const auto v = rd.integer(rd.field(counts, key, "/errors/counts"), std::string("/errors/counts/") + key);
    if (v < 0) rd.fail(std::string("/errors/counts/") + key, "negative count");
    return static_cast<std::size_t>(v);
  };
  for (ErrorKind k : kMainKinds) r.counts[main_slot(k)] = count(to_string(k));
  r.fp_count = count("fp");
  r.fn_count = count("fn");

  if (auto it = j.find("scale"); it != j.end()) {
    ScaleTable t;
    const json& rows = rd.array(*it, "rows", "/scale");
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::string w = "/scale/rows/" + std::to_string(i);
      t.kinds.push_back(Wrap(rd, w + "/kind", [&] {
        return parse_error_kind(String(rd, rd.field(rows[i], "kind", w), w + "/kind"));
      }));
      t.delta.push_back(NumberArray<5>(rd, rd.field(rows[i], "delta", w), w + "/delta"));
      const auto c = NumberArray<5>(rd, rd.field(rows[i], "counts", w), w + "/counts");
      std::array<std::size_t, 5> cc{};
      for (std::size_t b = 0; b < 5; ++b) cc[b] = static_cast<std::size_t>(c[b]);
      t.counts.push_back(cc);
    }
    r.scale = std::move(t);
  }
  if (auto it = j.find("sweep"); it != j.end()) {
    if (!it->is_array()) rd.fail("/sweep", "expected array");
    std::vector<SweepRow> rows;
    for (std::size_t i = 0; i < it->size(); ++i) {
      const json& row = (*it)[i];
      const std::string w = "/sweep/" + std::to_string(i);
      SweepRow s;
      s.t_f = rd.number(rd.field(row, "t_f", w), w + "/t_f");
      s.ap = rd.number(rd.field(row, "ap", w), w + "/ap");
      s.main = MainMap(rd, rd.field(row, "main", w), w + "/main");
      s.special = SpecialMap(rd, rd.field(row, "special", w), w + "/special");
      rows.push_back(s);
    }
    r.sweep = std::move(rows);
  }
  if (auto it = j.find("progressive"); it != j.end()) {
    Progressive p;
    const json& order = rd.array(*it, "order", "/progressive");
    for (std::size_t i = 0; i < order.size(); ++i) {
      const std::string w = "/progressive/order/" + std::to_string(i);
      p.order.push_back(Wrap(rd, w, [&] { return parse_oracle(String(rd, order[i], w)); }));
    }
    p.delta = NumberList(rd, rd.field(*it, "delta", "/progressive"), "/progressive/delta");
    if (p.delta.size() != p.order.size()) rd.fail("/progressive/delta", "length differs from order");
    r.progressive = std::move(p);
  }
  if (auto it = j.find("top_errors"); it != j.end()) {
    if (!it->is_array()) rd.fail("/top_errors", "expected array");
    std::vector<TopError> rows;
    for (std::size_t i = 0; i < it->size(); ++i) {
      const json& e = (*it)[i];
      const std::string w = "/top_errors/" + std::to_string(i);
      TopError t;
      t.kind = Wrap(rd, w + "/kind", [&] { return parse_error_kind(String(rd, rd.field(e, "kind", w), w + "/kind")); });
      t.image_id = rd.integer(rd.field(e, "image_id", w), w + "/image_id");
      t.category_id = rd.integer(rd.field(e, "category_id", w), w + "/category_id");
      if (const json& d = rd.field(e, "detection", w); !d.is_null()) t.detection = rd.integer(d, w + "/detection");
      if (const json& a = rd.field(e, "annotation", w); !a.is_null()) t.annotation = rd.integer(a, w + "/annotation");
      t.score = rd.number(rd.field(e, "score", w), w + "/score");
      t.iou_same = rd.number(rd.field(e, "iou_same", w), w + "/iou_same");
      t.iou_other = rd.number(rd.field(e, "iou_other", w), w + "/iou_other");
      t.area = rd.number(rd.field(e, "area", w), w + "/area");
      rows.push_back(t);
    }
    r.top_errors = std::move(rows);
  }
  return r;
}

inline ErrorReport load_report(const std::string& path) {
  return report_from_json(parse_json(read_file(path), path), path);
}

// Several models side by side, one structured document.
inline std::string comparison_to_structured(const std::vector<ErrorReport>& reports) {
  ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  ordered_json models = ordered_json::array();
  for (const auto& r : reports) models.push_back(to_json(r));
  j["models"] = models;
  return j.dump(2) + "\n";
}

// Accepts either a single report or a comparison document.
inline std::vector<ErrorReport> load_reports(const std::string& path) {
  const json j = parse_json(read_file(path), path);
  if (j.is_object() && j.contains("models")) {
    const detail::Reader rd{path};
    const json& models = rd.array(j, "models", "");
    std::vector<ErrorReport> out;
    for (std::size_t i = 0; i < models.size(); ++i) {
      try {
        out.push_back(report_from_json(models[i], path));
      } catch (const ParseError& e) {
        throw ParseError(path, "/models/" + std::to_string(i) + e.where(), e.detail());
      }
    }
    return out;
  }
  return {report_from_json(j, path)};
}

// ---------------------------------------------------------------------------
// SVG

namespace detail {

inline const char* KindColor(std::size_t i) {
  static constexpr const char* kColors[] = {"#d62728", "#ff7f0e", "#9467bd", "#8c564b",
                                            "#1f77b4", "#2ca02c", "#7f7f7f", "#17becf"};
  return kColors[i % 8];
}

inline std::string Num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

inline std::string Escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

inline constexpr double kSvgBarMaxHeight = 200.0;

// Pie of the six main errors' relative contribution (dAP / sum dAP) next to
// bars of absolute dAP for the main and special errors. Bar heights are
// proportional to dAP with a shared scale.
inline std::string render_svg(const ErrorReport& r) {
  using namespace detail;
  const double pie_cx = 160, pie_cy = 170, pie_r = 110;
  const double bar_x0 = 340, bar_w = 30, bar_gap = 14, base_y = 290;
  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"720\" height=\"340\" "
       "viewBox=\"0 0 720 340\">\n";
  o << "<title>" << Escape(r.model.empty() ? "errors" : r.model) << "</title>\n";
  o << "<text x=\"20\" y=\"28\" font-family=\"sans-serif\" font-size=\"16\">"
    << Escape(r.model.empty() ? "model" : r.model) << "  AP " << Fixed(r.ap_tf) << "</text>\n";

  // Pie.
  double total = 0;
  for (double v : r.main) total += std::max(0.0, v);
  o << "<g class=\"pie\">\n";
  if (!(total > 0)) {
    o << "<text class=\"note\" x=\"" << Num(pie_cx) << "\" y=\"" << Num(pie_cy)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
         "no error contributes: pie undefined</text>\n";
  } else {
    double angle = -std::numbers::pi / 2;
    for (std::size_t i = 0; i < 6; ++i) {
      const double v = std::max(0.0, r.main[i]);
      if (!(v > 0)) continue;
      const double frac = v / total;
      const std::string kind = to_string(kMainKinds[i]);
      if (frac >= 1.0) {
        o << "<circle class=\"wedge\" data-kind=\"" << kind << "\" data-fraction=\"" << Num(frac)
          << "\" cx=\"" << Num(pie_cx) << "\" cy=\"" << Num(pie_cy) << "\" r=\"" << Num(pie_r)
          << "\" fill=\"" << KindColor(i) << "\"/>\n";
        break;
      }
      const double a1 = angle + 2 * std::numbers::pi * frac;
      o << "<path class=\"wedge\" data-kind=\"" << kind << "\" data-fraction=\"" << Num(frac)
        << "\" d=\"M " << Num(pie_cx) << " " << Num(pie_cy) << " L "
        << Num(pie_cx + pie_r * std::cos(angle)) << " " << Num(pie_cy + pie_r * std::sin(angle))
        << " A " << Num(pie_r) << " " << Num(pie_r) << " 0 " << (frac > 0.5 ? 1 : 0) << " 1 "
        << Num(pie_cx + pie_r * std::cos(a1)) << " " << Num(pie_cy + pie_r * std::sin(a1))
        << " Z\" fill=\"" << KindColor(i) << "\"/>\n";
      const double mid = (angle + a1) / 2;
      o << "<text class=\"label\" x=\"" << Num(pie_cx + 0.65 * pie_r * std::cos(mid)) << "\" y=\""
        << Num(pie_cy + 0.65 * pie_r * std::sin(mid))
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << kind << " "
        << Fixed(100 * frac) << "%</text>\n";
      angle = a1;
    }
  }
  o << "</g>\n";

  // Bars.
  std::vector<std::pair<std::string, double>> bars;
  for (ErrorKind k : kMainKinds) bars.emplace_back(to_string(k), r.main[main_slot(k)]);
  bars.emplace_back("fp", r.special[0]);
  bars.emplace_back("fn", r.special[1]);
  double top = 0;
  for (const auto& b : bars) top = std::max(top, b.second);
  o << "<g class=\"bars\">\n";
  o << "<line x1=\"" << Num(bar_x0 - 6) << "\" y1=\"" << Num(base_y) << "\" x2=\""
    << Num(bar_x0 + bars.size() * (bar_w + bar_gap)) << "\" y2=\"" << Num(base_y)
    << "\" stroke=\"#000\"/>\n";
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const double x = bar_x0 + i * (bar_w + bar_gap);
    const double v = std::max(0.0, bars[i].second);
    o << "<text x=\"" << Num(x + bar_w / 2) << "\" y=\"" << Num(base_y + 16)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << bars[i].first
      << "</text>\n";
    if (!(top > 0) || !(v > 0)) continue;
    const double h = kSvgBarMaxHeight * v / top;
    o << "<rect class=\"bar\" data-kind=\"" << bars[i].first << "\" data-value=\"" << Num(bars[i].second)
      << "\" x=\"" << Num(x) << "\" y=\"" << Num(base_y - h) << "\" width=\"" << Num(bar_w)
      << "\" height=\"" << Num(h) << "\" fill=\"" << KindColor(i) << "\"/>\n";
    o << "<text class=\"label\" x=\"" << Num(x + bar_w / 2) << "\" y=\"" << Num(base_y - h - 4)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
      << Fixed(bars[i].second) << "</text>\n";
  }
  o << "</g>\n</svg>\n";
  return o.str();
}

}  // namespace detdiag
