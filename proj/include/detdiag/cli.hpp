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

// Command-line driver. `run` never exits the process, so it can be tested in
// memory; tools/detdiag_cli.cpp is the thin main().
//
// Exit status: 0 success, 2 invalid input or flags, 1 internal failure.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <exception>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "detdiag/analysis.hpp"
#include "detdiag/io.hpp"
#include "detdiag/oracles.hpp"
#include "detdiag/report.hpp"
#include "detdiag/synth.hpp"

namespace detdiag::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitInput = 2;

enum class Format { Text, Structured, Svg };

inline Format parse_format(const std::string& s) {
  if (s == "text") return Format::Text;
  if (s == "structured" || s == "json") return Format::Structured;
  if (s == "svg") return Format::Svg;
  throw InputError("unknown format '" + s + "' (expected text, structured or svg)");
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ','))
    if (!cur.empty()) out.push_back(cur);
  return out;
}

inline std::vector<Oracle> parse_order(const std::string& s) {
  std::vector<Oracle> order;
  for (const auto& name : split_list(s)) order.push_back(parse_oracle(name));
  return order;
}

struct Options {
  std::string gt;
  std::vector<std::string> dets;
  std::vector<std::string> merge;
  std::string mode = "box";
  bool box_flag = false;
  bool mask_flag = false;
  double t_f = 0.5;
  double t_b = 0.1;
  std::size_t max_dets = 100;
  std::string missed = "remove_gt";
  bool use_ignored = false;
  std::string progressive;
  bool scale = false;
  std::string kinds = "cls,loc";
  std::vector<double> tf_list;
  std::string kind = "bkg";
  std::size_t k = 10;
  std::size_t top_k = 0;
  std::size_t trials = 200;
  std::string out;
  std::string format = "text";
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string model;
};

inline EvalConfig make_config(const Options& o) {
  EvalConfig cfg;
  cfg.t_f = o.t_f;
  cfg.t_b = o.t_b;
  cfg.max_dets_per_image = o.max_dets;
  cfg.mode = o.mask_flag ? Mode::Mask : o.box_flag ? Mode::Box : parse_mode(o.mode);
  cfg.missed_oracle = parse_missed_oracle(o.missed);
  cfg.use_ignored_for_errors = o.use_ignored;
  cfg.rng_seed = o.seed;
  cfg.threads = o.threads;
  cfg.validate();
  return cfg;
}

inline void emit(const Options& o, const std::string& content, std::ostream& out) {
  if (o.out.empty()) {
    out << content;
  } else {
    write_file(o.out, content);
  }
}

inline std::string stem(const std::string& path) {
  std::string s = path.substr(path.find_last_of("/\\") + 1);
  for (const char* ext : {".gz", ".json"})
    if (s.size() > std::strlen(ext) && s.compare(s.size() - std::strlen(ext), std::string::npos, ext) == 0)
      s.erase(s.size() - std::strlen(ext));
  return s;
}

// One model: ground truth, a single detections file and summary options.
inline ErrorReport analyse(const Dataset& gt, const std::string& dets_path, const std::string& model,
                           const EvalConfig& cfg, SummaryOptions opt) {
  const DetectionSet dets = load_detections(dets_path, gt, cfg);
  const ErrorAnalysis a(gt, dets, cfg);
  opt.model = model.empty() ? stem(dets_path) : model;
  return summarize(a, opt);
}

inline std::string render(const ErrorReport& r, Format f) {
  switch (f) {
    case Format::Text: return render_text(r);
    case Format::Structured: return to_structured(r);
    case Format::Svg: return render_svg(r);
  }
  return {};
}

inline void require(const Options& o, bool need_dets = true) {
  if (o.gt.empty()) throw InputError("--gt PATH is required");
  if (need_dets && o.dets.size() != 1) throw InputError("exactly one --dets PATH is required");
}

inline int cmd_eval(const Options& o, std::ostream& out) {
  require(o);
  const EvalConfig cfg = make_config(o);
  const Dataset gt = load_ground_truth(o.gt);
  SummaryOptions opt;
  opt.scale = o.scale;
  if (!o.progressive.empty()) opt.progressive = parse_order(o.progressive);
  opt.top_k = o.top_k;
  opt.sweep = o.tf_list;
  emit(o, render(analyse(gt, o.dets.front(), o.model, cfg, opt), parse_format(o.format)), out);
  return kExitOk;
}

inline int cmd_sweep(const Options& o, std::ostream& out) {
  require(o);
  if (o.tf_list.empty()) throw InputError("sweep needs --tf-list, e.g. 0.5,0.6,0.7,0.8,0.9");
  const EvalConfig cfg = make_config(o);
  const Dataset gt = load_ground_truth(o.gt);
  SummaryOptions opt;
  opt.sweep = o.tf_list;
  emit(o, render(analyse(gt, o.dets.front(), o.model, cfg, opt), parse_format(o.format)), out);
  return kExitOk;
}

inline int cmd_scale(const Options& o, std::ostream& out) {
  require(o);
  const EvalConfig cfg = make_config(o);
  const Dataset gt = load_ground_truth(o.gt);
  SummaryOptions opt;
  opt.scale = true;
  opt.scale_kinds.clear();
  for (const auto& k : split_list(o.kinds)) opt.scale_kinds.push_back(parse_error_kind(k));
  if (opt.scale_kinds.empty()) throw InputError("--kinds lists no error types");
  emit(o, render(analyse(gt, o.dets.front(), o.model, cfg, opt), parse_format(o.format)), out);
  return kExitOk;
}

inline int cmd_toperrors(const Options& o, std::ostream& out) {
  require(o);
  const EvalConfig cfg = make_config(o);
  const Dataset gt = load_ground_truth(o.gt);
  const ErrorKind kind = parse_error_kind(o.kind);
  if (main_slot(kind) >= 6) throw InputError("--kind must be one of the six main error types");
  SummaryOptions opt;
  opt.top_k = o.k;
  ErrorReport r = analyse(gt, o.dets.front(), o.model, cfg, opt);
  std::vector<TopError> keep;
  for (const auto& t : *r.top_errors)
    if (t.kind == kind) keep.push_back(t);
  r.top_errors = std::move(keep);
  emit(o, render(r, parse_format(o.format)), out);
  return kExitOk;
}

inline int cmd_compare(const Options& o, std::ostream& out) {
  std::vector<ErrorReport> reports;
  for (const auto& path : o.merge)
    for (auto& r : load_reports(path)) reports.push_back(std::move(r));
  if (!o.dets.empty()) {
    if (o.gt.empty()) throw InputError("--gt PATH is required with --dets");
    const EvalConfig cfg = make_config(o);
    const Dataset gt = load_ground_truth(o.gt);
    for (const auto& spec : o.dets) {
      const auto eq = spec.find('=');
      const std::string name = eq == std::string::npos ? stem(spec) : spec.substr(0, eq);
      const std::string path = eq == std::string::npos ? spec : spec.substr(eq + 1);
      if (name.empty() || path.empty()) throw InputError("--dets expects NAME=PATH, got '" + spec + "'");
      reports.push_back(analyse(gt, path, name, cfg, {}));
    }
  }
  if (reports.empty()) throw InputError("compare needs --dets NAME=PATH or --merge REPORT");
  switch (parse_format(o.format)) {
    case Format::Text: emit(o, render_comparison(reports), out); break;
    case Format::Structured: emit(o, comparison_to_structured(reports), out); break;
    case Format::Svg: throw InputError("svg output draws a single model; use eval --format svg per model");
  }
  return kExitOk;
}

// Error accounting and oracle identities checked on generated data.
inline int cmd_selftest(const Options& o, std::ostream& out) {
  constexpr double kTol = 1e-9;
  std::size_t failures = 0;
  std::size_t checks = 0;
  auto check = [&](bool ok, std::uint64_t seed, const std::string& what) {
    ++checks;
    if (!ok) {
      ++failures;
      out << "FAIL seed " << seed << ": " << what << "\n";
    }
  };
  for (std::size_t t = 0; t < o.trials; ++t) {
    const std::uint64_t seed = o.seed + t;
    ErrorBudget b = random_budget(seed);
    b.classes = 10;
    const SyntheticSet s = generate(b);
    EvalConfig cfg = s.config;
    cfg.threads = o.threads;
    cfg.missed_oracle = static_cast<MissedOracle>(t % 5);
    const ErrorAnalysis a(s.ground_truth, s.detections, cfg);
    check(a.ledger().counts() == s.expected, seed, "ledger counts differ from injected counts");
    const double joint = a.ap(OracleSet(std::span<const Oracle>(kMainOracles)));
    check(std::fabs(joint - 100) <= kTol, seed, "six main oracles give " + detail::Fixed(joint, 12));
    const double special = a.ap(OracleSet(std::span<const Oracle>(kSpecialOracles)));
    check(std::fabs(special - 100) <= kTol, seed, "FP+FN oracles give " + detail::Fixed(special, 12));
    for (Oracle x : kAllOracles)
      check(a.delta_ap(x) >= 0, seed, std::string("negative dAP for ") + to_string(x));
    const Oracle pa = kAllOracles[t % 8], pb = kAllOracles[(t + 3) % 8];
    const IdentityResiduals r = a.check_identities(pa, pb);
    check(std::fabs(r.sum_residual) <= kTol && std::fabs(r.chain_residual) <= kTol, seed,
          std::string("identity residual for ") + to_string(pa) + "," + to_string(pb));
  }
  out << (failures == 0 ? "PASS" : "FAIL") << " selftest: " << o.trials << " trials, " << checks
      << " checks, " << failures << " failures\n";
  return failures == 0 ? kExitOk : kExitInternal;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Detection and instance-segmentation error analysis"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub, bool multi_dets) {
    sub->add_option("--gt", o.gt, "ground-truth annotation file (.json or .json.gz)");
    if (multi_dets) {
      sub->add_option("--dets", o.dets, "NAME=PATH detection file; repeat per model");
      sub->add_option("--merge", o.merge, "previously exported structured report; repeatable");
    } else {
      sub->add_option("--dets", o.dets, "detection result file")->expected(1);
    }
    auto* mode = sub->add_option("--mode", o.mode, "box (bbox) or mask (segm)");
    auto* box = sub->add_flag("--box", o.box_flag, "same as --mode box");
    auto* mask = sub->add_flag("--mask", o.mask_flag, "same as --mode mask");
    mode->excludes(box)->excludes(mask);
    box->excludes(mask);
    sub->add_option("--tf", o.t_f, "foreground IoU threshold");
    sub->add_option("--tb", o.t_b, "background IoU threshold");
    sub->add_option("--max-dets", o.max_dets, "detections kept per image");
    sub->add_option("--missed-oracle", o.missed,
                    "remove_gt, score_one, score_neg_inf, score_mean or score_sampled");
    sub->add_flag("--use-ignored", o.use_ignored, "count Cls errors among ignored detections");
    sub->add_option("--out", o.out, "write the report here instead of standard output");
    sub->add_option("--format", o.format, "text, structured or svg");
    sub->add_option("--seed", o.seed, "seed for sampled oracles and listings");
    sub->add_option("--threads", o.threads, "worker threads (0: hardware count)");
    sub->add_option("--name", o.model, "model name shown in the report");
  };

  auto* eval = app.add_subcommand("eval", "AP and error breakdown for one model");
  common(eval, false);
  eval->add_option("--progressive", o.progressive, "comma-separated order of the six main oracles");
  eval->add_flag("--scale", o.scale, "add the per-scale table for cls and loc");
  eval->add_option("--top-k", o.top_k, "list the top K errors of each main type");
  eval->add_option("--tf-list", o.tf_list, "also sweep these t_f values")->delimiter(',');

  auto* sweep = app.add_subcommand("sweep", "errors at several foreground thresholds");
  common(sweep, false);
  sweep->add_option("--tf-list", o.tf_list, "comma-separated t_f values")->delimiter(',');

  auto* scale = app.add_subcommand("scale", "dAP by object scale");
  common(scale, false);
  scale->add_option("--kinds", o.kinds, "comma-separated error types");

  auto* compare = app.add_subcommand("compare", "several models against one ground truth");
  common(compare, true);

  auto* top = app.add_subcommand("toperrors", "most confident errors of one type");
  common(top, false);
  top->add_option("--kind", o.kind, "cls, loc, both, dupe, bkg or miss");
  top->add_option("--k", o.k, "how many to list");

  auto* self = app.add_subcommand("selftest", "error-accounting property suite on generated data");
  self->add_option("--trials", o.trials, "generated datasets");
  self->add_option("--seed", o.seed, "first seed");
  self->add_option("--threads", o.threads, "worker threads (0: hardware count)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << " (run with --help for usage)\n";
    return kExitInput;
  }

  try {
    if (eval->parsed()) return cmd_eval(o, out);
    if (sweep->parsed()) return cmd_sweep(o, out);
    if (scale->parsed()) return cmd_scale(o, out);
    if (compare->parsed()) return cmd_compare(o, out);
    if (top->parsed()) return cmd_toperrors(o, out);
    if (self->parsed()) return cmd_selftest(o, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  err << "error: no subcommand\n";
  return kExitInput;
}

}  // namespace detdiag::cli
